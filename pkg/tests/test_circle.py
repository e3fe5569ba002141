import itertools
import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cubiq.circle import (ArcParams, a_sum, asymptotic_report, brute_count, classify_arc, e_exponent_check,
                          exponent_ledger, load_ledger, major_arcs_disjoint, regime_vertices,
                          singular_integral, singular_series, torus_distance, verify_affine, LedgerEntry)
from cubiq.errors import InputError
from cubiq.field import MinkowskiVec, enumerate_residues, make_field
from cubiq.forms import CubicForm, parse_form
from cubiq.sums import Box, count_N_h


def test_arc_params_validation():
    for bad in ({"nu": Fraction(1, 6)}, {"nu": 0}, {"Q_exp": Fraction(8, 5)}):
        with pytest.raises(InputError):
            ArcParams(100, **bad)
    with pytest.raises(InputError):
        ArcParams(Fraction(1, 2))


@given(st.integers(2, 10 ** 6), st.fractions(0, Fraction(1, 100), max_denominator=10 ** 9))
def test_within_radius_matches_float(P, d):
    p = ArcParams(P)
    exact = p.within_radius(d)
    approx = float(d) < p.radius
    if abs(float(d) - p.radius) > 1e-9 * p.radius:
        assert exact == approx


def test_torus_distance_wraps():
    F = make_field(1)
    a = MinkowskiVec(F, Fraction(9, 10), Fraction(1, 20))
    g = enumerate_residues(1, F)[0].gamma
    assert torus_distance(a, g) == Fraction(1, 10)


def test_classify_arc_major_and_minor():
    F = make_field(1)
    params = ArcParams(4 ** 7)      # P^nu = 4: classes of norm <= 4
    assert major_arcs_disjoint(params, F)
    cls = [c for c in enumerate_residues(4, F) if c.norm == 2][0]
    near = cls.gamma.to_minkowski() + MinkowskiVec(F, Fraction(1, 10 ** 13), 0)
    kind, got = classify_arc(near, params)
    assert kind == "major" and got == cls
    assert classify_arc(MinkowskiVec(F, Fraction(1, 7), Fraction(2, 7)), params) == ("minor", None)


def test_series_trivial_truncation():
    C = CubicForm.diagonal(make_field(3), [1, 1, 1])
    out = singular_series(C, 1)
    assert out["value"] == 1 and out["classes"] == 1


@pytest.mark.parametrize("d", [1, 3])
def test_codifferent_classes_contribute_one(d):
    F = make_field(d)
    C = CubicForm.diagonal(F, [1, 2, -1, (1, 1)])
    out = singular_series(C, 6)
    T = F.trace_form
    dual = 0
    for cls in enumerate_residues(6, F):
        x = cls.gamma.coords
        # tr(gamma * c) is an integer for every integral c
        if all((T[i][0] * x[0] + T[i][1] * x[1]).denominator == 1 for i in range(2)):
            dual += 1
    assert dual == abs(F.delta)
    assert out["classes"] == sum(r["classes"] for r in out["per_norm"])
    assert abs(out["partial_sums"][-1][1] - out["value"]) < 1e-12


def test_series_diagonal_gaussian_value():
    C = CubicForm.diagonal(make_field(1), [1, 1, 1, 1])
    out = singular_series(C, 5)
    assert abs(out["value"] - 4) < 1e-9


def test_series_is_real_for_odd_forms():
    C = parse_form("field d = 3\nvars s = 2\nx1^2*x2 : 1\nx2^3 : 1 + w")
    assert abs(singular_series(C, 7)["value"].imag) < 1e-9


def integral_oracle(F, n=1500):
    """Density of x1^3 + x2^3 = 0 on the radius-1/4 box at (1, -1) by a 2D midpoint rule.

    x1 = -x2 is the only root in the box, and the basis-coordinate Jacobian of
    z -> z^3 is |3 z^2|^2.
    """
    t = (np.arange(n) + 0.5) / n * 0.5 - 0.25
    a1, a2 = np.meshgrid(-1 + t, t, indexing="ij")
    z = a1 + a2 * F.omega_complex
    return float(np.mean(1 / (9 * np.abs(z) ** 4)) * 0.25) / abs(F.delta)


@pytest.mark.parametrize("d", [1, 3])
def test_singular_integral_methods_against_oracle(d):
    F = make_field(d)
    C = CubicForm.diagonal(F, [1, 1])
    box = Box.centered(C, [(1, 0), (-1, 0)], Fraction(1, 4))
    ref = integral_oracle(F)
    dens = singular_integral(C, box, "density", samples=10 ** 6, seed=3)
    osc = singular_integral(C, box, "oscillatory", samples=10 ** 6, seed=3)
    assert not dens["nonconvergent"]
    assert abs(dens["value"] - ref) < 4 * dens["stderr"] + 0.01 * ref
    # the sinc kernel truncated at Z = 8 adds a small bias on top of sampling noise
    assert abs(osc["value"] - ref) < 4 * osc["stderr"] + 0.04 * ref


def test_singular_integral_reproducible_and_guarded():
    C = CubicForm.diagonal(make_field(1), [1, 1])
    box = Box.centered(C, [(1, 0), (-1, 0)], Fraction(1, 4))
    a = singular_integral(C, box, samples=10 ** 5, seed=9)
    b = singular_integral(C, box, samples=10 ** 5, seed=9)
    assert a == b
    with pytest.raises(InputError):
        singular_integral(C, Box.symmetric(2), samples=10)
    with pytest.raises(InputError):
        Box.centered(C, [(1, 0), (1, 0)], Fraction(1, 4))
    with pytest.raises(InputError):
        singular_integral(C, box, "trapezoid", samples=10)


def python_count(C, P):
    n = 0
    for c in itertools.product(range(-P, P + 1), repeat=2 * C.s):
        n += not C.value([c[2 * i:2 * i + 2] for i in range(C.s)])
    return n


@pytest.mark.parametrize("d", [1, 3])
def test_brute_count_paths_agree(d):
    F = make_field(d)
    C = CubicForm.diagonal(F, [1, -1, (0, 1)])
    direct = brute_count(C, 1, path="direct")
    assert direct == brute_count(C, 1, path="split") == python_count(C, 1)
    assert brute_count(C, 2, path="direct") == brute_count(C, 2, path="split")


def test_brute_count_split_needs_separable_form():
    C = parse_form("field d = 1\nvars s = 2\nx1^2*x2 : 1")
    with pytest.raises(InputError):
        brute_count(C, 1, path="split")
    assert brute_count(C, 1) == python_count(C, 1)


def test_asymptotic_report_rows():
    C = CubicForm.diagonal(make_field(1), [1, 1, 1, 1])
    rep = asymptotic_report(C, [1, 2], {"J": {"value": 2.0}})
    assert [r["N"] for r in rep["rows"]] == [brute_count(C, 1), brute_count(C, 2)]
    for r in rep["rows"]:
        assert r["sigma_hat"] == r["series"] * 2.0
        assert math.isclose(r["ratio"], r["N_scaled"] / r["sigma_hat"])


def test_a_sum_matches_manual():
    F = make_field(1)
    C = CubicForm.diagonal(F, [1])
    theta = MinkowskiVec(F, Fraction(1, 50), 0)
    out = a_sum(C, theta, 1, 1, 2)
    manual = 0.0
    for cls in enumerate_residues(4, F):
        if 1 < cls.norm <= 4:
            for h in itertools.product(range(-1, 2), repeat=2):
                manual += math.sqrt(count_N_h(C, cls.gamma.to_minkowski() + theta, 2, [h]))
    assert math.isclose(out["value"], manual)
    assert out["shifts"] == 9


def test_regime_vertices_square():
    cons = [({"x": Fraction(-1)}, "<="), ({"y": Fraction(-1)}, "<="),
            ({"x": Fraction(1), "const": Fraction(-1)}, "<="), ({"y": Fraction(1), "const": Fraction(-1)}, "<=")]
    verts = regime_vertices(cons, ["x", "y"])
    assert sorted((v["x"], v["y"]) for v in verts) == [(0, 0), (0, 1), (1, 0), (1, 1)]


def test_strict_inequality_on_excluded_face():
    # x < 1 on the half-open interval 0 <= x < 1: equality only where x < 1 is cut away
    entry = LedgerEntry("t", {"x": Fraction(1)}, {"const": Fraction(1)}, "<", "",
                        [({"x": Fraction(-1)}, "<="), ({"x": Fraction(1), "const": Fraction(-1)}, "<")])
    assert verify_affine(entry)[0]
    closed = LedgerEntry("t", {"x": Fraction(1)}, {"const": Fraction(1)}, "<", "",
                         [({"x": Fraction(-1)}, "<="), ({"x": Fraction(1), "const": Fraction(-1)}, "<=")])
    assert not verify_affine(closed)[0]


def grid_gap(r, e, n=2, steps=24):
    """Largest log gap over a rational grid, maximizing over S on a fine grid."""
    k = Fraction(r * n, 2)
    worst = None
    for i in range(steps + 1):
        rho = Fraction(3 * i, steps)
        for j in range(-steps, steps + 1):
            y = Fraction(3 * j, steps)
            xs = [-rho * Fraction(t, 48) for t in range(49)]
            lhs = max(-n * x + k * min(y, x) for x in xs)
            rhs = n * rho + k * y + n * e * min(Fraction(0), -rho - y)
            gap = lhs - rhs
            worst = gap if worst is None else max(worst, gap)
    return worst


@pytest.mark.parametrize("r", [0, 1, 2, 3, 6, 14])
def test_e_exponents_against_grid(r):
    e = Fraction(0) if r == 0 else Fraction(1, 2) if r == 1 else Fraction(1)
    assert e_exponent_check(r, e)[0]
    assert grid_gap(r, e) <= 0
    # sharp: a slightly larger exponent fails on both routes
    assert not e_exponent_check(r, e + Fraction(1, 10))[0]
    assert grid_gap(r, e + Fraction(1, 10)) > 0


def test_shipped_ledger_passes():
    rows = exponent_ledger()
    assert len(rows) == len(load_ledger()["entries"])
    assert all(r["pass"] for r in rows)
    sentinels = [r for r in rows if r["sentinel"]]
    assert len(sentinels) == 2 and not any(r["holds"] for r in sentinels)


def test_ledger_detects_a_broken_entry(tmp_path):
    data = load_ledger()
    data["entries"] = [{"name": "wrong", "anchor": "", "kind": "affine", "lhs": {"const": "2"},
                        "rhs": {"const": "1"}, "direction": "<=", "regime": []}]
    p = tmp_path / "ledger.json"
    p.write_text(json.dumps(data))
    rows = exponent_ledger(p)
    assert rows[0]["holds"] is False and rows[0]["pass"] is False
