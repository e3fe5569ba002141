import cmath
import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from cubiq.errors import HypothesisViolated, InputError
from cubiq.field import AlgInt, FieldElem, MinkowskiVec, enumerate_residues, make_field
from cubiq.forms import CubicForm, bilinear_vector, parse_form
from cubiq.sums import (Box, complete_sum, count_N, count_N_h, exact_pair_count, fourth_power_chain,
                        mean_square, t_phase_list, t_sum, torus_average, verify_weyl_bound, weyl_phase_list,
                        weyl_sum, weyl_sum_folded)

fracs = st.fractions(0, 1, max_denominator=60)


def mixed(d):
    return parse_form(f"field d = {d}\nvars s = 2\nx1^2*x2 : 1 + w\nx2^3 : 2\nx1^3 : -1")


def exact_phase(C, alpha, x):
    """tr(alpha * C(x)) mod 1 with field arithmetic only."""
    val = C.value(x)
    v = FieldElem.from_int(val) if isinstance(val, AlgInt) else val
    prod = alpha.to_elem() * v
    return prod.trace() % 1


def brute_weyl(C, alpha, P, box):
    tot = 0j
    for c in itertools.product(*[range(a, b + 1) for a, b in box.ranges(P)]):
        x = [c[2 * i:2 * i + 2] for i in range(C.s)]
        tot += cmath.exp(2j * math.pi * float(exact_phase(C, alpha, x)))
    return tot


@given(st.sampled_from([1, 3]), fracs, fracs, st.integers(1, 2))
def test_weyl_sum_matches_brute(d, x1, x2, P):
    C = mixed(d)
    alpha = MinkowskiVec(C.F, x1, x2)
    box = Box.symmetric(2)
    assert abs(weyl_sum(C, alpha, P, box).value - brute_weyl(C, alpha, P, box)) < 1e-8


@given(st.sampled_from([1, 2, 3]), fracs, fracs)
def test_folded_equals_direct(d, x1, x2):
    C = CubicForm.diagonal(make_field(d), [1, (1, 1)])
    alpha = MinkowskiVec(C.F, x1, x2)
    direct = weyl_sum(C, alpha, 3)
    folded = weyl_sum_folded(C, alpha, 3)
    assert abs(direct.value - folded.value) < 1e-8
    assert abs(direct.value.imag) < 1e-8


def test_folding_rejects_unit_box():
    C = CubicForm.diagonal(make_field(1), [1])
    with pytest.raises(InputError):
        weyl_sum_folded(C, Fraction(1, 3), 2, Box.unit(1))


def test_weyl_sum_float_alpha_agrees():
    C = mixed(1)
    ex = weyl_sum(C, MinkowskiVec(C.F, Fraction(2, 7), Fraction(1, 5)), 2)
    ap = weyl_sum(C, MinkowskiVec.approx(C.F, 2 / 7, 1 / 5), 2)
    assert abs(ex.value - ap.value) < 1e-8


def test_weyl_sum_at_zero_counts_points():
    C = mixed(3)
    rep = weyl_sum(C, 0, 2)
    assert rep.value == rep.terms == 5 ** 4


def test_literal_six_scales_alpha():
    C = mixed(1)
    a = MinkowskiVec(C.F, Fraction(1, 13), Fraction(4, 11))
    assert abs(weyl_sum(C, a, 2, literal_six=True).value - weyl_sum(C, a * 6, 2).value) < 1e-8


def test_phase_list_sums_to_weyl_sum():
    C = mixed(1)
    a = MinkowskiVec(C.F, Fraction(3, 8), Fraction(1, 6))
    phases = weyl_phase_list(C, a, 1)
    total = sum(cmath.exp(2j * math.pi * float(p)) for p in phases)
    assert abs(total - weyl_sum(C, a, 1).value) < 1e-9


def brute_complete(C, gamma, N, offset=None):
    off = offset or [0] * (2 * C.s)
    tot = 0j
    alpha = gamma.to_minkowski()
    for c in itertools.product(range(N), repeat=2 * C.s):
        x = [(c[2 * i] + off[2 * i], c[2 * i + 1] + off[2 * i + 1]) for i in range(C.s)]
        tot += cmath.exp(2j * math.pi * float(exact_phase(C, alpha, x)))
    return tot


@pytest.mark.parametrize("d", [1, 3])
def test_complete_sum_routes_agree(d):
    F = make_field(d)
    C = CubicForm.diagonal(F, [1, (2, 1)])
    for cls in enumerate_residues(5, F)[1:12]:
        diag = complete_sum(C, cls)
        full = complete_sum(C, cls, use_diagonal=False)
        assert abs(diag.value - full.value) < 1e-7
        if cls.norm <= 3:
            assert abs(full.value - brute_complete(C, cls.gamma, cls.norm)) < 1e-7


@pytest.mark.parametrize("d", [1, 3])
def test_complete_sum_is_class_function(d):
    F = make_field(d)
    C = mixed(d)
    for cls in enumerate_residues(4, F)[1:8]:
        base = complete_sum(C, cls).value
        shifted = cls.gamma + AlgInt(F, 3, -2)
        assert abs(complete_sum(C, shifted).value - base) < 1e-7
        assert abs(complete_sum(C, cls, offset=[1, -2, 5, 0]).value - base) < 1e-7


def test_complete_sum_trivial_class():
    F = make_field(1)
    C = mixed(1)
    assert complete_sum(C, enumerate_residues(1, F)[0]).value == 1


def brute_count_N(C, alpha, P):
    m = P - 1
    pts = [[c[2 * i:2 * i + 2] for i in range(C.s)] for c in itertools.product(range(-m, m + 1), repeat=2 * C.s)]
    a = alpha.to_elem()
    n = 0
    for x in pts:
        for y in pts:
            B = bilinear_vector(C, x, y)
            ok = True
            for wj in (AlgInt(C.F, 1, 0), AlgInt(C.F, 0, 1)):
                for b in B:
                    t = (a * wj * b).trace()
                    if min(t % 1, 1 - t % 1) * P >= 1:
                        ok = False
            n += ok
    return n


@pytest.mark.parametrize("d", [1, 3])
def test_count_N_matches_brute(d):
    C = CubicForm.diagonal(make_field(d), [1])
    for alpha in (MinkowskiVec(C.F, Fraction(1, 7), Fraction(2, 5)), MinkowskiVec(C.F, Fraction(1, 2), 0)):
        assert count_N(C, alpha, 2) == brute_count_N(C, alpha, 2)


def test_count_N_is_sum_over_h():
    C = mixed(1)
    alpha = MinkowskiVec(C.F, Fraction(2, 9), Fraction(1, 4))
    total = sum(count_N_h(C, alpha, 2, [c[:2], c[2:]]) for c in itertools.product(range(-1, 2), repeat=4))
    assert count_N(C, alpha, 2) == total


def test_t_sum_matches_brute():
    C = mixed(3)
    beta = MinkowskiVec(C.F, Fraction(5, 12), Fraction(1, 3))
    h = [(1, 0), (0, -1)]
    box = Box.symmetric(2)
    want, n = 0j, 0
    for c in itertools.product(range(-2, 3), repeat=4):
        y = [c[:2], c[2:]]
        yh = [(y[i][0] + h[i][0], y[i][1] + h[i][1]) for i in range(2)]
        if max(abs(v) for p in yh for v in p) > 2:
            continue
        ph = exact_phase(C, beta, yh) - exact_phase(C, beta, y)
        want += cmath.exp(2j * math.pi * float(ph))
        n += 1
    rep = t_sum(C, h, beta, 2, box)
    assert rep.terms == n and abs(rep.value - want) < 1e-8
    assert len(t_phase_list(C, h, beta, 2, box)) == n


@pytest.mark.parametrize("d", [1, 3])
def test_torus_average_counts_zeros(d):
    C = CubicForm.diagonal(make_field(d), [1, -1, (0, 1)])
    zeros = 0
    for c in itertools.product(range(-1, 2), repeat=6):
        zeros += not C.value([c[:2], c[2:4], c[4:]])
    got = torus_average(C, 1)["value"]
    assert abs(got - zeros) < 1e-6


def test_mean_square_full_torus_is_pair_count():
    C = CubicForm.diagonal(make_field(1), [1, 2])
    ms = mean_square(C, (Fraction(1, 2), Fraction(1, 2)), Fraction(1, 2), 1, grid=128)
    assert abs(ms["value"] - exact_pair_count(C, 1)) < 1e-6 * exact_pair_count(C, 1)


def test_mean_square_rejects_kappa():
    C = CubicForm.diagonal(make_field(1), [1])
    with pytest.raises(InputError):
        mean_square(C, 0, 0.7, 1)


@given(st.sampled_from([1, 3]), fracs, fracs, st.integers(2, 3))
def test_fourth_power_chain_holds(d, x1, x2, P):
    C = mixed(d)
    out = fourth_power_chain(C, MinkowskiVec(C.F, x1, x2), P)
    assert out["lhs"] <= out["rhs"] * (1 + 1e-9)


def test_weyl_bound_guard():
    F = make_field(1)
    C = CubicForm.diagonal(F, [1, 1])
    big = [c for c in enumerate_residues(13, F) if c.norm == 13][0]
    theta = MinkowskiVec(F, Fraction(1, 1000), 0)
    with pytest.raises(HypothesisViolated):
        verify_weyl_bound(C, [(big, theta, 2)])
    rows = verify_weyl_bound(C, [(big, theta, 6)], constant=10.0)
    assert rows[0]["ratio"] < 10 and rows[0]["flagged"] is False
