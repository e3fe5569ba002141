import itertools
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from cubiq.errors import InputError
from cubiq.field import (AlgInt, FieldElem, IdealRep, MinkowskiVec, all_ideals, denominator_ideal,
                         denominator_norm, dirichlet_batch, dirichlet_fractional, dirichlet_integral,
                         enumerate_residues, is_integral_by_trace, make_field, prime_divisors,
                         primes_above, shortest_element)

from conftest import to_sym

small = st.integers(-20, 20)
fields = st.sampled_from([1, 2, 3, 7, 11, 15]).map(make_field)


def test_make_field_bases():
    assert (make_field(1).t, make_field(1).nn, make_field(1).delta) == (0, 1, -4)
    assert (make_field(3).t, make_field(3).nn, make_field(3).delta) == (1, 1, -3)
    assert make_field(2).delta == -8
    assert make_field(7).delta == -7


@pytest.mark.parametrize("bad", [0, -1, 4, 12, 2.0, True])
def test_make_field_rejects(bad):
    with pytest.raises(InputError):
        make_field(bad)


@given(fields, small, small, small, small)
def test_product_matches_sympy(F, a1, a2, b1, b2):
    got = AlgInt(F, a1, a2) * AlgInt(F, b1, b2)
    want = sp.expand(to_sym(F, (a1, a2)) * to_sym(F, (b1, b2)))
    assert sp.simplify(to_sym(F, got.coords) - want) == 0


@given(fields, small, small, small, small)
def test_norm_multiplicative_and_conjugate(F, a1, a2, b1, b2):
    x, y = AlgInt(F, a1, a2), AlgInt(F, b1, b2)
    assert (x * y).norm() == x.norm() * y.norm()
    assert x * x.conj() == AlgInt(F, x.norm(), 0)
    assert x.trace() == (x + x.conj()).a1


@given(fields, small, small, st.integers(1, 30))
def test_field_elem_inverse(F, a1, a2, den):
    if not (a1 or a2):
        return
    g = FieldElem(AlgInt(F, a1, a2), den)
    one = g * g.inverse()
    assert one.coords == (1, 0)
    assert abs(complex(sp.N(to_sym(F, g.coords))) - g.to_minkowski().to_complex()) < 1e-9


@given(fields, small, small, st.integers(1, 12))
def test_denominator_ideal_by_membership(F, a1, a2, den):
    g = FieldElem(AlgInt(F, a1, a2), den)
    J = denominator_ideal(g)
    for x in itertools.product(range(-2 * den, 2 * den + 1), repeat=2):
        integral = (g * AlgInt(F, *x)).is_integral()
        assert J.contains(x) == integral
    r = g.reduced()
    assert int(denominator_norm(F, r.num.a1, r.num.a2, r.den)) == J.norm


@pytest.mark.parametrize("d,R", [(1, 10), (3, 12), (2, 9), (7, 8)])
def test_residue_classes_per_ideal(d, R):
    # exactly N(J) classes of K/O are killed by J
    F = make_field(d)
    classes = enumerate_residues(R, F)
    assert len({c.gamma for c in classes}) == len(classes)
    for J in all_ideals(F, R):
        killed = [c for c in classes if all(c.denom_ideal.contains(b) for b in J.basis())]
        assert len(killed) == J.norm


def test_residue_enumeration_rejects_small_R(gaussian):
    with pytest.raises(InputError):
        enumerate_residues(0.5, gaussian)


@pytest.mark.parametrize("d", [1, 3, 5])
def test_ideal_products_multiply_norms(d):
    F = make_field(d)
    ideals = all_ideals(F, 10)
    for I, J in itertools.product(ideals[:8], repeat=2):
        assert (I * J).norm == I.norm * J.norm


@pytest.mark.parametrize("d", [1, 2, 3, 5, 7])
def test_primes_above_degree_sum(d):
    F = make_field(d)
    for p in sp.primerange(2, 40):
        ps = primes_above(F, p)
        fs = sum(sp.log(P.norm, p) for P in ps)
        ram = F.delta % p == 0
        assert fs == (1 if ram else 2)
        if not ram and p > 2:
            split = sp.legendre_symbol(F.delta % p, p) == 1
            assert len(ps) == (2 if split else 1)


def test_prime_divisors_of_norm_ideal(eisenstein):
    J = IdealRep.generated_by(eisenstein, [(21, 0)])
    assert {P.norm for P in prime_divisors(J)} == {3, 7}


@pytest.mark.parametrize("d", [1, 2, 3])
def test_shortest_element_by_scan(d):
    F = make_field(d)
    for J in all_ideals(F, 30):
        got = shortest_element(J)
        pts = [c for c in itertools.product(range(-J.norm, J.norm + 1), repeat=2)
               if any(c) and J.contains(c)]
        h = min(max(abs(a), abs(b)) for a, b in pts)
        assert got.height() == h and J.contains(got)


@given(fields, st.fractions(max_denominator=30), st.fractions(max_denominator=30))
def test_trace_integrality(F, x1, x2):
    alpha = MinkowskiVec(F, x1, x2)
    v = is_integral_by_trace(alpha)
    T = F.trace_form
    direct = [Fraction(T[i][0] * x1 + T[i][1] * x2, F.delta) for i in range(2)]
    assert list(v.scaled_traces) == direct
    assert v.integral == all(t.denominator == 1 for t in direct)
    if v.integral:
        assert x1.denominator == 1 and x2.denominator == 1


def test_trace_integrality_needs_exact(gaussian):
    with pytest.raises(InputError):
        is_integral_by_trace(MinkowskiVec.approx(gaussian, 0.5, 0.5))


def _scan_best(F, alpha, Q, norm_cap=None):
    best = None
    for q in itertools.product(range(-Q, Q + 1), repeat=2):
        if not any(q) or (norm_cap is not None and F.norm_of(q) > norm_cap):
            continue
        prod = alpha * AlgInt(F, *q)
        err = max(abs(c - round(c)) for c in prod.coords)
        if best is None or err < best:
            best = err
    return best


@given(fields, st.fractions(0, 1, max_denominator=97), st.fractions(0, 1, max_denominator=97),
       st.integers(1, 6))
def test_dirichlet_integral_matches_scan(F, x1, x2, Q):
    alpha = MinkowskiVec(F, x1, x2)
    res = dirichlet_integral(alpha, Q)
    assert res.error == _scan_best(F, alpha, Q)
    assert res.error * Q <= 1
    assert 1 <= res.q.height() <= Q
    prod = alpha * res.q - res.a
    assert max(abs(c) for c in prod.coords) == res.error
    assert res.gamma_elem.to_minkowski() + res.theta == alpha


@given(fields, st.fractions(0, 1, max_denominator=97), st.fractions(0, 1, max_denominator=97),
       st.integers(1, 6))
def test_dirichlet_fractional_norm_bound(F, x1, x2, Q):
    alpha = MinkowskiVec(F, x1, x2)
    res = dirichlet_fractional(alpha, Q)
    assert res.gamma.norm <= Q * Q
    assert res.error == _scan_best(F, alpha, Q, Q * Q)
    assert res.gamma.norm <= res.q.norm()


def test_dirichlet_tie_break_prefers_smaller_norm(gaussian):
    # q = 2 and q = 1+i both give exact error 0 at alpha = (1+i)/2
    res = dirichlet_integral(MinkowskiVec(gaussian, Fraction(1, 2), Fraction(1, 2)), 2)
    assert res.error == 0 and res.q.coords == (1, 1)


def test_dirichlet_float_input_agrees(eisenstein):
    ex = dirichlet_integral(MinkowskiVec(eisenstein, Fraction(3, 7), Fraction(2, 11)), 5)
    ap = dirichlet_integral(MinkowskiVec.approx(eisenstein, 3 / 7, 2 / 11), 5)
    assert ex.q == ap.q and ex.a == ap.a


@pytest.mark.parametrize("d", [1, 3])
@pytest.mark.parametrize("fractional", [False, True])
def test_dirichlet_batch_agrees_with_scalar(d, fractional):
    F = make_field(d)
    D, Q = 37, 4
    rng = np.random.default_rng(5)
    n1, n2 = rng.integers(0, D, 50), rng.integers(0, D, 50)
    out = dirichlet_batch(F, n1, n2, D, Q, fractional=fractional)
    route = dirichlet_fractional if fractional else dirichlet_integral
    for b in range(50):
        res = route(MinkowskiVec(F, Fraction(int(n1[b]), D), Fraction(int(n2[b]), D)), Q)
        assert tuple(out["q"][b]) == res.q.coords
        assert tuple(out["a"][b]) == res.a.coords
        assert Fraction(int(out["err_num"][b]), D) == res.error
        if fractional:
            assert int(out["norm"][b]) == res.gamma.norm
