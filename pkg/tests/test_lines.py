import itertools
from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, strategies as st

from cubiq.errors import InputError
from cubiq.field import make_field
from cubiq.forms import CubicForm, parse_form
from cubiq.lines import (LinearSpace, almost_prime_solution, beta, conjugate_descent, cubic_value,
                         expand_pencil, find_line_bounded, find_space_bounded, normalize_line, prime_ap_sieve,
                         vanishes_on, variables_for_rational_space)

from conftest import to_sym

kq = st.tuples(st.integers(-3, 3), st.integers(-3, 3))


def sym_form(C):
    xs = sp.symbols(f"x1:{C.s + 1}")
    return sum((to_sym(C.F, c) * xs[i] * xs[j] * xs[k] for (i, j, k), c in C.terms), sp.Integer(0)), xs


@st.composite
def pencils(draw):
    F = make_field(draw(st.sampled_from([1, 3])))
    s = draw(st.integers(2, 3))
    monos = list(itertools.combinations_with_replacement(range(s), 3))
    picked = draw(st.lists(st.sampled_from(monos), min_size=1, max_size=4, unique=True))
    C = CubicForm.from_dict(F, s, {mo: draw(kq) for mo in picked})
    m = draw(st.integers(1, 2))
    vecs = [[draw(kq) for _ in range(s)] for _ in range(m + 1)]
    return C, vecs[0], vecs[1:]


@given(pencils())
def test_pencil_matches_sympy(case):
    C, v, ws = case
    poly, xs = sym_form(C)
    ts = sp.symbols(f"t1:{len(ws) + 1}")
    point = [to_sym(C.F, v[i]) + sum(t * to_sym(C.F, w[i]) for t, w in zip(ts, ws)) for i in range(C.s)]
    want = sp.Poly(sp.expand(poly.subs(dict(zip(xs, point)), simultaneous=True)), *ts)
    got = expand_pencil(C, v, ws).polynomial()
    for mono, coeff in want.terms():
        assert sp.simplify(to_sym(C.F, got.pop(mono, (0, 0))) - coeff) == 0
    assert not got


@given(pencils())
def test_cubic_value_is_form_value(case):
    C, v, _ = case
    assert cubic_value(C, v) == tuple(Fraction(c) for c in C.value(v).coords)


def lines_exist(C, B):
    """Any pair of independent integer vectors of height <= B spanning a line on C = 0."""
    pts = [p for p in itertools.product(range(-B, B + 1), repeat=C.s) if any(p)]
    zeros = [p for p in pts if cubic_value(C, p) == (0, 0)]
    for v, w in itertools.combinations(zeros, 2):
        if sp.Matrix([v, w]).rank() < 2:
            continue
        # a binary cubic vanishing at four points of P^1 is zero
        if all(cubic_value(C, [t * a + u * b for a, b in zip(v, w)]) == (0, 0)
               for t, u in ((1, 1), (1, -1), (2, 1), (1, 2))):
            return True
    return False


@pytest.mark.parametrize("text,B", [
    ("field d = 1\nvars s = 3\nx1^3 : 1\nx2^3 : 1\nx3^3 : 1", 2),
    ("field d = 1\nvars s = 4\nx1^3 : 1\nx2^3 : 1\nx3^3 : 1\nx4^3 : 1", 1),
    ("field d = 3\nvars s = 3\nx1*x2*x3 : 1\nx1^3 : 1", 1),
    ("field d = 1\nvars s = 3\nx1^2*x2 : 1\nx3^3 : 2\nx2^2*x3 : -1", 1),
    ("field d = 1\nvars s = 3\nx1^3 : 1\nx1*x2^2 : -1\nx1*x3^2 : -1\nx2^3 : -1\nx2*x1^2 : 1\nx2*x3^2 : -1"
     "\nx3^3 : -1\nx3*x1^2 : 1\nx3*x2^2 : -1", 1),
])
def test_line_search_against_pair_scan(text, B):
    C = parse_form(text)
    line = find_line_bounded(C, B)
    assert (line is not None) == lines_exist(C, B)
    if line is not None:
        assert vanishes_on(C, line) and line.field_tag == "rational"
        assert max(abs(x[0]) for v in line.basis for x in v) <= B


def test_smooth_plane_cubic_has_no_line():
    C = parse_form("field d = 1\nvars s = 3\nx1^3 : 1\nx2^3 : 1\nx3^3 : 1")
    assert find_line_bounded(C, 2) is None


def test_planted_linear_factor_lines():
    # x1 * (x2^2 + x3^2 + x4^2): every found line lies in x1 = 0 or on the quadric
    C = parse_form("field d = 1\nvars s = 4\nx1*x2^2 : 1\nx1*x3^2 : 1\nx1*x4^2 : 1")
    line = find_line_bounded(C, 1)
    assert line is not None
    xs = sp.symbols("x1:5")
    quad = xs[1] ** 2 + xs[2] ** 2 + xs[3] ** 2
    t, u = sp.symbols("t u")
    v, w = line.rational_vectors()
    pt = {xs[i]: t * v[i] + u * w[i] for i in range(4)}
    assert (v[0] == 0 and w[0] == 0) or sp.expand(quad.subs(pt)) == 0


def test_find_plane():
    C = parse_form("field d = 3\nvars s = 4\nx1*x2*x3 : 1\nx1*x4^2 : 2")
    plane = find_space_bounded(C, 2, 1)
    assert plane is not None and plane.dim == 2 and vanishes_on(C, plane)
    assert sp.Matrix(plane.rational_vectors()).rank() == 3
    with pytest.raises(InputError):
        find_space_bounded(C, 0, 1)


def test_line_search_rejects_irrational_form():
    C = parse_form("field d = 1\nvars s = 3\nx1^3 : w\nx2^3 : 1")
    with pytest.raises(InputError):
        find_line_bounded(C, 1)


def test_descent_over_sqrt_minus_two():
    F = make_field(2)
    C = CubicForm.from_dict(F, 3, {(0, 1, 1): 1, (0, 2, 2): 2})
    V = LinearSpace(1, [[1, 0, 0], [0, (0, 1), 1]], "quadratic(2)")
    assert vanishes_on(C, V)
    res = conjugate_descent(C, V)
    assert res.status == "descended"
    assert res.space.field_tag == "rational" and vanishes_on(C, res.space)
    # C = x1 * N(x2 + sqrt(-2) x3) on W, so the rational line is x1 = 0
    assert sp.Matrix(res.space.rational_vectors() + [[0, 1, 0], [0, 0, 1]]).rank() == 2


def test_descent_fermat_surface():
    # x1^3 + ... + x4^3 over Q(sqrt(-3)) contains x1 = -z x2, x3 = -x4 with z = w - 1 a cube root of 1
    F = make_field(3)
    C = CubicForm.diagonal(F, [1, 1, 1, 1])
    V = LinearSpace(1, [[(1, -1), 1, 0, 0], [0, 0, 1, -1]], "quadratic(3)")
    assert vanishes_on(C, V)
    res = conjugate_descent(C, V)
    assert res.status == "descended" and vanishes_on(C, res.space)
    assert sp.Matrix(res.space.rational_vectors() + [[1, -1, 0, 0], [0, 0, 1, -1]]).rank() == 2
    # a line skew to its conjugate spans all of P^3 and is out of scope
    skew = LinearSpace(1, [[(1, -1), 1, 0, 0], [0, 0, (1, -1), 1]], "quadratic(3)")
    assert vanishes_on(C, skew)
    with pytest.raises(InputError):
        conjugate_descent(C, skew)


def test_descent_degenerate_and_rational_inputs():
    F = make_field(1)
    C = CubicForm.diagonal(F, [1, 0, 0, 0])
    V = LinearSpace(1, [[0, 1, (0, 1), 0], [0, 0, 1, (0, 1)]], "quadratic(1)")
    res = conjugate_descent(C, V)
    assert res.status == "degenerate_W" and "degenerate_W" in res.space.flags
    assert vanishes_on(C, res.space)
    R = LinearSpace(1, [[0, 1, 0, 0], [0, 0, 1, 0]])
    assert conjugate_descent(C, R).status == "rational_input"


def test_descent_rejects_bad_inputs():
    F = make_field(1)
    C = CubicForm.diagonal(F, [1, 1, 1])
    V = LinearSpace(1, [[1, 0, 0], [0, (0, 1), 1]], "quadratic(1)")
    with pytest.raises(InputError):
        conjugate_descent(C, V)
    Ck = CubicForm.from_dict(F, 3, {(0, 1, 1): (0, 1)})
    with pytest.raises(InputError):
        conjugate_descent(Ck, V)


PLANTED = "field d = 1\nvars s = 3\nx1^3 : 1\nx1*x2^2 : 1\nx1*x3^2 : 1\nx2*x1^2 : -1\nx2^3 : -1\nx2*x3^2 : -1" \
          "\nx3*x1^2 : -1\nx3*x2^2 : -1\nx3^3 : -1"


def test_normalize_planted_line():
    # (x1 - x2 - x3)(x1^2 + x2^2 + x3^2) vanishes on (2t, t + u, t - u)
    C = parse_form(PLANTED)
    a, b = [2, 1, 1], [0, 1, -1]
    assert vanishes_on(C, LinearSpace(1, [a, b]))
    nl = normalize_line(a, b, C)
    assert all(nl.active) and all(c != 0 for c in nl.c)
    pts = [nl.point(1, 0), nl.point(0, 1)]
    assert sp.Matrix([a, b] + pts).rank() == 2
    for t, u in itertools.product(range(-3, 4), repeat=2):
        assert cubic_value(C, nl.point(t, u)) == (0, 0)


def test_normalize_rejects_non_lines():
    C = parse_form("field d = 1\nvars s = 2\nx1^3 : 1\nx2^3 : -8")
    with pytest.raises(InputError):
        normalize_line([2, 1], [0, 1], C)
    with pytest.raises(InputError):
        normalize_line([1, 2], [2, 4])
    with pytest.raises(InputError):
        normalize_line([1, 2], [1])


@given(st.lists(st.integers(-5, 5), min_size=3, max_size=4), st.lists(st.integers(-5, 5), min_size=3, max_size=4))
def test_normalize_spans_same_line(a, b):
    n = min(len(a), len(b))
    a, b = a[:n], b[:n]
    if sp.Matrix([a, b]).rank() < 2:
        return
    nl = normalize_line(a, b)
    for i in range(n):
        if not nl.active[i]:
            assert nl.c[i] == 1 and nl.b[i] == 0 and nl.point(3, 5)[i] == 0
    assert sp.Matrix([a, b, nl.point(1, 0), nl.point(0, 1)]).rank() == 2


def test_inactive_slot_passthrough():
    C = parse_form("field d = 1\nvars s = 3\nx1*x2*x3 : 1")
    nl = normalize_line([1, 0, 2], [1, 0, -1], C)
    assert nl.active == [True, False, True] and nl.c[1] == 1
    sol = almost_prime_solution(C, nl)
    assert sol.primes[1] == 0 and sol.x[1] == 0
    assert all(sp.isprime(p) for p, act in zip(sol.primes, nl.active) if act)
    assert cubic_value(C, sol.x) == (0, 0)


def ap_scan(M, bound):
    """Progressions of 2M+1 primes ordered by last term, then d."""
    for last in sp.primerange(2, bound + 1):
        for d in range(1, last // (2 * M) + 1):
            if all(sp.isprime(last - k * d) for k in range(2 * M + 1)) and last - 2 * M * d >= 2:
                return last - M * d, d
    return None


@pytest.mark.parametrize("M,bound", [(1, 100), (2, 500), (3, 1000), (4, 100)])
def test_prime_sieve_matches_scan(M, bound):
    assert prime_ap_sieve(M, bound) == ap_scan(M, bound)


def test_prime_sieve_known_values():
    assert prime_ap_sieve(1, 100) == (5, 2)
    assert prime_ap_sieve(3, 1000) == (457, 150)
    assert prime_ap_sieve(4, 10 ** 7) == (1039, 210)
    for bad in (0, 5):
        with pytest.raises(InputError):
            prime_ap_sieve(bad, 100)


def test_almost_prime_on_diagonal_line():
    C = CubicForm.diagonal(make_field(1), [1, 1, 1, 1])
    line = find_line_bounded(C, 1)
    sol = almost_prime_solution(C, line, M=3, bound=1000)
    assert sol.ap == (457, 150)
    assert sum(x ** 3 for x in sol.x) == 0
    assert all(sp.isprime(p) for p in sol.primes)
    with pytest.raises(InputError):
        almost_prime_solution(C, line, M=5)


def test_thresholds():
    assert beta(1, 0) == 4 and beta(2, 0) == 8
    assert variables_for_rational_space(1) == 33
    assert variables_for_rational_space(2) == 53
