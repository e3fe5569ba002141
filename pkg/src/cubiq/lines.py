"""Linear spaces on cubic hypersurfaces: pencils, bounded line search, conjugate descent, almost-prime zeros."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
import sympy

from .config import BUDGETS, check_budget
from .errors import BudgetExceeded, InputError
from .field import AlgInt, FieldElem, FieldSpec
from .forms import CubicForm

ZERO = (Fraction(0), Fraction(0))


# K-scalars are pairs (a, b) meaning a + b*omega with rational a, b.

def _k(x) -> tuple[Fraction, Fraction]:
    if isinstance(x, (FieldElem, AlgInt)):
        a, b = x.coords
        return Fraction(a), Fraction(b)
    if isinstance(x, (tuple, list)):
        return Fraction(x[0]), Fraction(x[1])
    return Fraction(x), Fraction(0)


def _kvec(v) -> tuple:
    return tuple(_k(x) for x in v)


def _add(a, b):
    return (a[0] + b[0], a[1] + b[1])


def _scale(c: Fraction, a):
    return (c * a[0], c * a[1])


def _kinv(F: FieldSpec, a):
    n = F.norm_of(a)
    if n == 0:
        raise ZeroDivisionError("inverse of zero")
    c = F.conj(a)
    return (Fraction(c[0]) / n, Fraction(c[1]) / n)


def _is_rational_vec(v) -> bool:
    return all(x[1] == 0 for x in v)


def trilinear(C: CubicForm, x, y, z):
    """The symmetric trilinear form T with T(x, x, x) = C(x), over K."""
    F = C.F
    acc = ZERO
    for idx, c in C.terms:
        part = ZERO
        for p in itertools.permutations(idx):
            part = _add(part, F.mul(F.mul(x[p[0]], y[p[1]]), z[p[2]]))
        acc = _add(acc, F.mul(_scale(Fraction(1, 6), part), c))
    return acc


def cubic_value(C: CubicForm, x):
    x = _kvec(x)
    return trilinear(C, x, x, x)


@dataclass(frozen=True)
class LinearSpace:
    """Projective linear space of dimension `dim`, spanned by dim + 1 exact vectors."""

    dim: int
    basis: tuple
    field_tag: str = "rational"
    flags: tuple = ()

    def __post_init__(self):
        basis = tuple(_kvec(v) for v in self.basis)
        object.__setattr__(self, "basis", basis)
        if len(basis) != self.dim + 1:
            raise InputError("a dimension-m space needs m + 1 basis vectors")
        if len({len(v) for v in basis}) != 1:
            raise InputError("basis vectors must have equal length")
        if self.field_tag == "rational" and not all(_is_rational_vec(v) for v in basis):
            raise InputError("rational space with irrational coordinates")
        if _rank_q([c for v in basis for c in [[x[0] for x in v], [x[1] for x in v]]]) < 1 and basis:
            raise InputError("basis vectors vanish")

    @property
    def s(self) -> int:
        return len(self.basis[0])

    def rational_vectors(self) -> list[list[Fraction]]:
        return [[x[0] for x in v] for v in self.basis]

    def to_json(self) -> dict:
        def enc(x):
            return str(x[0]) if x[1] == 0 else [str(x[0]), str(x[1])]
        return {"dim": self.dim, "field_tag": self.field_tag, "flags": list(self.flags),
                "basis": [[enc(x) for x in v] for v in self.basis]}


# -- pencils --------------------------------------------------------------

@dataclass
class PencilExpansion:
    """C(v + sum t_i w_i) = c0 + sum t_i Q_i + sum_{i <= j} t_i t_j L_ij + C(sum t_i w_i)."""

    c0: tuple
    quad: list
    lin: dict
    tail: dict
    m: int

    def polynomial(self) -> dict:
        poly: dict[tuple, tuple] = {}

        def put(e, c):
            poly[e] = _add(poly.get(e, ZERO), c)

        zero = (0,) * self.m
        put(zero, self.c0)
        for i, q in enumerate(self.quad):
            e = list(zero)
            e[i] += 1
            put(tuple(e), q)
        for (i, j), c in self.lin.items():
            e = list(zero)
            e[i] += 1
            e[j] += 1
            put(tuple(e), c)
        for e, c in self.tail.items():
            put(e, c)
        return {e: c for e, c in poly.items() if c != ZERO}

    def vanishes(self) -> bool:
        return not self.polynomial()


def expand_pencil(C: CubicForm, v, ws: Sequence) -> PencilExpansion:
    v = _kvec(v)
    ws = [_kvec(w) for w in ws]
    m = len(ws)
    c0 = trilinear(C, v, v, v)
    quad = [_scale(Fraction(3), trilinear(C, v, v, w)) for w in ws]
    lin = {}
    for i in range(m):
        for j in range(i, m):
            k = 3 if i == j else 6
            lin[(i, j)] = _scale(Fraction(k), trilinear(C, v, ws[i], ws[j]))
    tail = {}
    for combo in itertools.combinations_with_replacement(range(m), 3):
        e = [0] * m
        for i in combo:
            e[i] += 1
        mult = math.factorial(3) // math.prod(math.factorial(k) for k in e)
        tail[tuple(e)] = _scale(Fraction(mult), trilinear(C, *(ws[i] for i in combo)))
    return PencilExpansion(c0, quad, lin, tail, m)


def vanishes_on(C: CubicForm, space: LinearSpace) -> bool:
    v, *ws = space.basis
    return expand_pencil(C, v, ws).vanishes()


# -- bounded search -------------------------------------------------------

def _rational_tensor(C: CubicForm) -> np.ndarray:
    T = C.tensor
    if np.any(T[..., 1]):
        raise InputError("line search needs a form with rational coefficients")
    return T[..., 0].astype(object) if np.abs(T).max(initial=0) > 2 ** 20 else T[..., 0]


def _shell_points(s: int, B: int) -> np.ndarray:
    """Nonzero integer vectors of height <= B, one per +-pair, in (height, lex) order."""
    grid = np.array(list(itertools.product(range(-B, B + 1), repeat=s)), dtype=np.int64).reshape(-1, s)
    grid = grid[np.any(grid != 0, axis=1)]
    first = grid[np.arange(len(grid)), np.argmax(grid != 0, axis=1)]
    grid = grid[first > 0]
    h = np.abs(grid).max(axis=1)
    order = np.lexsort(tuple(grid[:, k] for k in reversed(range(s))) + (h,))
    return grid[order]


def _extensions(T: np.ndarray, basis: list[np.ndarray], W: np.ndarray) -> np.ndarray:
    """Mask of rows w of W such that C vanishes on span(basis, w), given it vanishes on span(basis)."""
    ok = np.ones(len(W), dtype=bool)
    for i, vi in enumerate(basis):
        Mi = np.einsum("ijk,i->jk", T, vi)
        ok &= np.einsum("nj,jk,nk->n", W, Mi, W) == 0
        for vj in basis[i:]:
            ok &= W @ (Mi @ vj) == 0
    rank = len(basis) + 1
    B = np.stack(basis)
    for n in np.flatnonzero(ok):
        if np.linalg.matrix_rank(np.vstack([B, W[n]]).astype(float)) < rank:
            ok[n] = False
    return ok


def find_space_bounded(C: CubicForm, m: int, B: int, cap: float | None = None) -> LinearSpace | None:
    """First projective m-space on C = 0 with a basis of height <= B, in search order.

    Bases are built by depth-first extension: each new vector comes later in
    (height, lex) order than the previous ones, so None certifies that no
    such space has a basis of height <= B.
    """
    if m < 1:
        raise InputError("m must be at least 1")
    T = _rational_tensor(C)
    cap = BUDGETS.pairs if cap is None else cap
    pts = _shell_points(C.s, B)
    check_budget("find_space_bounded(points)", len(pts), cap)
    vals = np.einsum("ijk,ni,nj,nk->n", T, pts, pts, pts)
    Z = pts[vals == 0]
    check_budget("find_space_bounded(pairs)", len(Z) * (len(Z) - 1) // 2, cap)

    def extend(basis: list[np.ndarray], start: int):
        if len(basis) == m + 1:
            return basis
        W = Z[start:]
        if not len(W):
            return None
        for n in np.flatnonzero(_extensions(T, basis, W)):
            found = extend(basis + [W[n]], start + n + 1)
            if found is not None:
                return found
        return None

    for a in range(len(Z)):
        found = extend([Z[a]], a + 1)
        if found is not None:
            space = LinearSpace(m, [[int(x) for x in v] for v in found], "rational")
            if not vanishes_on(C, space):
                raise AssertionError("search returned a space not on the hypersurface")
            return space
    return None


def find_line_bounded(C: CubicForm, B: int, cap: float | None = None) -> LinearSpace | None:
    """First line {v t + w u} with C(vt + wu) = 0 identically and heights <= B."""
    return find_space_bounded(C, 1, B, cap)


# -- rational linear algebra ----------------------------------------------

def _rref(rows: list[list[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    M = [list(r) for r in rows]
    pivots = []
    r = 0
    ncols = len(M[0]) if M else 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(M)) if M[i][c] != 0), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        inv = 1 / M[r][c]
        M[r] = [x * inv for x in M[r]]
        for i in range(len(M)):
            if i != r and M[i][c] != 0:
                f = M[i][c]
                M[i] = [x - f * y for x, y in zip(M[i], M[r])]
        pivots.append(c)
        r += 1
    return M[:r], pivots


def _rank_q(rows) -> int:
    rows = [[Fraction(x) for x in r] for r in rows]
    return len(_rref(rows)[0]) if rows else 0


def _kernel_q(rows: list[list[Fraction]], n: int) -> list[list[Fraction]]:
    R, piv = _rref(rows) if rows else ([], [])
    free = [c for c in range(n) if c not in piv]
    out = []
    for f in free:
        v = [Fraction(0)] * n
        v[f] = Fraction(1)
        for row, p in zip(R, piv):
            v[p] = -row[f]
        out.append(v)
    return out


def _kernel_k(F: FieldSpec, rows: list[list], n: int) -> list[list]:
    """Kernel over K by Gauss-Jordan elimination on K-scalars."""
    M = [list(r) for r in rows]
    pivots = []
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, len(M)) if M[i][c] != ZERO), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        inv = _kinv(F, M[r][c])
        M[r] = [F.mul(x, inv) for x in M[r]]
        for i in range(len(M)):
            if i != r and M[i][c] != ZERO:
                f = M[i][c]
                M[i] = [_add(x, _scale(Fraction(-1), F.mul(f, y))) for x, y in zip(M[i], M[r])]
        pivots.append(c)
        r += 1
    out = []
    for f in (c for c in range(n) if c not in pivots):
        v = [ZERO] * n
        v[f] = (Fraction(1), Fraction(0))
        for row, p in zip(M[:r], pivots):
            v[p] = _scale(Fraction(-1), row[f])
        out.append(v)
    return out


def _integral(v: list[Fraction]) -> list[int]:
    den = math.lcm(*(x.denominator for x in v))
    ints = [int(x * den) for x in v]
    g = math.gcd(*ints) or 1
    return [x // g for x in ints]


# -- conjugate descent ----------------------------------------------------

@dataclass
class DescentResult:
    space: LinearSpace
    status: str                  # "rational_input" | "descended" | "degenerate_W"
    W: list = field(default_factory=list)
    linear_form: list | None = None

    def to_json(self) -> dict:
        return {"status": self.status, "space": self.space.to_json(),
                "W": [[str(x) for x in w] for w in self.W],
                "linear_form": None if self.linear_form is None else [str(x) for x in self.linear_form]}


def _restricted_poly(C: CubicForm, W: list[list[Fraction]]) -> dict:
    """Rational coefficients of y -> C(sum y_j W_j)."""
    basis = [[(x, Fraction(0)) for x in w] for w in W]
    k = len(W)
    out = {}
    for combo in itertools.combinations_with_replacement(range(k), 3):
        e = [0] * k
        for i in combo:
            e[i] += 1
        mult = math.factorial(3) // math.prod(math.factorial(x) for x in e)
        val = _scale(Fraction(mult), trilinear(C, *(basis[i] for i in combo)))
        if val[1] != 0:
            raise InputError("form is not rational on the rational span")
        if val[0] != 0:
            out[tuple(e)] = val[0]
    return out


def _poly_mul_linear(q: dict, mu: list[Fraction], k: int) -> dict:
    out = {}
    for e, c in q.items():
        for j in range(k):
            if mu[j] == 0:
                continue
            f = list(e)
            f[j] += 1
            f = tuple(f)
            out[f] = out.get(f, Fraction(0)) + c * mu[j]
    return {e: c for e, c in out.items() if c != 0}


def conjugate_descent(C: CubicForm, V: LinearSpace) -> DescentResult:
    """A rational linear space of dimension V.dim on C = 0, from a K-space V on it.

    W is the rational span of V and its conjugate. On W, C factors as
    l * conj(l) * mu with l cutting out V; the kernel of the rational linear
    form mu is returned.
    """
    F = C.F
    if any(c[1] != 0 for _, c in C.terms):
        raise InputError("conjugate descent needs a form with rational coefficients")
    if not vanishes_on(C, V):
        raise InputError("C does not vanish identically on V")
    if all(_is_rational_vec(v) for v in V.basis):
        return DescentResult(LinearSpace(V.dim, V.basis, "rational"), "rational_input")
    m, s = V.dim, V.s
    parts = [[x[0] for x in v] for v in V.basis] + [[x[1] for x in v] for v in V.basis]
    W, _ = _rref(parts)
    if len(W) != m + 2:
        if len(W) == m + 1:
            # V = V*: V is defined over Q, take a rational basis
            return DescentResult(LinearSpace(m, W, "rational"), "rational_input", W)
        raise InputError(f"span of V and its conjugate has dimension {len(W) - 1}, expected {m + 1}")
    k = m + 2
    # coordinates of V inside W: W is in reduced echelon form, so read them at the pivots
    _, piv = _rref([list(w) for w in W])
    Vy = [[v[p] for p in piv] for v in V.basis]
    lam = _kernel_k(F, Vy, k)
    if len(lam) != 1:
        raise AssertionError("V should have codimension one in W")
    lam = lam[0]
    lamc = [F.conj(x) for x in lam]
    # l * conj(l) has rational coefficients
    q = {}
    for i in range(k):
        for j in range(k):
            c = F.mul(lam[i], lamc[j])
            e = [0] * k
            e[i] += 1
            e[j] += 1
            e = tuple(e)
            q[e] = _add(q.get(e, ZERO), c)
    if any(c[1] != 0 for c in q.values()):
        raise AssertionError("norm form of l should be rational")
    q = {e: c[0] for e, c in q.items() if c[0] != 0}
    target = _restricted_poly(C, W)
    if not target:
        sub = W[: m + 1]
        return DescentResult(LinearSpace(m, sub, "rational", ("degenerate_W",)), "degenerate_W", W)
    # solve q * (mu . y) = target coefficientwise
    monos = sorted(set(target) | {e for e in _poly_mul_linear(q, [Fraction(1)] * k, k)})
    rows = []
    for mono in monos:
        row = []
        for j in range(k):
            unit = [Fraction(0)] * k
            unit[j] = Fraction(1)
            row.append(_poly_mul_linear(q, unit, k).get(mono, Fraction(0)))
        rows.append(row + [-target.get(mono, Fraction(0))])
    sol = _kernel_q(rows, k + 1)
    sol = [v for v in sol if v[k] != 0]
    if not sol:
        raise InputError("C restricted to W is not divisible by the norm form of V (nonzero remainder)")
    mu = [x / sol[0][k] for x in sol[0][:k]]
    if _poly_mul_linear(q, mu, k) != target:
        raise AssertionError("exact division check failed")
    ker = _kernel_q([mu], k)
    vecs = [_integral([sum(y[j] * W[j][i] for j in range(k)) for i in range(s)]) for y in ker]
    out = LinearSpace(m, vecs, "rational")
    if not vanishes_on(C, out):
        raise AssertionError("descended space is not on the hypersurface")
    return DescentResult(out, "descended", W, mu)


# -- normalization and almost-prime zeros ---------------------------------

@dataclass
class NormalizedLine:
    c: list[int]
    b: list[int]
    active: list[bool]
    shift: int

    def point(self, t: int, u: int) -> list[int]:
        return [ci * (t + bi * u) if act else 0 for ci, bi, act in zip(self.c, self.b, self.active)]

    def to_json(self) -> dict:
        return {"c": self.c, "b": self.b, "active": self.active, "shift": self.shift}


def _check_line_identity(C: CubicForm, nl: NormalizedLine) -> bool:
    s = len(nl.c)
    v = [nl.c[i] if nl.active[i] else 0 for i in range(s)]
    w = [nl.c[i] * nl.b[i] if nl.active[i] else 0 for i in range(s)]
    return expand_pencil(C, v, [w]).vanishes()


def normalize_line(a: Sequence[int], b: Sequence[int], C: CubicForm | None = None) -> NormalizedLine:
    """Rewrite {a t + b u} as x_i = c_i (t + b'_i u) on the active coordinates.

    Coordinates with a_i = b_i = 0 are inactive: c_i = 1 and the coordinate is
    identically zero on the line.
    """
    a = [int(x) for x in a]
    b = [int(x) for x in b]
    if len(a) != len(b):
        raise InputError("a and b must have equal length")
    if _rank_q([a, b]) < 2:
        raise InputError("a and b are dependent, not a line")
    active = [x != 0 or y != 0 for x, y in zip(a, b)]
    best = None
    span = sum(active) + 1
    for k in sorted(range(-span, span + 1), key=lambda k: (abs(k), k)):
        ak = [x + k * y for x, y in zip(a, b)]
        if any(act and x == 0 for x, act in zip(ak, active)):
            continue
        prod = math.prod(x for x, act in zip(ak, active) if act)
        bb = [y * prod // x if act else 0 for x, y, act in zip(ak, b, active)]
        vals = [y for y, act in zip(bb, active) if act]
        lo = min(vals)
        g = math.gcd(*(y - lo for y in vals)) or 1
        red = [(y - lo) // g if act else 0 for y, act in zip(bb, active)]
        top = max(red)
        centre = top // 2
        red = [y - centre if act else 0 for y, act in zip(red, active)]
        c = [x if act else 1 for x, act in zip(ak, active)]
        cand = NormalizedLine(c, red, active, k)
        key = (max(abs(y) for y in red), abs(k))
        if best is None or key < best[0]:
            best = (key, cand)
    nl = best[1]
    if C is not None and not _check_line_identity(C, nl):
        raise InputError("C does not vanish identically on the line a t + b u")
    return nl


def prime_ap_sieve(M: int, bound: int, cap: float | None = None) -> tuple[int, int] | None:
    """(l, d) with l + k d prime for |k| <= M, minimal last term l + M d <= bound."""
    if M < 1:
        raise InputError("M must be at least 1")
    if 2 * M + 1 > 9:
        raise InputError(f"progressions of length {2 * M + 1} exceed the supported limit of 9")
    bound = int(bound)
    if bound > 10 ** 9:
        raise InputError("bound must be at most 1e9")
    cap = BUDGETS.points if cap is None else cap
    check_budget("prime_ap_sieve", bound, cap)
    # grow the window so small progressions do not pay for a full sieve
    lo, hi = 2, min(bound, 1 << 12)
    while lo <= bound:
        hit = _ap_in_window(M, lo, hi)
        if hit is not None:
            ell, d = hit
            if not all(sympy.isprime(ell + k * d) for k in range(-M, M + 1)):
                raise AssertionError("sieve and primality test disagree")
            return hit
        lo, hi = hi + 1, min(bound, hi * 8)
        if lo > hi:
            break
    return None


def _prime_mask(n: int) -> np.ndarray:
    mask = np.ones(n + 1, dtype=bool)
    mask[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if mask[p]:
            mask[p * p::p] = False
    return mask


def _ap_in_window(M: int, lo: int, hi: int) -> tuple[int, int] | None:
    """First progression (by last term, then smallest d) whose last term is in [lo, hi]."""
    is_p = _prime_mask(hi)
    L = 2 * M
    for last in np.flatnonzero(is_p[lo:]) + lo:
        d = np.arange(1, (last - 2) // L + 1, dtype=np.int64)
        if not len(d):
            continue
        ok = np.ones(len(d), dtype=bool)
        for k in range(1, L + 1):
            ok &= is_p[last - k * d]
        hit = np.flatnonzero(ok)
        if len(hit):
            dd = int(d[hit[0]])
            return int(last) - M * dd, dd
    return None


@dataclass
class AlmostPrimeSolution:
    c: list[int]
    primes: list[int]
    x: list[int]
    ap: tuple[int, int]
    M: int

    def to_json(self) -> dict:
        return {"c": self.c, "primes": self.primes, "x": self.x, "ap": list(self.ap), "M": self.M}


def almost_prime_solution(C: CubicForm, line: LinearSpace | NormalizedLine, M: int | None = None,
                          bound: int = 10 ** 7) -> AlmostPrimeSolution:
    """A zero (c_1 p_1, ..., c_s p_s) of C with p_i = l + b'_i d from a prime progression.

    Inactive coordinates get slot value 0, so the zero stays exact.
    """
    if isinstance(line, LinearSpace):
        if line.field_tag != "rational" or line.dim != 1:
            raise InputError("need a rational projective line")
        a, b = (_integral(v) for v in line.rational_vectors())
        nl = normalize_line(a, b, C)
    else:
        nl = line
        if not _check_line_identity(C, nl):
            raise InputError("C does not vanish identically on the normalized line")
    reach = max(abs(y) for y in nl.b)
    M_auto = 2 * reach + 1
    M = M_auto if M is None else int(M)
    if M < reach:
        raise InputError(f"M = {M} is smaller than max|b'| = {reach}")
    if 2 * M + 1 > 9:
        raise InputError(f"max|b'| = {reach} requires progressions of length {2 * M + 1} (M = {M}); the supported limit is 9")
    ap = prime_ap_sieve(M, bound)
    if ap is None:
        raise BudgetExceeded("prime_ap_sieve", f"progression of length {2 * M + 1}", bound)
    ell, d = ap
    primes = [ell + y * d if act else 0 for y, act in zip(nl.b, nl.active)]
    x = [ci * p for ci, p in zip(nl.c, primes)]
    act_p = [p for p, act in zip(primes, nl.active) if act]
    if len(set(act_p)) < 2:
        raise AssertionError("all primes equal; the line is degenerate")
    if not all(sympy.isprime(p) for p in act_p):
        raise AssertionError("non-prime slot")
    if cubic_value(C, x) != ZERO:
        raise AssertionError("solution does not vanish")
    return AlmostPrimeSolution(nl.c, primes, x, ap, M)


def beta(m: int, d: int) -> int:
    """Variable threshold for an m-dimensional space on a degree-d intersection (informational)."""
    return 2 * m * m + d * (m + 1) + (0 if m % 2 == 0 else 2)


def variables_for_rational_space(m: int) -> int:
    """Smallest s with s > m + binom(m+1, 2) + beta(m, 13)."""
    return m + math.comb(m + 1, 2) + beta(m, 13) + 1
