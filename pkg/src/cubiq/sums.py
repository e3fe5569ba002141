"""Exponential sums over boxes of O^s and the counting functions behind Weyl differencing.

Phases are tr(alpha * C(x)) for the input polynomial C. The differenced
conditions use B_i from the stored tensor of 6C, which is the same
normalization; `literal_six=True` switches both to the 6-scaled form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .config import BUDGETS, check_budget
from .errors import HypothesisViolated, InputError
from .field import AlgInt, FieldElem, FieldSpec, MinkowskiVec, ResidueClass, denominator_ideal
from .forms import CubicForm, bilinear_batch

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Box:
    """Per (variable, basis index) bounds; PB is {x : P*lo <= x_ij <= P*hi} (hi open if half_open)."""

    lo: tuple[tuple[Fraction, Fraction], ...]
    hi: tuple[tuple[Fraction, Fraction], ...]
    center_kind: str = "unit_box"
    half_open: bool = False
    center: tuple | None = None

    def __post_init__(self):
        for l, h in zip(self.lo, self.hi):
            if not (l[0] < h[0] and l[1] < h[1]):
                raise InputError("box bounds must satisfy lo < hi")

    @property
    def s(self) -> int:
        return len(self.lo)

    @classmethod
    def symmetric(cls, s: int, radius: Fraction = Fraction(1)) -> Box:
        r = Fraction(radius)
        return cls(((-r, -r),) * s, ((r, r),) * s, "symmetric")

    @classmethod
    def unit(cls, s: int) -> Box:
        return cls(((Fraction(0), Fraction(0)),) * s, ((Fraction(1), Fraction(1)),) * s, "unit_box", True)

    @classmethod
    def centered(cls, C: CubicForm, z: Sequence[tuple[float, float]], radius: Fraction, tol: float = 1e-9) -> Box:
        """Box of half-width `radius` around a real zero z of C with dC/dx_1(z) != 0."""
        z = [(Fraction(a), Fraction(b)) for a, b in z]
        check_center(C, z, tol)
        r = Fraction(radius)
        lo = tuple((a - r, b - r) for a, b in z)
        hi = tuple((a + r, b + r) for a, b in z)
        return cls(lo, hi, "centered_at_z", False, tuple(z))

    def ranges(self, P) -> list[tuple[int, int]]:
        """Integer ranges [a, b] per flattened coordinate (i, j)."""
        P = Fraction(P)
        out = []
        for l, h in zip(self.lo, self.hi):
            for j in range(2):
                a = math.ceil(l[j] * P)
                b = math.ceil(h[j] * P) - 1 if self.half_open else math.floor(h[j] * P)
                out.append((a, b))
        return out

    def count(self, P) -> int:
        n = 1
        for a, b in self.ranges(P):
            n *= max(b - a + 1, 0)
        return n

    def volume(self) -> float:
        v = 1.0
        for l, h in zip(self.lo, self.hi):
            v *= float(h[0] - l[0]) * float(h[1] - l[1])
        return v

    def to_json(self) -> dict:
        return {"lo": [[str(v) for v in p] for p in self.lo], "hi": [[str(v) for v in p] for p in self.hi],
                "center_kind": self.center_kind, "half_open": self.half_open}


def check_center(C: CubicForm, z, tol: float = 1e-9) -> None:
    F = C.F
    zc = [complex(float(a) + float(b) * F.omega_complex) for a, b in z]
    if any(abs(v) < tol for v in zc) or any(float(a) == 0 and float(b) == 0 for a, b in z):
        raise InputError("box center must have all coordinates nonzero")
    val, grad1 = 0j, 0j
    w = F.omega_complex
    for (i, j, k), (c1, c2) in C.terms:
        c = c1 + c2 * w
        val += c * zc[i] * zc[j] * zc[k]
        for pos, var in enumerate((i, j, k)):
            if var == 0:
                others = [i, j, k]
                others.pop(pos)
                grad1 += c * zc[others[0]] * zc[others[1]]
    if abs(val) > tol * max(1.0, max(abs(v) for v in zc) ** 3):
        raise InputError(f"box center is not a zero of C (|C(z)| = {abs(val):.3g})")
    if abs(grad1) < tol:
        raise InputError("dC/dx_1 vanishes at the box center")


def box_points(box: Box, P, chunk: int = 1 << 20) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Chunks (X1, X2), each of shape (B, s), of the integer points of P*box."""
    rngs = [np.arange(a, b + 1, dtype=np.int64) for a, b in box.ranges(P)]
    sizes = [len(r) for r in rngs]
    n = int(np.prod(sizes)) if sizes else 0
    for start in range(0, n, chunk):
        flat = np.arange(start, min(start + chunk, n), dtype=np.int64)
        cols = []
        for r, m in zip(reversed(rngs), reversed(sizes)):
            cols.append(r[flat % m])
            flat = flat // m
        D = np.stack(cols[::-1], axis=1)
        yield D[:, 0::2], D[:, 1::2]


def height_points(s: int, P, chunk: int = 1 << 20):
    """All x in O^s with |x| < P."""
    m = math.ceil(Fraction(P)) - 1
    box = Box(((Fraction(-m), Fraction(-m)),) * s, ((Fraction(m), Fraction(m)),) * s) if m > 0 else None
    if box is None:
        yield np.zeros((1, s), dtype=np.int64), np.zeros((1, s), dtype=np.int64)
        return
    yield from box_points(box, 1, chunk)


def height_count(s: int, P) -> int:
    m = math.ceil(Fraction(P)) - 1
    return (2 * m + 1) ** (2 * s) if m >= 0 else 0


@dataclass
class SumReport:
    value: complex
    terms: int
    params: dict = field(default_factory=dict)
    bound_rhs: float | None = None

    @property
    def ratio(self) -> float | None:
        if self.bound_rhs is None:
            return None
        return abs(self.value) / self.bound_rhs if self.bound_rhs else math.inf

    def to_json(self) -> dict:
        return {"value_re": self.value.real, "value_im": self.value.imag, "terms": self.terms,
                "params": self.params, "bound_rhs": self.bound_rhs, "ratio": self.ratio}


# -- phases ---------------------------------------------------------------

def _as_vec(F: FieldSpec, alpha) -> MinkowskiVec:
    if isinstance(alpha, MinkowskiVec):
        return alpha
    if isinstance(alpha, ResidueClass):
        return alpha.gamma.to_minkowski()
    if isinstance(alpha, (FieldElem, AlgInt)):
        return MinkowskiVec(F, *alpha.coords)
    if isinstance(alpha, (int, Fraction)):
        return MinkowskiVec(F, alpha, 0)
    if isinstance(alpha, (tuple, list)):
        return MinkowskiVec(F, *alpha)
    if isinstance(alpha, float):
        return MinkowskiVec.approx(F, alpha, 0.0)
    raise InputError(f"cannot interpret {alpha!r} as a point of K_R")


def trace_functional(alpha: MinkowskiVec) -> tuple[np.ndarray, int | None]:
    """(u, D) with tr(alpha * c) = (u . c)/D for integral c; D is None for float alpha."""
    F = alpha.F
    T = np.array(F.trace_form, dtype=object)
    if alpha.exact:
        x1, x2 = alpha.coords
        D = x1.denominator * x2.denominator // math.gcd(x1.denominator, x2.denominator)
        n = np.array([int(x1 * D), int(x2 * D)], dtype=object)
        u = T.dot(n)
        return np.array([int(v) % D for v in u], dtype=object), D
    v = np.array(alpha.coords, dtype=float)
    return np.array(F.trace_form, dtype=float) @ v, None


def _dot(u, c1, c2, D):
    if D is None:
        return u[0] * c1 + u[1] * c2
    u0, u1 = int(u[0]), int(u[1])
    lim = max(abs(u0), abs(u1), 1) * max(int(np.abs(c1).max(initial=0)), int(np.abs(c2).max(initial=0)), 1)
    if lim < 2 ** 61:
        return (u0 * c1 + u1 * c2) % D
    return np.array([(u0 * int(a) + u1 * int(b)) % D for a, b in zip(c1, c2)], dtype=object)


def _exp_sum(r, D) -> complex:
    """sum_k e(r_k / D) for residues r (D int), or sum_k e(r_k) for real phases (D None)."""
    if D is None:
        ph = TWO_PI * np.mod(r, 1.0)
        return complex(math.fsum(np.cos(ph)), math.fsum(np.sin(ph)))
    if D <= (1 << 22) and r.dtype != object:
        cnt = np.bincount(r.astype(np.int64), minlength=D)
        nz = np.flatnonzero(cnt)
        ang = TWO_PI * nz / D
        w = cnt[nz].astype(float)
        return complex(math.fsum(w * np.cos(ang)), math.fsum(w * np.sin(ang)))
    ph = TWO_PI * np.array([float(Fraction(int(v), D)) for v in r])
    return complex(math.fsum(np.cos(ph)), math.fsum(np.sin(ph)))


def _phase_scale(literal_six: bool) -> int:
    return 6 if literal_six else 1


# -- Weyl sums ------------------------------------------------------------

def weyl_sum(C: CubicForm, alpha, P, box: Box | None = None, literal_six: bool = False,
             cap: float | None = None) -> SumReport:
    """S(alpha; P) = sum over x in P*box of e(tr(alpha C(x)))."""
    box = box or Box.symmetric(C.s)
    cap = BUDGETS.points if cap is None else cap
    n = box.count(P)
    check_budget("weyl_sum", n, cap)
    a = _as_vec(C.F, alpha)
    u, D = trace_functional(a)
    parts = []
    for X1, X2 in box_points(box, P):
        c1, c2 = C.eval_batch(X1, X2, _phase_scale(literal_six))
        parts.append(_exp_sum(_dot(u, c1, c2, D), D))
    val = complex(math.fsum(p.real for p in parts), math.fsum(p.imag for p in parts))
    return SumReport(val, n, {"alpha": a.to_json(), "P": str(P), "box": box.center_kind})


def weyl_sum_folded(C: CubicForm, alpha, P, box: Box | None = None) -> SumReport:
    """Same sum on a symmetric box, pairing x with -x: C(-x) = -C(x) gives conjugate phases."""
    box = box or Box.symmetric(C.s)
    if any(l[0] != -h[0] or l[1] != -h[1] for l, h in zip(box.lo, box.hi)) or box.half_open:
        raise InputError("folding needs a box symmetric about the origin")
    a = _as_vec(C.F, alpha)
    u, D = trace_functional(a)
    half = 0j
    zero = 0
    for X1, X2 in box_points(box, P):
        flat = np.concatenate([X1, X2], axis=1)
        # keep x whose first nonzero coordinate (in a fixed order) is positive
        nzmask = flat != 0
        first = np.argmax(nzmask, axis=1)
        lead = flat[np.arange(len(flat)), first]
        pos = lead > 0
        zero += int((~nzmask.any(axis=1)).sum())
        c1, c2 = C.eval_batch(X1[pos], X2[pos])
        half += _exp_sum(_dot(u, c1, c2, D), D)
    return SumReport(zero + 2 * half.real + 0j, box.count(P), {"alpha": a.to_json(), "P": str(P)})


def weyl_phase_list(C: CubicForm, alpha, P, box: Box | None = None) -> list:
    """Exact phases tr(alpha C(x)) mod 1 in enumeration order (small boxes only)."""
    box = box or Box.symmetric(C.s)
    a = _as_vec(C.F, alpha)
    if not a.exact:
        raise InputError("phase lists need exact alpha")
    u, D = trace_functional(a)
    out = []
    for X1, X2 in box_points(box, P):
        c1, c2 = C.eval_batch(X1, X2)
        out += [Fraction(int(v), D) for v in _dot(u, c1, c2, D)]
    return out


# -- complete sums --------------------------------------------------------

def complete_sum(C: CubicForm, gamma, offset: Sequence[int] | None = None, cap: float | None = None,
                 use_diagonal: bool = True) -> SumReport:
    """S_gamma = sum over x mod N(a_gamma) of e(tr(gamma C(x))).

    `gamma` may be any representative (ResidueClass or FieldElem); `offset`
    shifts the summation box 0 <= x_ij < N coordinatewise.
    """
    F, s = C.F, C.s
    g = gamma.gamma if isinstance(gamma, ResidueClass) else gamma
    N = denominator_ideal(g).norm
    a = g.to_minkowski()
    u, D = trace_functional(a)
    if use_diagonal and C.is_diagonal() and offset is None:
        val = 1 + 0j
        for coeff in C.diagonal_coeffs():
            one = CubicForm.diagonal(F, [coeff])
            val *= _complete_raw(one, u, D, N, None)
        return SumReport(val, N ** (2 * s), {"gamma": g.to_json(), "N": N, "path": "diagonal"})
    cap = BUDGETS.points if cap is None else cap
    check_budget("complete_sum", N ** (2 * s), cap)
    val = _complete_raw(C, u, D, N, offset)
    return SumReport(val, N ** (2 * s), {"gamma": g.to_json(), "N": N, "path": "full"})


def _complete_raw(C: CubicForm, u, D, N, offset) -> complex:
    s = C.s
    off = list(offset) if offset is not None else [0] * (2 * s)
    lo = tuple((Fraction(off[2 * i]), Fraction(off[2 * i + 1])) for i in range(s))
    hi = tuple((Fraction(off[2 * i] + N), Fraction(off[2 * i + 1] + N)) for i in range(s))
    box = Box(lo, hi, "unit_box", True)
    parts = []
    for X1, X2 in box_points(box, 1):
        c1, c2 = C.eval_batch(X1, X2)
        parts.append(_exp_sum(_dot(u, c1, c2, D), D))
    return complex(math.fsum(p.real for p in parts), math.fsum(p.imag for p in parts))


# -- counting functions for differencing ---------------------------------

def _omega_functionals(alpha: MinkowskiVec, scale: int):
    """For j = 1, 2: (u_j, D) with tr(scale * alpha * w_j * b) = (u_j . b)/D."""
    out = []
    for wj in ((1, 0), (0, 1)):
        out.append(trace_functional(alpha * AlgInt(alpha.F, *wj) * scale))
    return out


def _near_integer(r, D, P) -> np.ndarray:
    """||r/D|| < 1/P for residues r (or real phases when D is None)."""
    P = Fraction(P)
    if D is None:
        f = np.mod(r, 1.0)
        return np.minimum(f, 1.0 - f) < 1.0 / float(P)
    r = np.asarray(r)
    dist = np.minimum(r, D - r)
    return dist * P.numerator < D * P.denominator


def _bilinear_ok(C, funcs, b1, b2, P) -> np.ndarray:
    ok = np.ones(b1.shape[0], dtype=bool)
    for u, D in funcs:
        for i in range(C.s):
            ok &= _near_integer(_dot(u, b1[:, i], b2[:, i], D), D, P)
    return ok


def count_N(C: CubicForm, alpha, P, literal_six: bool = False, cap: float | None = None) -> int:
    """#{(x, y) : |x|, |y| < P, ||tr(alpha w_j B_i(x, y))|| < 1/P for all i, j}."""
    a = _as_vec(C.F, alpha)
    n = height_count(C.s, P)
    cap = BUDGETS.pairs if cap is None else cap
    check_budget("count_N", n * n, cap)
    funcs = _omega_functionals(a, _phase_scale(literal_six))
    Y1, Y2 = [np.concatenate(v, axis=0) for v in zip(*height_points(C.s, P))]
    total = 0
    for x1, x2 in zip(Y1, Y2):
        X1 = np.broadcast_to(x1, Y1.shape)
        X2 = np.broadcast_to(x2, Y2.shape)
        b1, b2 = bilinear_batch(C, X1, X2, Y1, Y2)
        total += int(_bilinear_ok(C, funcs, b1, b2, P).sum())
    return total


def count_N_h(C: CubicForm, alpha, P, h, literal_six: bool = False, cap: float | None = None) -> int:
    """#{w : |w| < P, ||tr(alpha w_j B_i(w, h))|| < 1/P for all i, j}."""
    a = _as_vec(C.F, alpha)
    cap = BUDGETS.points if cap is None else cap
    check_budget("count_N_h", height_count(C.s, P), cap)
    funcs = _omega_functionals(a, _phase_scale(literal_six))
    hc = np.array([tuple(v.coords) if hasattr(v, "coords") else (v, 0) if isinstance(v, int) else tuple(v)
                   for v in h], dtype=np.int64)
    total = 0
    for W1, W2 in height_points(C.s, P):
        H1 = np.broadcast_to(hc[:, 0], W1.shape)
        H2 = np.broadcast_to(hc[:, 1], W2.shape)
        b1, b2 = bilinear_batch(C, W1, W2, H1, H2)
        total += int(_bilinear_ok(C, funcs, b1, b2, P).sum())
    return total


def region_R(box: Box, P, h) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Points y of P*box with y + h also in P*box."""
    s = box.s
    hc = np.array([tuple(v.coords) if hasattr(v, "coords") else (v, 0) if isinstance(v, int) else tuple(v)
                   for v in h], dtype=np.int64)
    rng = box.ranges(P)
    lo = np.array([a for a, _ in rng]).reshape(s, 2)
    hi = np.array([b for _, b in rng]).reshape(s, 2)
    for Y1, Y2 in box_points(box, P):
        Z1, Z2 = Y1 + hc[:, 0], Y2 + hc[:, 1]
        ok = ((Z1 >= lo[:, 0]) & (Z1 <= hi[:, 0]) & (Z2 >= lo[:, 1]) & (Z2 <= hi[:, 1])).all(axis=1)
        yield Y1[ok], Y2[ok]


def t_sum(C: CubicForm, h, beta, P, box: Box | None = None, cap: float | None = None) -> SumReport:
    """T(h, beta) = sum over y in R(h) of e(tr(beta [C(y + h) - C(y)]))."""
    box = box or Box.symmetric(C.s)
    cap = BUDGETS.points if cap is None else cap
    check_budget("t_sum", box.count(P), cap)
    a = _as_vec(C.F, beta)
    u, D = trace_functional(a)
    hc = np.array([tuple(v.coords) if hasattr(v, "coords") else (v, 0) if isinstance(v, int) else tuple(v)
                   for v in h], dtype=np.int64)
    parts, n = [], 0
    for Y1, Y2 in region_R(box, P, h):
        c1, c2 = C.eval_batch(Y1 + hc[:, 0], Y2 + hc[:, 1])
        d1, d2 = C.eval_batch(Y1, Y2)
        parts.append(_exp_sum(_dot(u, c1 - d1, c2 - d2, D), D))
        n += len(Y1)
    val = complex(math.fsum(p.real for p in parts), math.fsum(p.imag for p in parts))
    return SumReport(val, n, {"h": hc.tolist(), "beta": a.to_json(), "P": str(P)})


def t_phase_list(C: CubicForm, h, beta, P, box: Box | None = None) -> list[Fraction]:
    box = box or Box.symmetric(C.s)
    a = _as_vec(C.F, beta)
    u, D = trace_functional(a)
    hc = np.array([tuple(v.coords) if hasattr(v, "coords") else (v, 0) if isinstance(v, int) else tuple(v)
                   for v in h], dtype=np.int64)
    out = []
    for Y1, Y2 in region_R(box, P, h):
        c1, c2 = C.eval_batch(Y1 + hc[:, 0], Y2 + hc[:, 1])
        d1, d2 = C.eval_batch(Y1, Y2)
        out += [Fraction(int(v), D) for v in _dot(u, c1 - d1, c2 - d2, D)]
    return out


# -- averages over the torus ----------------------------------------------

def _frequency_table(C: CubicForm, P, box: Box):
    """Distinct frequencies u = T C(x) with multiplicities: S(beta) = sum n_u e(beta . u)."""
    T = np.array(C.F.trace_form, dtype=np.int64)
    keys = []
    for X1, X2 in box_points(box, P):
        c1, c2 = C.eval_batch(X1, X2)
        keys.append(np.stack([T[0, 0] * c1 + T[0, 1] * c2, T[1, 0] * c1 + T[1, 1] * c2], axis=1))
    U = np.concatenate(keys, axis=0)
    uniq, cnt = np.unique(U, axis=0, return_counts=True)
    return uniq, cnt


def _grid_values(uniq, cnt, centers1, centers2):
    """S on the tensor grid centers1 x centers2 via a separable matrix product."""
    v1, i1 = np.unique(uniq[:, 0], return_inverse=True)
    v2, i2 = np.unique(uniq[:, 1], return_inverse=True)
    Nmat = np.zeros((len(v1), len(v2)))
    np.add.at(Nmat, (i1.ravel(), i2.ravel()), cnt)
    A = np.exp(1j * TWO_PI * np.outer(centers1, v1))
    B = np.exp(1j * TWO_PI * np.outer(centers2, v2))
    return A @ Nmat @ B.T


def _midpoints(lo: float, hi: float, n: int) -> np.ndarray:
    return lo + (np.arange(n) + 0.5) * (hi - lo) / n


def mean_square(C: CubicForm, alpha, kappa, P, box: Box | None = None, grid: int = 64,
                points_per_oscillation: int = 8, cap: float | None = None) -> dict:
    """M(alpha, kappa) = integral over |beta - alpha| < kappa of |S(beta)|^2 (midpoint rule).

    The error estimate compares against one refinement with twice the nodes per axis.
    """
    box = box or Box.symmetric(C.s)
    kappa = float(kappa)
    if not 0 < kappa <= 0.5:
        raise InputError("kappa must lie in (0, 1/2]")
    a = _as_vec(C.F, alpha)
    n = max(grid, math.ceil(points_per_oscillation * 2 * kappa * float(P) ** 3))
    cap = BUDGETS.quadrature if cap is None else cap
    uniq, cnt = _frequency_table(C, P, box)
    check_budget("mean_square", 4 * n * n * max(len(np.unique(uniq[:, 1])), 1), cap)

    def quad(m):
        c1 = _midpoints(float(a.x1) - kappa, float(a.x1) + kappa, m)
        c2 = _midpoints(float(a.x2) - kappa, float(a.x2) + kappa, m)
        S = _grid_values(uniq, cnt, c1, c2)
        return float(np.sum(np.abs(S) ** 2)) * (2 * kappa / m) ** 2

    coarse, fine = quad(n), quad(2 * n)
    return {"value": fine, "coarse": coarse, "error_estimate": abs(fine - coarse), "nodes": 2 * n,
            "kappa": kappa, "P": str(P)}


def torus_average(C: CubicForm, P, box: Box | None = None, n: int | None = None) -> dict:
    """Midpoint-rule integral of S(beta) over the full torus [0,1)^2.

    By orthogonality this is the number of zeros of C in P*box.
    """
    box = box or Box.symmetric(C.s)
    uniq, cnt = _frequency_table(C, P, box)
    top = int(np.abs(uniq).max(initial=0))
    n = n or 2 * top + 2
    centers = _midpoints(0.0, 1.0, n)

    def g(v):
        return np.exp(1j * TWO_PI * np.outer(v, centers)).mean(axis=1)

    val = complex(np.sum(cnt * g(uniq[:, 0]) * g(uniq[:, 1])))
    return {"value": val, "nodes": n, "frequencies": len(cnt)}


def exact_pair_count(C: CubicForm, P, box: Box | None = None) -> int:
    """#{(x, y) in (P*box)^2 : C(x) = C(y)}."""
    box = box or Box.symmetric(C.s)
    vals = []
    for X1, X2 in box_points(box, P):
        vals.append(np.stack(C.eval_batch(X1, X2), axis=1))
    _, cnt = np.unique(np.concatenate(vals, axis=0), axis=0, return_counts=True)
    return int(np.sum(cnt.astype(np.int64) ** 2))


# -- bound verifiers -------------------------------------------------------

def weyl_bound_rhs(s: int, N: int, theta_height: float, P: float, eps: float = 0.1, n: int = 2) -> float:
    if theta_height == 0:
        return math.inf
    x = N ** (1 / n) * theta_height
    return P ** (n * s + eps) * (x + 1.0 / (x * P ** 3)) ** (n * s / 8)


def verify_weyl_bound(C: CubicForm, samples, eps: float = 0.1, constant: float | None = None,
                      box: Box | None = None) -> list[dict]:
    """Measured |S(gamma + theta)| against the Weyl-differencing bound.

    Each sample is (gamma: ResidueClass, theta: MinkowskiVec, P). A sample whose
    denominator norm violates N^(1/2) <= P^(3/2) raises HypothesisViolated.
    """
    rows = []
    for gamma, theta, P in samples:
        N = gamma.norm
        if math.sqrt(N) > float(P) ** 1.5:
            raise HypothesisViolated(f"N(a_gamma)^(1/2) = {math.sqrt(N):.3g} exceeds P^(3/2) = {float(P) ** 1.5:.3g}")
        alpha = gamma.gamma.to_minkowski() + theta
        rep = weyl_sum(C, alpha, P, box)
        rhs = weyl_bound_rhs(C.s, N, float(theta.height()), float(P), eps)
        ratio = abs(rep.value) / rhs
        row = {"gamma": gamma.gamma.to_json(), "N": N, "theta": float(theta.height()), "P": str(P),
               "measured": abs(rep.value), "bound_rhs": rhs, "ratio": ratio}
        if constant is not None:
            row["flagged"] = ratio > constant
        rows.append(row)
    return rows


def fourth_power_chain(C: CubicForm, alpha, P, literal_six: bool = False) -> dict:
    """|S(alpha)|^4 over 0 <= x_ij < P against P^(2s) * sum_{|x|,|y|<P} prod_ij min(P, ||.||^-1)."""
    a = _as_vec(C.F, alpha)
    S = weyl_sum(C, a, P, Box.unit(C.s), literal_six)
    funcs = _omega_functionals(a, _phase_scale(literal_six))
    Y1, Y2 = [np.concatenate(v, axis=0) for v in zip(*height_points(C.s, P))]
    Pf = float(P)
    parts = []
    for x1, x2 in zip(Y1, Y2):
        X1 = np.broadcast_to(x1, Y1.shape)
        X2 = np.broadcast_to(x2, Y2.shape)
        b1, b2 = bilinear_batch(C, X1, X2, Y1, Y2)
        prod = np.ones(len(Y1))
        for u, D in funcs:
            for i in range(C.s):
                r = _dot(u, b1[:, i], b2[:, i], D)
                if D is None:
                    f = np.mod(r, 1.0)
                    dist = np.minimum(f, 1.0 - f)
                else:
                    r = np.asarray(r, dtype=np.int64)
                    dist = np.minimum(r, D - r) / D
                with np.errstate(divide="ignore"):
                    prod *= np.minimum(Pf, np.where(dist > 0, 1.0 / np.where(dist > 0, dist, 1.0), np.inf))
        parts.append(math.fsum(prod))
    inner = math.fsum(parts)
    rhs = Pf ** (2 * C.s) * inner
    lhs = abs(S.value) ** 4
    return {"lhs": lhs, "rhs": rhs, "ratio": lhs / rhs, "P": str(P)}
