"""Integer lattices and the Diophantine lemmas behind Weyl differencing.

Covers the shrinking lemma count, the divisibility lemma for small torus norms,
the lattice of w with Delta*B_i(w, h) in a fixed ideal, and sup-norm successive
minima with exact point counts.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _lattice
from .config import BUDGETS, check_budget
from .errors import HypothesisViolated, InputError
from .field import (AlgInt, FieldElem, FieldSpec, IdealRep, MinkowskiVec, ResidueClass,
                    denominator_ideal, prime_divisors)
from .forms import CubicForm, hessian, rank_mod


@dataclass(frozen=True)
class IntegerLattice:
    dim: int
    basis: tuple[tuple[int, ...], ...]   # column HNF, rows
    provenance: str = "generic"
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    @classmethod
    def from_generators(cls, gens: Sequence[Sequence[int]], dim: int, provenance="generic", meta=None):
        H = _lattice.hnf(gens, dim)
        return cls(dim, tuple(tuple(r) for r in H), provenance, meta or {})

    @classmethod
    def standard(cls, dim: int) -> IntegerLattice:
        return cls(dim, tuple(tuple(int(i == j) for j in range(dim)) for i in range(dim)))

    @property
    def matrix(self) -> list[list[int]]:
        return [list(r) for r in self.basis]

    @property
    def det(self) -> int:
        return _lattice.det_upper(self.matrix)

    def contains(self, v: Sequence[int]) -> bool:
        return _lattice.solve_upper(self.matrix, v) is not None

    def to_json(self) -> dict:
        return {"dim": self.dim, "hnf": self.matrix, "provenance": self.provenance,
                "meta": {k: str(v) for k, v in self.meta.items()}}


# -- shrinking lemma ------------------------------------------------------

def _common_denominator(L) -> tuple[list[list[int]], int]:
    fr = [[Fraction(v) for v in row] for row in L]
    den = 1
    for row in fr:
        for v in row:
            den = den * v.denominator // math.gcd(den, v.denominator)
    return [[int(v * den) for v in row] for row in fr], den


def shrink_count(L, a, Z, order: str = "lex", seed: int = 0) -> int:
    """#{u in Z^m : |u| < aZ, ||(L u)_i|| < Z/a for all i}, L a rational matrix.

    `order` permutes the enumeration (lex, reversed, or a seeded shuffle) so that
    counts can be compared across traversal orders.
    """
    Ln, den = _common_denominator(L)
    m = len(Ln)
    a, Z = Fraction(a), Fraction(Z)
    R = a * Z
    k = math.ceil(R) - 1     # |u_i| <= k  <=>  |u_i| < R
    if k < 0:
        return 0
    side = 2 * k + 1
    check_budget("shrink_count", side ** m, BUDGETS.points)
    r = np.arange(-k, k + 1, dtype=np.int64)
    if order == "reversed":
        r = r[::-1]
    elif order == "shuffled":
        r = np.random.default_rng(seed).permutation(r)
    elif order != "lex":
        raise InputError(f"unknown enumeration order {order!r}")
    grids = np.meshgrid(*([r] * m), indexing="ij")
    U = np.stack([g.ravel() for g in grids], axis=1)
    if order == "shuffled":
        U = U[np.random.default_rng(seed + 1).permutation(len(U))]
    V = U @ np.array(Ln, dtype=np.int64).T
    res = np.mod(V, den)
    dist = np.minimum(res, den - res)
    # dist/den < Z/a  <=>  dist * a.num * Z.den < Z.num * a.den * den
    ok = (dist * (a.numerator * Z.denominator) < Z.numerator * a.denominator * den).all(axis=1)
    return int(ok.sum())


def shrink_check(L, a, Z) -> dict:
    Z = Fraction(Z)
    if not 0 < Z <= 1:
        raise InputError("Z must lie in (0, 1]")
    m = len(L)
    N1 = shrink_count(L, a, 1)
    NZ = shrink_count(L, a, Z)
    ratio = Fraction(N1) / (Z ** (-m) * NZ)
    return {"N1": N1, "NZ": NZ, "ratio": ratio, "m": m, "a": str(a), "Z": str(Z)}


# -- divisibility lemma ---------------------------------------------------

def _scaled_traces(F: FieldSpec, x: Sequence[Fraction]) -> tuple[Fraction, Fraction]:
    """Delta^-1 tr(x w_j) for j = 1, 2."""
    T = F.trace_form
    return tuple(Fraction(T[j][0] * x[0] + T[j][1] * x[1], F.delta) for j in range(2))


def _dist(x: Fraction) -> Fraction:
    f = x - math.floor(x)
    return min(f, 1 - f)


@dataclass(frozen=True)
class DivisibilityVerdict:
    status: str      # hypotheses_fail | pass | counterexample
    detail: str
    in_ideal: bool | None = None
    zero_forced: bool = False

    @property
    def ok(self) -> bool:
        return self.status != "counterexample"


def divisibility_check(F: FieldSpec, gamma, theta: MinkowskiVec, M, P0, A, m: AlgInt) -> DivisibilityVerdict:
    """Exact check of: small trace distances for alpha*m force m into a_gamma, and m = 0 when M is small or theta is large."""
    g = gamma.gamma if isinstance(gamma, ResidueClass) else gamma
    J = denominator_ideal(g)
    N = J.norm
    sqrtN = math.sqrt(N)
    th = Fraction(theta.height())
    M, A = Fraction(M), Fraction(A)
    P0 = Fraction(P0)
    if m.height() > M:
        return DivisibilityVerdict("hypotheses_fail", "|m| > M")
    # M|theta| sqrt(N) <= A, squared to stay exact
    if (M * th) ** 2 * N > A * A:
        return DivisibilityVerdict("hypotheses_fail", "M|theta|N^(1/2) > A")
    if (A * P0) ** 2 < N:
        return DivisibilityVerdict("hypotheses_fail", "A P0 < N^(1/2)")
    alpha = MinkowskiVec(F, *g.coords) + theta
    am = alpha * m
    for v in _scaled_traces(F, am.coords):
        if _dist(v) * P0 >= 1:
            return DivisibilityVerdict("hypotheses_fail", "trace distance >= 1/P0")
    inside = J.contains(m)
    if not inside:
        return DivisibilityVerdict("counterexample", f"m = {m.coords} not in a_gamma", False)
    cond1 = M * M <= A * A * N
    cond2 = (A * th) ** 2 * N * P0 * P0 >= 1 and th > 0
    if (cond1 or cond2) and m:
        which = "M^2 <= A^2 N" if cond1 else "A^2 |theta|^2 N P0^2 >= 1"
        return DivisibilityVerdict("counterexample", f"{which} holds but m != 0", True, True)
    return DivisibilityVerdict("pass", "conclusions hold", True, cond1 or cond2)


def theta_grid(k: int = 20, den: int = 200) -> list[tuple[Fraction, Fraction]]:
    vals = [Fraction(i - k // 2, den) for i in range(k)]
    return [(a, b) for a in vals for b in vals]


@dataclass
class DivisibilityDomain:
    """Vectorized data for the sweep over classes gamma, multipliers m and offsets theta."""

    F: FieldSpec
    max_norm: int
    max_height: int
    theta: list

    def __post_init__(self):
        from .field import enumerate_residues

        self.classes = enumerate_residues(self.max_norm, self.F)
        h = self.max_height
        self.ms = [(x, y) for x in range(-h, h + 1) for y in range(-h, h + 1)]

    def critical_values(self):
        """Per (gamma, m, theta): the least A at which a counterexample becomes possible.

        With M = |m| and P0 pushed to its largest admissible value, a sample is a
        counterexample once A exceeds every hypothesis threshold and either
        m lies outside a_gamma or one of the zero-forcing conditions applies.
        """
        F = self.F
        T = np.array(F.trace_form, dtype=np.int64)
        mats = np.array([F.mult_matrix(m) for m in self.ms], dtype=np.int64)       # (K, 2, 2)
        mh = np.array([max(abs(a), abs(b)) for a, b in self.ms], dtype=float)
        th = np.array(self.theta, dtype=object)
        th_den = 1
        for a, b in self.theta:
            th_den = math.lcm(th_den, a.denominator, b.denominator)
        th_num = np.array([[int(a * th_den), int(b * th_den)] for a, b in self.theta], dtype=np.int64)
        th_h = np.abs(th_num).max(axis=1) / th_den
        out = []
        for cls in self.classes:
            N = cls.norm
            D = cls.gamma.den
            L = math.lcm(D, th_den)
            g = np.array(cls.gamma.num.coords, dtype=np.int64) * (L // D)
            alpha = g[None, :] + th_num * (L // th_den)                             # (Th, 2), scaled by L
            am = np.einsum("kab,tb->kta", mats, alpha)                               # alpha*m scaled by L
            v = np.einsum("ja,kta->ktj", T, am)                                      # Delta * traces * L ... over Delta L
            mod = abs(F.delta) * L
            r = np.mod(v * np.sign(F.delta), mod)
            dist = (np.minimum(r, mod - r).max(axis=2)) / mod                       # (K, Th)
            inside = np.array([cls.denom_ideal.contains(m) for m in self.ms])
            sq = math.sqrt(N)
            hyp = np.maximum(mh[:, None] * th_h[None, :] * sq, sq * dist)
            with np.errstate(divide="ignore", invalid="ignore"):
                z2 = np.where(th_h[None, :] > 0, dist / (th_h[None, :] * sq), np.inf)
            trig = np.where(inside[:, None], np.minimum(mh[:, None] / sq, z2), 0.0)
            crit = np.maximum(hyp, trig)
            crit[mh == 0, :] = np.inf
            out.append((cls, crit, dist))
        return out

    def count_counterexamples(self, A: float, data=None) -> int:
        data = data or self.critical_values()
        return int(sum(int((crit < A).sum()) for _, crit, _ in data))


def calibrate_A0(F: FieldSpec, max_norm: int = 25, max_height: int = 6, theta=None, iters: int = 60) -> dict:
    """Largest A with no counterexample on the domain (bisection), halved for safety."""
    dom = DivisibilityDomain(F, max_norm, max_height, theta or theta_grid())
    data = dom.critical_values()
    lo, hi = 0.0, 1.0
    while dom.count_counterexamples(hi, data) == 0:
        hi *= 2
    for _ in range(iters):
        mid = (lo + hi) / 2
        if dom.count_counterexamples(mid, data) == 0:
            lo = mid
        else:
            hi = mid
    return {"A_sup": lo, "A0": lo / 2, "closed_form_min": float(min(c.min() for _, c, _ in data))}


def divisibility_sweep(F: FieldSpec, A0: float, max_norm: int = 25, max_height: int = 6, theta=None) -> dict:
    """Run the exact verifier on every sample satisfying the hypotheses at A0, worst-case P0."""
    theta = theta or theta_grid()
    dom = DivisibilityDomain(F, max_norm, max_height, theta)
    data = dom.critical_values()
    A = Fraction(A0)
    checked = passed = counter = counter_ideal = counter_zero = 0
    zero_forced = 0
    for cls, crit, dist in data:
        sq = math.sqrt(cls.norm)
        for ki, m in enumerate(dom.ms):
            mh = max(abs(m[0]), abs(m[1]))
            for ti, th in enumerate(theta):
                thh = max(abs(th[0]), abs(th[1]))
                if mh * float(thh) * sq > float(A0) * (1 + 1e-12) or sq * dist[ki, ti] >= float(A0):
                    continue
                # largest admissible P0: just below 1/dist (any large value when dist = 0)
                dd = _exact_dist(F, cls.gamma, th, m)
                P0 = Fraction(10 ** 12) if dd == 0 else (1 / dd) * Fraction(999_999, 1_000_000)
                v = divisibility_check(F, cls, MinkowskiVec(F, *th), mh, P0, A, AlgInt(F, *m))
                if v.status == "hypotheses_fail":
                    continue
                checked += 1
                if v.status == "counterexample":
                    counter += 1
                    if v.in_ideal:
                        counter_zero += 1
                    else:
                        counter_ideal += 1
                else:
                    passed += 1
                    zero_forced += int(v.zero_forced)
    return {"checked": checked, "passed": passed, "counterexamples": counter, "not_in_ideal": counter_ideal,
            "nonzero_under_conditions": counter_zero, "zero_forced": zero_forced,
            "vectorized_counterexamples": dom.count_counterexamples(float(A0), data)}


def _exact_dist(F, gamma: FieldElem, th, m) -> Fraction:
    alpha = MinkowskiVec(F, *gamma.coords) + MinkowskiVec(F, *th)
    am = alpha * AlgInt(F, *m)
    return max(_dist(v) for v in _scaled_traces(F, am.coords))


# -- the lattice Lambda(h) ------------------------------------------------

def lambda_h(C: CubicForm, h, q2: IdealRep, literal_six: bool = False) -> IntegerLattice:
    """{w in O^s : f * Delta * B_i(w, h) in q2 for all i} in Z^(2s), f = 6 if literal_six else 1."""
    F, s = C.F, C.s
    if 2 * s > 8:
        raise InputError("lattice dimension above 8 is not supported")
    f = (6 if literal_six else 1) * F.delta
    R = hessian(C, h).realified()
    for row in R:
        for v in row:
            if Fraction(v).denominator != 1:
                raise InputError("h must be integral")
    (a, b), (_, c) = q2.hnf
    Nq = q2.norm
    adj = [[c, -b], [0, a]]     # adj(H) x = 0 mod det H  <=>  x in q2
    rows = []
    for i in range(s):
        for r in range(2):
            rows.append([f * sum(adj[r][t] * int(R[2 * i + t][k]) for t in range(2)) for k in range(2 * s)])
    H = _lattice.kernel_mod(rows, Nq)
    return IntegerLattice(2 * s, tuple(tuple(r) for r in H), "lambda_h",
                          {"h": tuple(tuple(v) for v in hessian(C, h).base), "q2": q2.hnf, "factor": f})


def defining_rank_mod(C: CubicForm, h, P: IdealRep, literal_six: bool = False) -> int:
    """Rank modulo P of the matrix f*Delta*M(h) that actually defines Lambda(h)."""
    f = (6 if literal_six else 1) * C.F.delta
    if P.contains((f, 0)):
        return 0
    return rank_mod(C, h, P)


def lambda_h_checks(C: CubicForm, h, q2: IdealRep, literal_six: bool = False) -> dict:
    L = lambda_h(C, h, q2, literal_six)
    s = C.s
    gens_ok = True
    for i in range(s):
        for g in q2.basis():
            v = [0] * (2 * s)
            v[2 * i], v[2 * i + 1] = g.coords
            gens_ok &= L.contains(v)
    primes = prime_divisors(q2)
    r = min((defining_rank_mod(C, h, P, literal_six) for P in primes), default=s)
    return {"det": L.det, "contains_q2_Os": gens_ok, "r": r,
            "divisible": L.det % (q2.norm ** r) == 0, "lattice": L}


# -- successive minima ----------------------------------------------------

def lattice_points(L: IntegerLattice, B: int) -> np.ndarray:
    """All v in L with sup-norm <= B, by back-substitution on the triangular basis."""
    H = np.array(L.matrix, dtype=np.int64)
    n = L.dim
    # partial solutions: coefficient vectors y_{k..n-1}; v_i depends on y_{i..n-1}
    partial = np.zeros((1, 0), dtype=np.int64)
    for i in range(n - 1, -1, -1):
        rest = partial @ H[i, i + 1:] if partial.shape[1] else np.zeros(len(partial), dtype=np.int64)
        d = H[i, i]
        lo = np.ceil((-B - rest) / d).astype(np.int64)
        hi = np.floor((B - rest) / d).astype(np.int64)
        cnt = np.maximum(hi - lo + 1, 0)
        total = int(cnt.sum())
        check_budget("lattice_points", total, BUDGETS.points)
        rep = np.repeat(np.arange(len(partial)), cnt)
        offs = np.arange(total) - np.repeat(np.cumsum(cnt) - cnt, cnt)
        y = lo[rep] + offs
        partial = np.concatenate([y[:, None], partial[rep]], axis=1)
    return partial @ H.T


def count_points(L: IntegerLattice, B) -> int:
    return int(len(lattice_points(L, int(math.floor(B)))))


@dataclass(frozen=True)
class MinimaReport:
    lambdas: tuple[int, ...]
    witnesses: tuple[tuple[int, ...], ...]

    def to_json(self) -> dict:
        return {"lambdas": list(self.lambdas), "witnesses": [list(w) for w in self.witnesses]}


def _independent(rows: list[list[Fraction]], v: list[int]) -> list[Fraction] | None:
    """Reduce v against an echelon list; return the reduced row if independent."""
    w = [Fraction(x) for x in v]
    for row in rows:
        p = next(i for i, x in enumerate(row) if x != 0)
        if w[p] != 0:
            f = w[p] / row[p]
            w = [a - f * b for a, b in zip(w, row)]
    return w if any(w) else None


def successive_minima(L: IntegerLattice) -> MinimaReport:
    """Sup-norm successive minima, greedily in order of (norm, lex)."""
    n = L.dim
    if n > 8:
        raise InputError("successive minima are only computed up to dimension 8")
    bound = max(max(abs(v) for v in row) for row in L.matrix)
    r = 1
    while True:
        pts = lattice_points(L, min(r, bound))
        norms = np.abs(pts).max(axis=1)
        keep = norms > 0
        pts, norms = pts[keep], norms[keep]
        order = np.lexsort(tuple(pts[:, i] for i in range(n - 1, -1, -1)) + (norms,))
        echelon: list[list[Fraction]] = []
        lams, wits = [], []
        for idx in order:
            v = pts[idx].tolist()
            red = _independent(echelon, v)
            if red is not None:
                echelon.append(red)
                lams.append(int(norms[idx]))
                wits.append(tuple(v))
                if len(lams) == n:
                    return MinimaReport(tuple(lams), tuple(wits))
        if r >= bound:
            raise AssertionError("basis vectors were not found within their own norm")
        r *= 2


def point_bound(lambdas: Sequence[int], B) -> float:
    return float(np.prod([1 + float(B) / lam for lam in lambdas]))
