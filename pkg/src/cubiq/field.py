"""Arithmetic in an imaginary quadratic field K = Q(sqrt(-d)) and its ring of integers.

Everything is expressed in the integral basis {1, w}: w = sqrt(-d), or
w = (1 + sqrt(-d))/2 when -d = 1 mod 4. The basis element w satisfies
w^2 = t*w - nn, where t = tr(w) and nn = Norm(w).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import gcd
from typing import Iterable, Union

import numpy as np
from sympy import factorint

from . import _lattice
from .config import BUDGETS, check_budget
from .errors import InputError

Rational = Union[int, Fraction]
Real = Union[int, Fraction, float]

GUARD = 2.0 ** -40


@dataclass(frozen=True)
class FieldSpec:
    d: int
    basis_kind: str
    t: int
    nn: int

    @property
    def delta(self) -> int:
        return self.t * self.t - 4 * self.nn

    @property
    def trace_form(self) -> tuple[tuple[int, int], tuple[int, int]]:
        t, nn = self.t, self.nn
        return ((2, t), (t, t * t - 2 * nn))

    @property
    def omega(self) -> tuple[tuple[Fraction, Fraction], tuple[Fraction, Fraction]]:
        """Basis elements as (rational part, coefficient of sqrt(-d))."""
        if self.basis_kind == "sqrt_d":
            w = (Fraction(0), Fraction(1))
        else:
            w = (Fraction(1, 2), Fraction(1, 2))
        return ((Fraction(1), Fraction(0)), w)

    @property
    def omega_complex(self) -> complex:
        re, im = self.omega[1]
        return complex(float(re), float(im) * math.sqrt(self.d))

    def mul(self, a: tuple, b: tuple) -> tuple:
        a1, a2 = a
        b1, b2 = b
        return (a1 * b1 - self.nn * a2 * b2, a1 * b2 + a2 * b1 + self.t * a2 * b2)

    def conj(self, a: tuple) -> tuple:
        return (a[0] + self.t * a[1], -a[1])

    def norm_of(self, a: tuple):
        a1, a2 = a
        return a1 * a1 + self.t * a1 * a2 + self.nn * a2 * a2

    def trace_of(self, a: tuple):
        return 2 * a[0] + self.t * a[1]

    def mult_matrix(self, m: tuple) -> list[list[int]]:
        """Matrix of x -> m*x acting on coordinate columns."""
        m1, m2 = m
        return [[m1, -self.nn * m2], [m2, m1 + self.t * m2]]

    def to_json(self) -> dict:
        return {"d": self.d, "basis_kind": self.basis_kind, "delta": self.delta}


def make_field(d: int) -> FieldSpec:
    if not isinstance(d, (int, np.integer)) or isinstance(d, bool):
        raise InputError(f"d must be an integer, got {d!r}")
    d = int(d)
    if d < 1:
        raise InputError(f"d must be positive, got {d}")
    if any(e > 1 for e in factorint(d).values()):
        raise InputError(f"d = {d} is not squarefree")
    if (-d) % 4 == 1:
        return FieldSpec(d, "half_plus", 1, (1 + d) // 4)
    return FieldSpec(d, "sqrt_d", 0, d)


def field_from_json(obj: dict) -> FieldSpec:
    F = make_field(int(obj["d"]))
    if "delta" in obj and int(obj["delta"]) != F.delta:
        raise InputError("discriminant does not match d")
    return F


@dataclass(frozen=True)
class AlgInt:
    F: FieldSpec
    a1: int
    a2: int

    @classmethod
    def of(cls, F: FieldSpec, a1: int, a2: int = 0) -> AlgInt:
        return cls(F, int(a1), int(a2))

    @property
    def coords(self) -> tuple[int, int]:
        return (self.a1, self.a2)

    def _coerce(self, other) -> AlgInt:
        if isinstance(other, AlgInt):
            return other
        if isinstance(other, (int, np.integer)):
            return AlgInt(self.F, int(other), 0)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return AlgInt(self.F, self.a1 + o.a1, self.a2 + o.a2)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return AlgInt(self.F, self.a1 - o.a1, self.a2 - o.a2)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return AlgInt(self.F, -self.a1, -self.a2)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return AlgInt(self.F, *self.F.mul(self.coords, o.coords))

    __rmul__ = __mul__

    def __bool__(self) -> bool:
        return bool(self.a1 or self.a2)

    def conj(self) -> AlgInt:
        return AlgInt(self.F, *self.F.conj(self.coords))

    def norm(self) -> int:
        return self.F.norm_of(self.coords)

    def trace(self) -> int:
        return self.F.trace_of(self.coords)

    def height(self) -> int:
        return max(abs(self.a1), abs(self.a2))

    def to_complex(self) -> complex:
        return self.a1 + self.a2 * self.F.omega_complex

    def __repr__(self) -> str:
        return f"AlgInt({self.a1}+{self.a2}w; d={self.F.d})"


def _sort_key(c: tuple[int, int], F: FieldSpec) -> tuple:
    # shortest first, then smallest norm, then prefer positive coordinates
    return (max(abs(c[0]), abs(c[1])), F.norm_of(c), -c[0], -c[1])


@dataclass(frozen=True)
class FieldElem:
    """num/den in canonical form: den > 0 and gcd(num coords, den) = 1."""

    num: AlgInt
    den: int

    def __post_init__(self):
        if self.den == 0:
            raise InputError("zero denominator")
        g = gcd(gcd(self.num.a1, self.num.a2), self.den)
        if self.den < 0:
            g = -g
        if g != 1:
            object.__setattr__(self, "num", AlgInt(self.num.F, self.num.a1 // g, self.num.a2 // g))
            object.__setattr__(self, "den", self.den // g)

    @property
    def F(self) -> FieldSpec:
        return self.num.F

    @classmethod
    def of(cls, F: FieldSpec, x1: Rational, x2: Rational = 0) -> FieldElem:
        x1, x2 = Fraction(x1), Fraction(x2)
        D = x1.denominator * x2.denominator // gcd(x1.denominator, x2.denominator)
        return cls(AlgInt(F, int(x1 * D), int(x2 * D)), D)

    @classmethod
    def from_int(cls, a: AlgInt) -> FieldElem:
        return cls(a, 1)

    @classmethod
    def quotient(cls, a: AlgInt, q: AlgInt) -> FieldElem:
        """a/q, cleared to a rational denominator via the conjugate of q."""
        if not q:
            raise ZeroDivisionError("division by zero in O")
        return cls(a * q.conj(), q.norm())

    @property
    def coords(self) -> tuple[Fraction, Fraction]:
        return (Fraction(self.num.a1, self.den), Fraction(self.num.a2, self.den))

    def is_integral(self) -> bool:
        return self.den == 1

    def reduced(self) -> FieldElem:
        """Canonical representative of the class mod O, coordinates in [0, 1)."""
        D = self.den
        return FieldElem(AlgInt(self.F, self.num.a1 % D, self.num.a2 % D), D)

    def _coerce(self, other):
        if isinstance(other, FieldElem):
            return other
        if isinstance(other, AlgInt):
            return FieldElem(other, 1)
        if isinstance(other, (int, np.integer, Fraction)):
            return FieldElem.of(self.F, Fraction(other))
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FieldElem(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self):
        return FieldElem(-self.num, self.den)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FieldElem(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def inverse(self) -> FieldElem:
        return FieldElem.quotient(AlgInt(self.F, self.den, 0), self.num)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * o.inverse()

    def __bool__(self) -> bool:
        return bool(self.num)

    def trace(self) -> Fraction:
        return Fraction(self.num.trace(), self.den)

    def norm(self) -> Fraction:
        return Fraction(self.num.norm(), self.den * self.den)

    def height(self) -> Fraction:
        return max(abs(c) for c in self.coords)

    def to_minkowski(self) -> MinkowskiVec:
        return MinkowskiVec(self.F, *self.coords, exact=True)

    def to_json(self) -> list[str]:
        return [str(c) for c in self.coords]

    def __repr__(self) -> str:
        return f"FieldElem(({self.num.a1}+{self.num.a2}w)/{self.den})"


@dataclass(frozen=True)
class MinkowskiVec:
    """A point of K tensor R in basis coordinates; exact (Fractions) or approximate (floats)."""

    F: FieldSpec
    x1: Real
    x2: Real
    exact: bool = True

    def __post_init__(self):
        if self.exact:
            object.__setattr__(self, "x1", Fraction(self.x1))
            object.__setattr__(self, "x2", Fraction(self.x2))
        else:
            object.__setattr__(self, "x1", float(self.x1))
            object.__setattr__(self, "x2", float(self.x2))

    @classmethod
    def approx(cls, F: FieldSpec, x1: float, x2: float) -> MinkowskiVec:
        return cls(F, x1, x2, exact=False)

    @property
    def coords(self) -> tuple:
        return (self.x1, self.x2)

    def _coords_of(self, other):
        if isinstance(other, MinkowskiVec):
            return other.coords, other.exact
        if isinstance(other, FieldElem):
            return other.coords, True
        if isinstance(other, AlgInt):
            return other.coords, True
        if isinstance(other, (int, np.integer, Fraction)):
            return (Fraction(other), Fraction(0)), True
        if isinstance(other, float):
            return (other, 0.0), False
        return None, None

    def _make(self, c, exact):
        return MinkowskiVec(self.F, c[0], c[1], exact=exact)

    def __add__(self, other):
        c, ex = self._coords_of(other)
        if c is None:
            return NotImplemented
        return self._make((self.x1 + c[0], self.x2 + c[1]), self.exact and ex)

    __radd__ = __add__

    def __neg__(self):
        return self._make((-self.x1, -self.x2), self.exact)

    def __sub__(self, other):
        c, ex = self._coords_of(other)
        if c is None:
            return NotImplemented
        return self._make((self.x1 - c[0], self.x2 - c[1]), self.exact and ex)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        c, ex = self._coords_of(other)
        if c is None:
            return NotImplemented
        return self._make(self.F.mul(self.coords, c), self.exact and ex)

    __rmul__ = __mul__

    def height(self):
        return max(abs(self.x1), abs(self.x2))

    def to_complex(self) -> complex:
        return float(self.x1) + float(self.x2) * self.F.omega_complex

    def embedding_height(self) -> float:
        return abs(self.to_complex())

    def conj(self) -> MinkowskiVec:
        return self._make(self.F.conj(self.coords), self.exact)

    def trace(self):
        return self.F.trace_of(self.coords)

    def norm(self):
        return self.F.norm_of(self.coords)

    def to_elem(self) -> FieldElem:
        if not self.exact:
            raise InputError("approximate vector has no exact field element")
        return FieldElem.of(self.F, self.x1, self.x2)

    def to_json(self) -> dict:
        if self.exact:
            return {"coords": [str(self.x1), str(self.x2)], "mode": "exact"}
        return {"coords": [self.x1, self.x2], "mode": "approximate"}


def trace(alpha: MinkowskiVec):
    """Standard field trace: the sum over both complex embeddings."""
    return alpha.trace()


def norm(alpha: MinkowskiVec):
    return alpha.norm()


@dataclass(frozen=True)
class IdealRep:
    F: FieldSpec
    hnf: tuple[tuple[int, int], tuple[int, int]]

    def __post_init__(self):
        (a, b), (z, c) = self.hnf
        if z != 0 or a <= 0 or c <= 0 or not (0 <= b < a):
            raise InputError(f"not a column HNF: {self.hnf}")
        for col in ((a, 0), (b, c)):
            if _lattice.solve_upper(self.matrix, self.F.mul(col, (0, 1))) is None:
                raise InputError(f"lattice {self.hnf} is not closed under w")

    @property
    def matrix(self) -> list[list[int]]:
        return [list(r) for r in self.hnf]

    @property
    def norm(self) -> int:
        return self.hnf[0][0] * self.hnf[1][1]

    @classmethod
    def from_matrix(cls, F: FieldSpec, H: list[list[int]]) -> IdealRep:
        return cls(F, ((H[0][0], H[0][1]), (H[1][0], H[1][1])))

    @classmethod
    def unit(cls, F: FieldSpec) -> IdealRep:
        return cls(F, ((1, 0), (0, 1)))

    @classmethod
    def generated_by(cls, F: FieldSpec, gens: Iterable) -> IdealRep:
        cols = []
        for g in gens:
            c = g.coords if isinstance(g, AlgInt) else tuple(int(v) for v in g)
            cols.append(c)
            cols.append(F.mul(c, (0, 1)))
        return cls.from_matrix(F, _lattice.hnf(cols, 2))

    def contains(self, x) -> bool:
        c = x.coords if isinstance(x, AlgInt) else x
        return _lattice.solve_upper(self.matrix, c) is not None

    def basis(self) -> tuple[AlgInt, AlgInt]:
        (a, b), (_, c) = self.hnf
        return (AlgInt(self.F, a, 0), AlgInt(self.F, b, c))

    def __mul__(self, other: IdealRep) -> IdealRep:
        return IdealRep.generated_by(self.F, [x * y for x in self.basis() for y in other.basis()])

    def to_json(self) -> dict:
        return {"hnf": [list(r) for r in self.hnf]}


def all_ideals(F: FieldSpec, max_norm: int) -> list[IdealRep]:
    """Every nonzero ideal of norm <= max_norm, by scanning column HNFs."""
    out = []
    for a in range(1, max_norm + 1):
        for c in range(1, max_norm // a + 1):
            for b in range(a):
                try:
                    out.append(IdealRep(F, ((a, b), (0, c))))
                except InputError:
                    pass
    out.sort(key=lambda J: (J.norm, J.hnf))
    return out


def denominator_ideal(gamma: FieldElem, F: FieldSpec | None = None) -> IdealRep:
    """{x in O : x*gamma in O}, as the kernel of x -> num*x mod den."""
    F = F or gamma.F
    M = F.mult_matrix(gamma.num.coords)
    return IdealRep.from_matrix(F, _lattice.kernel_mod(M, gamma.den))


def denominator_norm(F: FieldSpec, a1, a2, D):
    """Norm of the denominator ideal of (a1 + a2 w)/D for reduced numerators.

    Vectorized: the index of the kernel of x -> num*x mod D equals the size of
    the image, D^2 / gcd of the 2x2 minors of [M_num | D*I].
    """
    a1 = np.asarray(a1, dtype=np.int64)
    a2 = np.asarray(a2, dtype=np.int64)
    D = np.asarray(D, dtype=np.int64)
    nrm = a1 * a1 + F.t * a1 * a2 + F.nn * a2 * a2
    g = np.gcd(np.gcd(nrm, D * np.gcd(a1, a2)), D * D)
    return (D * D) // g


@dataclass(frozen=True)
class ResidueClass:
    gamma: FieldElem
    denom_ideal: IdealRep

    def __post_init__(self):
        if self.gamma.reduced() != self.gamma:
            raise InputError("residue representative must have coordinates in [0, 1)")

    @classmethod
    def of(cls, gamma: FieldElem) -> ResidueClass:
        g = gamma.reduced()
        return cls(g, denominator_ideal(g))

    @property
    def norm(self) -> int:
        return self.denom_ideal.norm

    def to_json(self) -> dict:
        return {"gamma": self.gamma.to_json(), "denom_ideal": self.denom_ideal.to_json()}


def enumerate_residues(R: Real, F: FieldSpec, cap: float | None = None) -> list[ResidueClass]:
    """All classes of K/O whose denominator ideal has norm <= R.

    A reduced class (a1 + a2 w)/D has denominator-ideal norm between D and D^2,
    so denominators up to R suffice.
    """
    if R < 1:
        raise InputError("R must be at least 1")
    Dmax = int(math.floor(R))
    cap = BUDGETS.classes if cap is None else cap
    check_budget("enumerate_residues", sum(D * D for D in range(1, Dmax + 1)), cap)
    out = []
    for D in range(1, Dmax + 1):
        a1, a2 = np.meshgrid(np.arange(D), np.arange(D), indexing="ij")
        a1, a2 = a1.ravel(), a2.ravel()
        prim = np.gcd(np.gcd(a1, a2), D) == 1
        a1, a2 = a1[prim], a2[prim]
        N = denominator_norm(F, a1, a2, D)
        for x1, x2 in zip(a1[N <= R].tolist(), a2[N <= R].tolist()):
            out.append(ResidueClass.of(FieldElem(AlgInt(F, x1, x2), D)))
    out.sort(key=lambda r: (r.norm, r.gamma.den, r.gamma.num.coords))
    return out


def shortest_element(J: IdealRep) -> AlgInt:
    """A nonzero element of J of minimal height (ties: smallest norm, then positive coords)."""
    F = J.F
    (a, b), (_, c) = J.hnf
    for h in range(1, a + 1):
        r = np.arange(-h, h + 1)
        x1, x2 = np.meshgrid(r, r, indexing="ij")
        x1, x2 = x1.ravel(), x2.ravel()
        shell = np.maximum(np.abs(x1), np.abs(x2)) == h
        x1, x2 = x1[shell], x2[shell]
        inside = (x2 % c == 0) & ((x1 - b * (x2 // c)) % a == 0)
        if inside.any():
            cands = sorted(zip(x1[inside].tolist(), x2[inside].tolist()), key=lambda v: _sort_key(v, F))
            return AlgInt(F, *cands[0])
    raise AssertionError("rational generator of J was not found")


@dataclass(frozen=True)
class TraceVerdict:
    status: str  # premise_holds_and_integral | premise_fails
    scaled_traces: tuple
    offending_index: int | None = None

    @property
    def integral(self) -> bool:
        return self.status == "premise_holds_and_integral"


def is_integral_by_trace(alpha: MinkowskiVec, F: FieldSpec | None = None) -> TraceVerdict:
    """If tr(alpha * w_i)/Delta is an integer for both basis elements, alpha lies in O."""
    F = F or alpha.F
    if not alpha.exact:
        raise InputError("trace integrality needs an exact input")
    T = F.trace_form
    x = alpha.coords
    vals = tuple(Fraction(T[i][0] * x[0] + T[i][1] * x[1], F.delta) for i in range(2))
    for i, v in enumerate(vals):
        if v.denominator != 1:
            return TraceVerdict("premise_fails", vals, i)
    if any(Fraction(c).denominator != 1 for c in x):
        raise AssertionError(f"trace integrality lemma failed for {alpha}")
    return TraceVerdict("premise_holds_and_integral", vals)


@dataclass(frozen=True)
class ApproxResult:
    gamma: ResidueClass
    gamma_elem: FieldElem   # a/q before reduction mod O; alpha = gamma_elem + theta
    theta: MinkowskiVec
    q: AlgInt | None = None
    a: AlgInt | None = None
    error: Real | None = None       # height of q*alpha - a
    constant: float | None = None   # |alpha - gamma| * N^(1/2) * Q for the fractional form

    def to_json(self) -> dict:
        out = {"gamma": self.gamma.to_json(), "theta": self.theta.to_json()}
        if self.q is not None:
            out.update(q=list(self.q.coords), a=list(self.a.coords), error=str(self.error))
        if self.constant is not None:
            out["constant"] = self.constant
        return out


@lru_cache(maxsize=256)
def _candidates(F: FieldSpec, hmax: int, norm_cap: int | None) -> tuple[np.ndarray, np.ndarray]:
    r = range(-hmax, hmax + 1)
    cands = [(x, y) for x in r for y in r if (x or y)]
    if norm_cap is not None:
        cands = [c for c in cands if F.norm_of(c) <= norm_cap]
    cands.sort(key=lambda c: _sort_key(c, F))
    q = np.array(cands, dtype=np.int64)
    M = np.stack([np.array(F.mult_matrix(tuple(c)), dtype=np.int64) for c in q.tolist()])
    return q, M


def _best_candidate(alpha: MinkowskiVec, q: np.ndarray, M: np.ndarray) -> tuple[int, tuple, Real]:
    """Index of the candidate q minimizing |q*alpha - a| with a the nearest integer point."""
    if alpha.exact:
        x1, x2 = alpha.coords
        D = x1.denominator * x2.denominator // gcd(x1.denominator, x2.denominator)
        n = (int(x1 * D), int(x2 * D))
        big = max(abs(n[0]), abs(n[1]), D) * int(np.abs(M).max() + 1) > 2 ** 60
        Mx = M.astype(object) if big else M
        r = Mx[:, :, 0] * n[0] + Mx[:, :, 1] * n[1]
        a = (2 * r + D) // (2 * D)
        err = np.abs(r - D * a).max(axis=1)
        i = int(np.argmin(err))
        return i, (int(a[i, 0]), int(a[i, 1])), Fraction(int(err[i]), D)
    v = np.array(alpha.coords, dtype=float)
    r = M @ v
    a = np.rint(r)
    err = np.abs(r - a).max(axis=1)
    # comparisons closer than the guard are resolved in exact arithmetic
    close = np.flatnonzero(err <= err.min() + GUARD)
    ex = MinkowskiVec(alpha.F, Fraction(alpha.x1), Fraction(alpha.x2))
    best = None
    for i in close.tolist():
        qa = AlgInt(alpha.F, *q[i].tolist())
        prod = ex * qa
        aa = tuple(int(math.floor(c + Fraction(1, 2))) for c in prod.coords)
        e = max(abs(prod.x1 - aa[0]), abs(prod.x2 - aa[1]))
        if best is None or e < best[2]:
            best = (i, aa, e)
    return best


def _finish(alpha: MinkowskiVec, qa: AlgInt, aa: AlgInt, err) -> tuple[FieldElem, MinkowskiVec]:
    g = FieldElem.quotient(aa, qa)
    theta = alpha - g.to_minkowski() if alpha.exact else MinkowskiVec.approx(
        alpha.F, *(float(Fraction(c) - gc) for c, gc in zip(alpha.coords, g.coords)))
    return g, theta


def dirichlet_integral(alpha: MinkowskiVec, Q: Real, F: FieldSpec | None = None) -> ApproxResult:
    """(q, a) in O^2 with 1 <= |q| <= Q and |q*alpha - a| <= 1/Q.

    Direct search over all q of height <= Q, keeping the smallest error.
    """
    F = F or alpha.F
    Qf = Fraction(Q)
    if Qf < 1:
        raise InputError("Q must be at least 1")
    q, M = _candidates(F, int(math.floor(Qf)), None)
    i, a, err = _best_candidate(alpha, q, M)
    if Fraction(err) * Qf > 1:
        raise AssertionError(f"no approximation within 1/Q for {alpha}, Q={Q}")
    qa, aa = AlgInt(F, *q[i].tolist()), AlgInt(F, *a)
    g, theta = _finish(alpha, qa, aa, err)
    return ApproxResult(ResidueClass.of(g), g, theta, qa, aa, err)


def dirichlet_fractional(alpha: MinkowskiVec, Q: Real, F: FieldSpec | None = None) -> ApproxResult:
    """gamma in K with N(a_gamma) <= Q^2 and |alpha - gamma| << 1/(N(a_gamma)^(1/2) Q).

    The search runs over q with Norm(q) <= Q^2, so the norm bound holds
    exactly because (q) is contained in the denominator ideal of a/q.
    """
    F = F or alpha.F
    Qf = Fraction(Q)
    if Qf < 1:
        raise InputError("Q must be at least 1")
    q, M = _candidates(F, int(math.floor(Qf)), int(math.floor(Qf * Qf)))
    i, a, err = _best_candidate(alpha, q, M)
    qa, aa = AlgInt(F, *q[i].tolist()), AlgInt(F, *a)
    g, theta = _finish(alpha, qa, aa, err)
    res = ResidueClass.of(g)
    const = float(theta.height()) * math.sqrt(res.norm) * float(Qf)
    return ApproxResult(res, g, theta, qa, aa, err, const)


def dirichlet_batch(F: FieldSpec, n1, n2, D: int, Q: int, fractional: bool = False) -> dict:
    """Vectorized search for many alpha = (n1 + n2 w)/D sharing one denominator.

    Same candidate order and tie-break as the scalar routines. Returns integer
    arrays q, a (shape (B, 2)), the error numerator over D, and for the
    fractional form the reduced gamma = g/den and its denominator norm.
    """
    n1 = np.asarray(n1, dtype=np.int64)
    n2 = np.asarray(n2, dtype=np.int64)
    q, M = _candidates(F, int(Q), int(Q) * int(Q) if fractional else None)
    if np.abs(M).max() * max(int(np.abs(n1).max(initial=0)), int(np.abs(n2).max(initial=0)), D) > 2 ** 50:
        raise InputError("batch too large for exact int64 arithmetic")
    # r[c, b, :] = M_c @ n_b
    r = M[:, None, :, 0] * n1[None, :, None] + M[:, None, :, 1] * n2[None, :, None]
    a = (2 * r + D) // (2 * D)
    err = np.abs(r - D * a).max(axis=2)
    best = np.argmin(err, axis=0)          # first minimum = candidate order
    idx = np.arange(len(n1))
    out = {"q": q[best], "a": a[best, idx], "err_num": err[best, idx], "D": D}
    if fractional:
        qq, aa = out["q"], out["a"]
        nq = qq[:, 0] ** 2 + F.t * qq[:, 0] * qq[:, 1] + F.nn * qq[:, 1] ** 2
        # a * conj(q) / Norm(q)
        cq = np.stack([qq[:, 0] + F.t * qq[:, 1], -qq[:, 1]], axis=1)
        g1 = aa[:, 0] * cq[:, 0] - F.nn * aa[:, 1] * cq[:, 1]
        g2 = aa[:, 0] * cq[:, 1] + aa[:, 1] * cq[:, 0] + F.t * aa[:, 1] * cq[:, 1]
        g = np.gcd(np.gcd(g1, g2), nq)
        g1, g2, den = g1 // g, g2 // g, nq // g
        out.update(gamma_num=np.stack([g1, g2], axis=1), gamma_den=den,
                   norm=denominator_norm(F, np.mod(g1, den), np.mod(g2, den), den))
    return out


def primes_above(F: FieldSpec, p: int) -> list[IdealRep]:
    """The prime ideals of O lying over the rational prime p."""
    roots = [x for x in range(p) if (x * x - F.t * x + F.nn) % p == 0]
    if not roots:
        return [IdealRep(F, ((p, 0), (0, p)))]
    # w - x lies in the prime for each root x of w's minimal polynomial mod p
    return sorted({IdealRep.generated_by(F, [(p, 0), (-x, 1)]) for x in roots}, key=lambda J: J.hnf)


def prime_divisors(J: IdealRep) -> list[IdealRep]:
    out = []
    for p in sorted(factorint(J.norm)):
        for P in primes_above(J.F, p):
            if all(P.contains(b) for b in J.basis()):
                out.append(P)
    return out
