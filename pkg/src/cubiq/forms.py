"""Cubic forms over the ring of integers of an imaginary quadratic field.

A form is kept two ways: as the input polynomial (monomial -> coefficient) and
as a fully symmetric tensor c_ijk representing 6 times that polynomial, so that
every c_ijk is integral. With this tensor

    sum_ijk c_ijk x_i x_j x_k = 6 C(x),    B_i(x, y) = sum_jk c_ijk x_j y_k,

the Hessian of C is M(x)_jk = sum_i c_ijk x_i, and dC/dx_i (x) = B_i(x, x)/2.
"""

from __future__ import annotations

import itertools
import re
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

import numpy as np

from . import _lattice
from .config import BUDGETS, check_budget
from .errors import InputError
from .field import AlgInt, FieldElem, FieldSpec, IdealRep, MinkowskiVec, make_field

Index3 = tuple[int, int, int]


def _perm_count(idx: Index3) -> int:
    c = Counter(idx)
    out = factorial(3)
    for m in c.values():
        out //= factorial(m)
    return out


@dataclass(frozen=True)
class CubicForm:
    F: FieldSpec
    s: int
    terms: tuple[tuple[Index3, tuple[int, int]], ...]   # sorted (i<=j<=k) -> coefficient, 0-based
    scaled: bool = field(default=True, compare=False)

    def __post_init__(self):
        if self.s < 1:
            raise InputError("a form needs at least one variable")
        for idx, _ in self.terms:
            if len(idx) != 3 or list(idx) != sorted(idx) or not all(0 <= i < self.s for i in idx):
                raise InputError(f"bad monomial index {idx}")

    @classmethod
    def from_dict(cls, F: FieldSpec, s: int, coeffs: dict) -> CubicForm:
        acc: dict[Index3, list[int]] = {}
        for idx, c in coeffs.items():
            key = tuple(sorted(int(i) for i in idx))
            if len(key) != 3:
                raise InputError(f"monomial {idx} is not cubic")
            c = c.coords if isinstance(c, AlgInt) else (c, 0) if isinstance(c, int) else tuple(c)
            cur = acc.setdefault(key, [0, 0])
            cur[0] += int(c[0])
            cur[1] += int(c[1])
        terms = tuple(sorted((k, (v[0], v[1])) for k, v in acc.items() if v[0] or v[1]))
        return cls(F, s, terms)

    @classmethod
    def diagonal(cls, F: FieldSpec, coeffs) -> CubicForm:
        return cls.from_dict(F, len(coeffs), {(i, i, i): c for i, c in enumerate(coeffs)})

    @property
    def coeff_dict(self) -> dict[Index3, tuple[int, int]]:
        return dict(self.terms)

    @property
    def tensor(self) -> np.ndarray:
        """Symmetric tensor of 6C, shape (s, s, s, 2), in basis coordinates."""
        T = np.zeros((self.s, self.s, self.s, 2), dtype=np.int64)
        for idx, (a1, a2) in self.terms:
            k = 6 // _perm_count(idx)
            for p in set(itertools.permutations(idx)):
                T[p] = (k * a1, k * a2)
        return T

    def is_diagonal(self) -> bool:
        return all(i == j == k for (i, j, k), _ in self.terms)

    def diagonal_coeffs(self) -> list[tuple[int, int]]:
        if not self.is_diagonal():
            raise InputError("form is not diagonal")
        d = self.coeff_dict
        return [d.get((i, i, i), (0, 0)) for i in range(self.s)]

    def variables_used(self) -> set[int]:
        return {i for idx, _ in self.terms for i in idx}

    # -- evaluation -------------------------------------------------------

    def value(self, x) -> FieldElem | AlgInt:
        """C(x) for the input polynomial, from the monomial list."""
        xs = _coords(x, self.s)
        F = self.F
        tot = (0, 0)
        for (i, j, k), c in self.terms:
            p = F.mul(F.mul(F.mul(xs[i], xs[j]), xs[k]), c)
            tot = (tot[0] + p[0], tot[1] + p[1])
        return _wrap(F, tot)

    def tensor_value(self, x) -> FieldElem | AlgInt:
        """sum_ijk c_ijk x_i x_j x_k, which is 6 C(x)."""
        xs = _coords(x, self.s)
        T = self.tensor.tolist()
        F = self.F
        tot = (0, 0)
        for i, j, k in itertools.product(range(self.s), repeat=3):
            c = T[i][j][k]
            if c[0] or c[1]:
                p = F.mul(F.mul(F.mul(xs[i], xs[j]), xs[k]), tuple(c))
                tot = (tot[0] + p[0], tot[1] + p[1])
        return _wrap(F, tot)

    def eval_batch(self, X1: np.ndarray, X2: np.ndarray, scale: int = 1) -> tuple[np.ndarray, np.ndarray]:
        """Coordinates of scale*C(x) for stacked integer points X = X1 + X2 w, shape (..., s)."""
        F = self.F
        r1 = np.zeros(X1.shape[:-1], dtype=np.int64)
        r2 = np.zeros_like(r1)
        cache: dict[tuple, tuple] = {}

        def prod(key):
            if key in cache:
                return cache[key]
            if len(key) == 1:
                v = (X1[..., key[0]], X2[..., key[0]])
            else:
                v = F.mul(prod(key[:-1]), prod(key[-1:]))
            cache[key] = v
            return v

        for idx, c in self.terms:
            p1, p2 = F.mul(prod(idx), (scale * c[0], scale * c[1]))
            r1 = r1 + p1
            r2 = r2 + p2
        return r1, r2

    # -- text format ------------------------------------------------------

    def format(self) -> str:
        lines = [f"field d={self.F.d}", f"vars s={self.s}"]
        for idx, (a1, a2) in self.terms:
            mono = "*".join(f"x{i + 1}" if e == 1 else f"x{i + 1}^{e}" for i, e in sorted(Counter(idx).items()))
            lines.append(f"{mono} : {a1}{'+' if a2 >= 0 else '-'}{abs(a2)}*w")
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {"field": self.F.to_json(), "s": self.s,
                "terms": [[list(i), list(c)] for i, c in self.terms]}


def _coords(x, s: int) -> list[tuple]:
    out = []
    for v in x:
        if isinstance(v, (AlgInt, FieldElem, MinkowskiVec)):
            out.append(tuple(v.coords))
        elif isinstance(v, (int, np.integer, Fraction)):
            out.append((v, 0))
        else:
            out.append(tuple(v))
    if len(out) != s:
        raise InputError(f"expected {s} coordinates, got {len(out)}")
    return out


def _wrap(F: FieldSpec, c) -> AlgInt | FieldElem:
    a, b = c
    if isinstance(a, float) or isinstance(b, float):
        return MinkowskiVec.approx(F, a, b)
    if Fraction(a).denominator == 1 and Fraction(b).denominator == 1:
        return AlgInt(F, int(a), int(b))
    return FieldElem.of(F, a, b)


_COEF = re.compile(r"^\s*([+-]?\s*\d+)?\s*(?:([+-])\s*(\d*)\s*\*?\s*w)?\s*$")
_COEF_W = re.compile(r"^\s*([+-]?)\s*(\d*)\s*\*?\s*w\s*$")


def _parse_coeff(text: str) -> tuple[int, int]:
    t = text.strip()
    m = _COEF_W.match(t)
    if m:
        return 0, int(m.group(1) + (m.group(2) or "1"))
    m = _COEF.match(t)
    if not m or not t:
        raise InputError(f"malformed coefficient {text!r}")
    a = int(m.group(1).replace(" ", "")) if m.group(1) else 0
    b = 0
    if m.group(2):
        b = int(m.group(2) + (m.group(3) or "1"))
    return a, b


def _parse_monomial(text: str, s: int) -> Index3:
    idx: list[int] = []
    for fac in text.replace(" ", "").split("*"):
        m = re.fullmatch(r"x(\d+)(?:\^(\d+))?", fac)
        if not m:
            raise InputError(f"malformed monomial factor {fac!r}")
        i, e = int(m.group(1)), int(m.group(2) or 1)
        if not 1 <= i <= s:
            raise InputError(f"variable x{i} outside 1..{s}")
        idx += [i - 1] * e
    if len(idx) != 3:
        raise InputError(f"monomial {text!r} has degree {len(idx)}, expected 3")
    return tuple(sorted(idx))


def parse_form(text: str) -> CubicForm:
    d = s = None
    coeffs: dict[Index3, list[int]] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("field"):
            m = re.fullmatch(r"field\s+d\s*=\s*(\d+)", line)
            if not m:
                raise InputError(f"malformed field line {raw!r}")
            d = int(m.group(1))
            continue
        if line.startswith("vars"):
            m = re.fullmatch(r"vars\s+s\s*=\s*(\d+)", line)
            if not m:
                raise InputError(f"malformed vars line {raw!r}")
            s = int(m.group(1))
            continue
        if s is None or d is None:
            raise InputError("field and vars must be declared before monomials")
        if ":" not in line:
            raise InputError(f"expected 'monomial : coefficient', got {raw!r}")
        mono, coef = line.split(":", 1)
        key = _parse_monomial(mono, s)
        c = _parse_coeff(coef)
        cur = coeffs.setdefault(key, [0, 0])
        cur[0] += c[0]
        cur[1] += c[1]
    if s is None or d is None:
        raise InputError("missing field or vars declaration")
    F = make_field(d)
    return CubicForm.from_dict(F, s, {k: tuple(v) for k, v in coeffs.items()})


def load_form(path) -> CubicForm:
    try:
        with open(path) as fh:
            return parse_form(fh.read())
    except OSError as exc:
        raise InputError(f"cannot read form file {path}: {exc}") from exc


# -- bilinear forms and Hessian --------------------------------------------

def bilinear(C: CubicForm, i: int, x, y):
    """B_i(x, y) = sum_jk c_ijk x_j y_k (0-based i)."""
    if not 0 <= i < C.s:
        raise InputError(f"index {i} outside 0..{C.s - 1}")
    return _wrap(C.F, _bilinear_coords(C, x, y)[i])


def bilinear_vector(C: CubicForm, x, y) -> list:
    return [_wrap(C.F, c) for c in _bilinear_coords(C, x, y)]


def _bilinear_coords(C: CubicForm, x, y) -> list[tuple]:
    F, s = C.F, C.s
    xs, ys = _coords(x, s), _coords(y, s)
    T = C.tensor.tolist()
    out = []
    for i in range(s):
        tot = (0, 0)
        for j in range(s):
            for k in range(s):
                c = T[i][j][k]
                if c[0] or c[1]:
                    p = F.mul(F.mul(xs[j], ys[k]), tuple(c))
                    tot = (tot[0] + p[0], tot[1] + p[1])
        out.append(tot)
    return out


@dataclass(frozen=True)
class HessianMatrix:
    F: FieldSpec
    base: tuple
    entries: tuple[tuple[tuple, ...], ...]   # s x s of coordinate pairs

    def apply(self, y) -> list:
        s = len(self.entries)
        ys = _coords(y, s)
        out = []
        for j in range(s):
            tot = (0, 0)
            for k in range(s):
                p = self.F.mul(self.entries[j][k], ys[k])
                tot = (tot[0] + p[0], tot[1] + p[1])
            out.append(_wrap(self.F, tot))
        return out

    def realified(self) -> list[list]:
        """2s x 2s matrix over Q of the K-linear map, blockwise multiplication matrices."""
        s = len(self.entries)
        R = [[0] * (2 * s) for _ in range(2 * s)]
        for j in range(s):
            for k in range(s):
                m = self.F.mult_matrix(self.entries[j][k])
                for a in range(2):
                    for b in range(2):
                        R[2 * j + a][2 * k + b] = m[a][b]
        return R


def hessian(C: CubicForm, x) -> HessianMatrix:
    F, s = C.F, C.s
    xs = _coords(x, s)
    T = C.tensor.tolist()
    rows = []
    for j in range(s):
        row = []
        for k in range(s):
            tot = (0, 0)
            for i in range(s):
                c = T[i][j][k]
                if c[0] or c[1]:
                    p = F.mul(xs[i], tuple(c))
                    tot = (tot[0] + p[0], tot[1] + p[1])
            row.append(tot)
        rows.append(tuple(row))
    return HessianMatrix(F, tuple(xs), tuple(rows))


def _integer_realified(H: HessianMatrix) -> list[list[int]]:
    R = H.realified()
    den = 1
    for row in R:
        for v in row:
            den = den * Fraction(v).denominator // np.gcd(den, Fraction(v).denominator)
    return [[int(Fraction(v) * den) for v in row] for row in R]


def rank_at(C: CubicForm, x) -> int:
    """Rank over K of M(x): half the rational rank of the realified matrix."""
    r = _lattice.rank_exact(_integer_realified(hessian(C, x)))
    assert r % 2 == 0
    return r // 2


def prime_ideal_info(P: IdealRep) -> tuple[int, str]:
    """(p, kind) for a prime ideal: kind 'degree1' (norm p) or 'inert' (P = (p))."""
    from sympy import isprime

    (a, b), (_, c) = P.hnf
    N = P.norm
    if isprime(N):
        return N, "degree1"
    p = a
    if c == p and b == 0 and isprime(p):
        F = P.F
        # (p) is prime iff w's minimal polynomial x^2 - t x + nn has no root mod p
        if all((x * x - F.t * x + F.nn) % p for x in range(p)):
            return p, "inert"
    raise InputError(f"ideal {P.hnf} is not prime")


def residue_map(P: IdealRep, coords) -> int | None:
    """Image of an element of O in O/P when P has degree one (F_p)."""
    (a, b), (_, c) = P.hnf
    return (coords[0] - b * coords[1]) % a


def rank_mod(C: CubicForm, h, P: IdealRep) -> int:
    """Rank of M(h) over the residue field O/P."""
    p, kind = prime_ideal_info(P)
    H = hessian(C, h)
    for row in H.entries:
        for e in row:
            if Fraction(e[0]).denominator != 1 or Fraction(e[1]).denominator != 1:
                raise InputError("rank modulo a prime needs an integral point")
    if kind == "degree1":
        M = [[residue_map(P, e) for e in row] for row in H.entries]
        return _lattice.rank_mod_p(M, p)
    r = _lattice.rank_mod_p(H.realified(), p)
    return r // 2


def _det_over_O(F: FieldSpec, M: list[list[tuple]]) -> tuple:
    n = len(M)
    if n == 0:
        return (1, 0)
    if n == 1:
        return M[0][0]
    tot = (0, 0)
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in M[1:]]
        p = F.mul(M[0][j], _det_over_O(F, minor))
        sign = 1 if j % 2 == 0 else -1
        tot = (tot[0] + sign * p[0], tot[1] + sign * p[1])
    return tot


def minors_in_ideal(C: CubicForm, h, r: int, P: IdealRep) -> bool:
    """True iff every r x r minor of M(h) lies in P (cofactor expansion over O)."""
    H = hessian(C, h)
    s = C.s
    for rows in itertools.combinations(range(s), r):
        for cols in itertools.combinations(range(s), r):
            sub = [[H.entries[i][j] for j in cols] for i in rows]
            if not P.contains(_det_over_O(C.F, sub)):
                return False
    return True


def realified_hessian_batch(C: CubicForm, X1: np.ndarray, X2: np.ndarray) -> np.ndarray:
    """Realified Hessians for points of shape (B, s); result (B, 2s, 2s)."""
    F, s = C.F, C.s
    T = C.tensor
    B = X1.shape[0]
    E1 = np.einsum("ijk,bi->bjk", T[..., 0], X1) - F.nn * np.einsum("ijk,bi->bjk", T[..., 1], X2)
    E2 = (np.einsum("ijk,bi->bjk", T[..., 0], X2) + np.einsum("ijk,bi->bjk", T[..., 1], X1)
          + F.t * np.einsum("ijk,bi->bjk", T[..., 1], X2))
    R = np.zeros((B, 2 * s, 2 * s), dtype=np.int64)
    R[:, 0::2, 0::2] = E1
    R[:, 0::2, 1::2] = -F.nn * E2
    R[:, 1::2, 0::2] = E2
    R[:, 1::2, 1::2] = E1 + F.t * E2
    return R


def _box_points(s: int, H: int, chunk: int = 200_000):
    """Chunks of all x in O^s of height < H, as (X1, X2) arrays of shape (B, s)."""
    r = np.arange(-(H - 1), H)
    n = len(r) ** (2 * s)
    for start in range(0, n, chunk):
        flat = np.arange(start, min(start + chunk, n))
        digits = []
        for _ in range(2 * s):
            digits.append(r[flat % len(r)])
            flat = flat // len(r)
        D = np.stack(digits, axis=1)
        yield D[:, 0::2], D[:, 1::2]


def geometric_condition_scan(C: CubicForm, H: int, cap: float | None = None) -> dict:
    """Exact counts of x in O^s with |x| < H by Hessian rank r, and count/H^(2r)."""
    cap = BUDGETS.points if cap is None else cap
    total = (2 * H - 1) ** (2 * C.s)
    check_budget("geometric_condition_scan", total, cap)
    counts = np.zeros(C.s + 1, dtype=np.int64)
    for X1, X2 in _box_points(C.s, H):
        r = _lattice.rank_batch_exact(realified_hessian_batch(C, X1, X2)) // 2
        counts += np.bincount(r, minlength=C.s + 1)
    table = {r: int(counts[r]) for r in range(C.s + 1)}
    ratios = {r: table[r] / H ** (2 * r) for r in table}
    return {"H": H, "counts": table, "ratios": ratios, "total": total}


def bilinear_zero_pairs(C: CubicForm, H: int, cap: float | None = None) -> int:
    """#{(x, y) : |x|, |y| < H, B_i(x, y) = 0 for all i}, by enumeration."""
    cap = BUDGETS.points if cap is None else cap
    n = (2 * H - 1) ** (2 * C.s)
    check_budget("bilinear_zero_pairs", n * n, cap)
    pts = [np.concatenate(ch, axis=0) for ch in zip(*_box_points(C.s, H))]
    X1, X2 = pts
    total = 0
    for a in range(X1.shape[0]):
        Y1 = np.broadcast_to(X1[a], X1.shape)
        Y2 = np.broadcast_to(X2[a], X2.shape)
        b1, b2 = bilinear_batch(C, Y1, Y2, X1, X2)
        total += int(np.all((b1 == 0) & (b2 == 0), axis=1).sum())
    return total


def bilinear_batch(C: CubicForm, X1, X2, Y1, Y2, scale: int = 1):
    """Coordinates of scale*B_i(x, y), stacked points of shape (B, s); result (B, s) each."""
    F = C.F
    T = C.tensor * scale
    # x_j y_k as field products
    P1 = X1[:, :, None] * Y1[:, None, :] - F.nn * X2[:, :, None] * Y2[:, None, :]
    P2 = X1[:, :, None] * Y2[:, None, :] + X2[:, :, None] * Y1[:, None, :] + F.t * X2[:, :, None] * Y2[:, None, :]
    b1 = np.einsum("ijk,bjk->bi", T[..., 0], P1) - F.nn * np.einsum("ijk,bjk->bi", T[..., 1], P2)
    b2 = (np.einsum("ijk,bjk->bi", T[..., 0], P2) + np.einsum("ijk,bjk->bi", T[..., 1], P1)
          + F.t * np.einsum("ijk,bjk->bi", T[..., 1], P2))
    return b1, b2


def multilinear_check(C: CubicForm, w, h, z, z_alt=None) -> bool:
    """C(w+h+z) - C(w+z) - C(h+z) + C(z) - 6 sum_i z_i B_i(w, h) does not depend on z.

    C here is the stored (6-scaled) tensor form. The expression is evaluated at
    z and at a second point (zero by default) and compared exactly.
    """
    F, s = C.F, C.s
    z_alt = [(0, 0)] * s if z_alt is None else z_alt

    def add(*vs):
        cs = [_coords(v, s) for v in vs]
        return [tuple(sum(c[i][t] for c in cs) for t in range(2)) for i in range(s)]

    def psi(zz):
        val = _coords_of_value(C.tensor_value(add(w, h, zz)))
        for v, sign in ((add(w, zz), -1), (add(h, zz), -1), (add(zz), 1)):
            e = _coords_of_value(C.tensor_value(v))
            val = (val[0] + sign * e[0], val[1] + sign * e[1])
        bw = _bilinear_coords(C, w, h)
        zs = _coords(zz, s)
        for i in range(s):
            p = F.mul(zs[i], bw[i])
            val = (val[0] - 6 * p[0], val[1] - 6 * p[1])
        return tuple(Fraction(v) for v in val)

    return psi(z) == psi(z_alt)


def _coords_of_value(v) -> tuple:
    return tuple(v.coords)


def multilinear_check_batch(C: CubicForm, W, H, Z) -> np.ndarray:
    """Vectorized multilinear_check against z = 0; W, H, Z are (B, s, 2) integer arrays."""
    W, H, Z = (np.asarray(a, dtype=np.int64) for a in (W, H, Z))

    def val(X):
        return np.stack(C.eval_batch(X[..., 0], X[..., 1], scale=6), axis=-1)

    diff = val(W + H + Z) - val(W + Z) - val(H + Z) + val(Z)
    diff -= val(W + H) - val(W) - val(H)
    b1, b2 = bilinear_batch(C, W[..., 0], W[..., 1], H[..., 0], H[..., 1])
    z1, z2 = Z[..., 0], Z[..., 1]
    p1 = (z1 * b1 - C.F.nn * z2 * b2).sum(axis=1)
    p2 = (z1 * b2 + z2 * b1 + C.F.t * z2 * b2).sum(axis=1)
    diff -= 6 * np.stack([p1, p2], axis=-1)
    return np.all(diff == 0, axis=1)
