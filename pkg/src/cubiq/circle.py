"""Arc dissection, singular series and integral, zero counts, and the exponent ledger."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Sequence

import numpy as np

from .config import BUDGETS, check_budget
from .errors import InputError
from .field import FieldSpec, MinkowskiVec, ResidueClass, enumerate_residues
from .forms import CubicForm
from .sums import Box, box_points, check_center, complete_sum, count_N_h, height_count


@dataclass(frozen=True)
class ArcParams:
    P: Fraction
    nu: Fraction = Fraction(1, 7)
    Q_exp: Fraction = Fraction(13, 11)

    def __post_init__(self):
        object.__setattr__(self, "P", Fraction(self.P))
        object.__setattr__(self, "nu", Fraction(self.nu))
        object.__setattr__(self, "Q_exp", Fraction(self.Q_exp))
        if not 0 < self.nu < Fraction(1, 6):
            raise InputError("nu must lie in (0, 1/6)")
        if self.Q_exp > Fraction(3, 2):
            raise InputError("Q = P^Q_exp must not exceed P^(3/2)")
        if self.P < 1:
            raise InputError("P must be at least 1")

    @property
    def Q(self) -> float:
        return float(self.P) ** float(self.Q_exp)

    @property
    def major_norm_bound(self) -> float:
        return float(self.P) ** float(self.nu)

    @property
    def radius(self) -> float:
        return float(self.P) ** float(self.nu - 3)

    def within_radius(self, d: Fraction) -> bool:
        """Exact test of d < P^(nu - 3) via integer powers."""
        q = self.nu.denominator
        e = 3 * q - self.nu.numerator        # P^(nu-3) = P^(-e/q)
        return Fraction(d) ** q * self.P ** e < 1


def torus_distance(alpha: MinkowskiVec, gamma) -> Fraction:
    """Height of alpha - gamma reduced to [-1/2, 1/2)^2."""
    g = gamma.coords
    out = []
    for a, b in zip(alpha.coords, g):
        x = Fraction(a) - Fraction(b)
        x -= math.floor(x + Fraction(1, 2))
        out.append(abs(x))
    return max(out)


def major_arcs_disjoint(params: ArcParams, F: FieldSpec, classes=None) -> bool:
    classes = classes or enumerate_residues(params.major_norm_bound, F)
    for g1, g2 in itertools.combinations(classes, 2):
        d = torus_distance(g1.gamma.to_minkowski(), g2.gamma)
        if params.within_radius(d / 2):
            return False
    return True


def classify_arc(alpha: MinkowskiVec, params: ArcParams, F: FieldSpec | None = None) -> tuple[str, ResidueClass | None]:
    F = F or alpha.F
    if not alpha.exact:
        alpha = MinkowskiVec(F, Fraction(alpha.x1), Fraction(alpha.x2))
    classes = enumerate_residues(params.major_norm_bound, F)
    if not major_arcs_disjoint(params, F, classes):
        raise AssertionError("major arcs overlap at these parameters")
    for g in classes:
        if params.within_radius(torus_distance(alpha, g.gamma)):
            return "major", g
    return "minor", None


# -- singular series ------------------------------------------------------

def singular_series(C: CubicForm, R, F: FieldSpec | None = None, cap: float | None = None,
                    eps: float = 0.1) -> dict:
    """Truncated series: sum over classes with N(a_gamma) <= R of N^(-2s) S_gamma."""
    F = F or C.F
    s = C.s
    classes = enumerate_residues(R, F)
    per_norm: dict[int, dict] = {}
    partial = []
    total = 0j
    for cls in classes:
        S = complete_sum(C, cls, cap=cap).value
        term = S / cls.norm ** (2 * s)
        total += term
        row = per_norm.setdefault(cls.norm, {"classes": 0, "sum": 0j, "max_abs": 0.0})
        row["classes"] += 1
        row["sum"] += term
        row["max_abs"] = max(row["max_abs"], abs(term))
    running = 0j
    for k in sorted(per_norm):
        running += per_norm[k]["sum"]
        partial.append((k, running))
    table = []
    for k in sorted(per_norm):
        r = per_norm[k]
        table.append({"k": k, "classes": r["classes"], "class_ratio": r["classes"] / k ** (1 + eps),
                      "sum_re": r["sum"].real, "sum_im": r["sum"].imag, "max_abs": r["max_abs"],
                      "decay_ref": k ** (1 - s / 6 + eps)})
    return {"R": float(R), "value": total, "partial_sums": partial, "per_norm": table,
            "classes": len(classes)}


# -- singular integral ----------------------------------------------------

def _sample_box(box: Box, rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
    lo = np.array([[float(a), float(b)] for a, b in box.lo])
    hi = np.array([[float(a), float(b)] for a, b in box.hi])
    U = rng.random((n, box.s, 2))
    X = lo + U * (hi - lo)
    return X[..., 0], X[..., 1]


def _eval_real(C: CubicForm, X1: np.ndarray, X2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """C at real points of K_R^s (float coordinates), in basis coordinates."""
    F = C.F
    r1 = np.zeros(X1.shape[0])
    r2 = np.zeros(X1.shape[0])
    for (i, j, k), c in C.terms:
        p = F.mul(F.mul((X1[:, i], X2[:, i]), (X1[:, j], X2[:, j])), (X1[:, k], X2[:, k]))
        q = F.mul(p, c)
        r1 += q[0]
        r2 += q[1]
    return r1, r2


def singular_integral(C: CubicForm, box: Box, method: str = "density", samples: int = 10 ** 7,
                      seed: int = 12345, deltas: Sequence[float] | None = None, Z: float = 8.0,
                      allow_uncentered: bool = False, chunk: int = 1 << 20) -> dict:
    """Numerical singular integral over `box`.

    density: (2 delta)^-2 vol{xi : both basis coordinates of C(xi) within delta},
    extrapolated linearly to delta = 0 and divided by |Delta| (the Jacobian of
    zeta -> tr(zeta c)). oscillatory: the zeta-integral over |zeta| < Z is done in
    closed form (a product of sinc kernels) and the xi-integral by Monte Carlo.
    """
    if box.center_kind != "centered_at_z" and not allow_uncentered:
        raise InputError("the singular integral needs a box centered at a nonsingular zero")
    if box.center_kind == "centered_at_z":
        check_center(C, box.center)
    check_budget("singular_integral", samples, BUDGETS.monte_carlo)
    F = C.F
    vol = box.volume()
    rng = np.random.Generator(np.random.Philox(seed))
    T = np.array(F.trace_form, dtype=float)
    absD = abs(F.delta)
    if method == "density":
        deltas = list(deltas or [0.1 * 2.0 ** -k for k in range(5)])
        hits = np.zeros(len(deltas))
        done = 0
        while done < samples:
            n = min(chunk, samples - done)
            X1, X2 = _sample_box(box, rng, n)
            c1, c2 = _eval_real(C, X1, X2)
            m = np.maximum(np.abs(c1), np.abs(c2))
            for i, d in enumerate(deltas):
                hits[i] += np.count_nonzero(m < d)
            done += n
        p = hits / samples
        est = vol * p / (2 * np.array(deltas)) ** 2
        se = vol * np.sqrt(np.maximum(p * (1 - p), 1.0 / samples) / samples) / (2 * np.array(deltas)) ** 2
        w = 1 / se ** 2
        A = np.stack([np.ones(len(deltas)), np.array(deltas)], axis=1)
        cov = np.linalg.inv(A.T @ (A * w[:, None]))
        coef = cov @ (A.T @ (w * est))
        dens, dens_se = float(coef[0]), float(math.sqrt(cov[0, 0]))
        jump = abs(est[-1] - est[-2])
        flagged = bool(jump > 3 * math.hypot(se[-1], se[-2]) and jump > 0.1 * abs(est[-1]))
        return {"method": "density", "value": dens / absD, "stderr": dens_se / absD, "density": dens,
                "sweep": [{"delta": d, "estimate": float(e), "stderr": float(s)} for d, e, s in zip(deltas, est, se)],
                "nonconvergent": flagged, "samples": samples, "seed": seed}
    if method == "oscillatory":
        acc = []
        done = 0
        while done < samples:
            n = min(chunk, samples - done)
            X1, X2 = _sample_box(box, rng, n)
            c1, c2 = _eval_real(C, X1, X2)
            u = np.stack([T[0, 0] * c1 + T[0, 1] * c2, T[1, 0] * c1 + T[1, 1] * c2], axis=1)
            # integral over |zeta_j| < Z of e(zeta_j u_j) = sin(2 pi Z u_j) / (pi u_j)
            kern = np.where(np.abs(u) > 1e-300, np.sin(2 * np.pi * Z * u) / (np.pi * np.where(u == 0, 1, u)), 2 * Z)
            acc.append(vol * kern.prod(axis=1))
            done += n
        vals = np.concatenate(acc)
        return {"method": "oscillatory", "value": float(vals.mean()), "stderr": float(vals.std(ddof=1) / math.sqrt(len(vals))),
                "Z": Z, "samples": samples, "seed": seed}
    raise InputError(f"unknown method {method!r}")


# -- zero counts ----------------------------------------------------------

def _split(C: CubicForm) -> tuple[list[int], list[int]] | None:
    """A balanced split of the variables with no monomial mixing the two halves."""
    s = C.s
    adj = {i: set() for i in range(s)}
    for idx, _ in C.terms:
        for a in idx:
            adj[a] |= set(idx)
    comps, seen = [], set()
    for i in range(s):
        if i in seen:
            continue
        stack, comp = [i], []
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            comp.append(v)
            stack += list(adj[v] - seen)
        comps.append(sorted(comp))
    if len(comps) < 2:
        return None
    best = None
    for mask in range(1, 2 ** len(comps) - 1):
        left = sorted(v for k, c in enumerate(comps) if mask >> k & 1 for v in c)
        right = sorted(v for k, c in enumerate(comps) if not mask >> k & 1 for v in c)
        key = max(len(left), len(right))
        if best is None or key < best[0]:
            best = (key, left, right)
    return best[1], best[2]


def _restrict(C: CubicForm, vars_: list[int]) -> CubicForm:
    pos = {v: i for i, v in enumerate(vars_)}
    coeffs = {tuple(pos[a] for a in idx): c for idx, c in C.terms if all(a in pos for a in idx)}
    return CubicForm.from_dict(C.F, len(vars_), coeffs)


def _sub_box(box: Box, vars_: list[int]) -> Box:
    return Box(tuple(box.lo[v] for v in vars_), tuple(box.hi[v] for v in vars_), box.center_kind, box.half_open)


def _values(C: CubicForm, box: Box, P) -> np.ndarray:
    out = []
    for X1, X2 in box_points(box, P):
        c1, c2 = C.eval_batch(X1, X2)
        out.append(np.stack([c1, c2], axis=1))
    if not out:
        return np.zeros((0, 2), dtype=np.int64)
    return np.concatenate(out, axis=0)


def brute_count(C: CubicForm, P, box: Box | None = None, path: str = "auto", cap: float | None = None) -> int:
    """N(P) = #{x in P*box : C(x) = 0}, by direct enumeration or a split-sum hash join."""
    box = box or Box.symmetric(C.s)
    cap = BUDGETS.points if cap is None else cap
    split = _split(C) if path in ("auto", "split") else None
    if path == "split" and split is None:
        raise InputError("form does not separate into independent variable groups")
    if split is not None:
        left, right = split
        bl, br = _sub_box(box, left), _sub_box(box, right)
        check_budget("brute_count(split)", max(bl.count(P), br.count(P)), cap)
        va = _values(_restrict(C, left), bl, P)
        vb = -_values(_restrict(C, right), br, P)
        ua, ca = np.unique(va, axis=0, return_counts=True)
        ub, cb = np.unique(vb, axis=0, return_counts=True)
        both = np.concatenate([ua, ub], axis=0)
        _, inv, cnt = np.unique(both, axis=0, return_inverse=True, return_counts=True)
        inv = inv.ravel()
        ia = inv[: len(ua)]
        ib = inv[len(ua):]
        wa = np.zeros(len(cnt), dtype=np.int64)
        wb = np.zeros(len(cnt), dtype=np.int64)
        wa[ia] = ca
        wb[ib] = cb
        return int(np.sum(wa * wb))
    check_budget("brute_count(direct)", box.count(P), cap)
    total = 0
    for X1, X2 in box_points(box, P):
        c1, c2 = C.eval_batch(X1, X2)
        total += int(np.count_nonzero((c1 == 0) & (c2 == 0)))
    return total


def asymptotic_report(C: CubicForm, P_list: Sequence, params: dict | None = None) -> dict:
    """Rows (P, N(P), N(P)/P^(2(s-3)), S(P^nu), J, sigma_hat, ratio); no verdict."""
    params = dict(params or {})
    nu = Fraction(params.get("nu", Fraction(1, 7)))
    box = params.get("box") or Box.symmetric(C.s)
    J = params.get("J")
    if J is None:
        J = singular_integral(C, box, "density", samples=int(params.get("samples", 2 * 10 ** 6)),
                              seed=int(params.get("seed", 12345)), allow_uncentered=True)
    rows = []
    for P in P_list:
        N = brute_count(C, P, box)
        scale = float(P) ** (2 * (C.s - 3))
        R = float(P) ** float(nu)
        S = singular_series(C, R)["value"].real
        sigma = S * J["value"]
        rows.append({"P": float(P), "N": N, "N_scaled": N / scale, "series": S, "integral": J["value"],
                     "sigma_hat": sigma, "ratio": (N / scale) / sigma if sigma else math.inf})
    return {"rows": rows, "integral": J, "nu": str(nu)}


# -- the A-sum ------------------------------------------------------------

def a_sum(C: CubicForm, theta: MinkowskiVec, R, H: int, P, eps: float = 0.1, cap: float | None = None) -> dict:
    """sum over gamma with R < N^(1/2) <= 2R and |h| <= H of N(gamma + theta, P, h)^(1/2)."""
    F, s = C.F, C.s
    R = float(R)
    classes = [c for c in enumerate_residues(4 * R * R, F) if R * R < c.norm <= 4 * R * R]
    hr = range(-H, H + 1)
    hs = list(itertools.product(itertools.product(hr, hr), repeat=s))
    cap = BUDGETS.points if cap is None else cap
    check_budget("a_sum", len(classes) * len(hs) * height_count(s, P), cap)
    total = 0.0
    parts = []
    for cls in classes:
        alpha = cls.gamma.to_minkowski() + theta
        sub = math.fsum(math.sqrt(count_N_h(C, alpha, P, list(h))) for h in hs)
        parts.append(sub)
    total = math.fsum(parts)
    th = float(theta.height())
    Hh = max(H, 1)
    Pf = float(P)
    eta = th + 1 / (Pf * Pf * Hh)
    n = 2
    inner = 1 + (R * Hh ** 3 * eta) ** (s / 2) + Hh ** s / (R * Pf * Pf * eta) ** (s / 2) * min(1.0, Pf * Pf * eta)
    shape = (R * R * Pf ** (s / 2 + eps) * inner) ** n
    return {"value": total, "classes": len(classes), "shifts": len(hs), "eta": eta, "bound_shape": shape,
            "ratio": total / shape}


# -- exponent ledger ------------------------------------------------------

VARS = ("rho", "f", "h", "y")


def _affine(obj) -> dict[str, Fraction]:
    if isinstance(obj, (int, str, Fraction)):
        return {"const": Fraction(obj)}
    return {k: Fraction(v) for k, v in obj.items()}


def _eval(expr: dict[str, Fraction], point: dict[str, Fraction]) -> Fraction:
    return expr.get("const", Fraction(0)) + sum(c * point[k] for k, c in expr.items() if k != "const")


def _sub(a: dict, b: dict) -> dict:
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, Fraction(0)) - v
    return out


def _solve(rows: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction] | None:
    n = len(rows)
    M = [r[:] + [b] for r, b in zip(rows, rhs)]
    for c in range(n):
        piv = next((i for i in range(c, n) if M[i][c] != 0), None)
        if piv is None:
            return None
        M[c], M[piv] = M[piv], M[c]
        for i in range(n):
            if i != c and M[i][c] != 0:
                f = M[i][c] / M[c][c]
                M[i] = [a - f * b for a, b in zip(M[i], M[c])]
    return [M[i][n] / M[i][i] for i in range(n)]


def regime_vertices(constraints: list[tuple[dict, str]], variables: list[str]) -> list[dict]:
    """Vertices of {expr op 0} (closure), by solving every subset of active constraints."""
    k = len(variables)
    if k == 0:
        return [{}]
    verts = []
    for combo in itertools.combinations(constraints, k):
        rows = [[e.get(v, Fraction(0)) for v in variables] for e, _ in combo]
        rhs = [-e.get("const", Fraction(0)) for e, _ in combo]
        sol = _solve(rows, rhs)
        if sol is None:
            continue
        pt = dict(zip(variables, sol))
        if all(_eval(e, pt) <= 0 for e, _ in constraints) and pt not in verts:
            verts.append(pt)
    return verts


@dataclass
class LedgerEntry:
    name: str
    lhs: dict
    rhs: dict
    direction: str
    anchor: str
    regime: list = field(default_factory=list)
    sentinel: bool = False
    kind: str = "affine"
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_json(cls, obj: dict) -> LedgerEntry:
        reg = [(_affine(c["expr"]), c["op"]) for c in obj.get("regime", [])]
        return cls(obj["name"], _affine(obj.get("lhs", 0)), _affine(obj.get("rhs", 0)), obj.get("direction", "<"),
                   obj["anchor"], reg, bool(obj.get("sentinel", False)), obj.get("kind", "affine"),
                   obj.get("extra", {}))


def verify_affine(entry: LedgerEntry) -> tuple[bool, str]:
    """lhs - rhs op 0 on the whole regime polygon, checked exactly at its vertices."""
    g = _sub(entry.lhs, entry.rhs)
    variables = sorted({k for e in [g] + [c for c, _ in entry.regime] for k in e if k != "const"})
    verts = regime_vertices(entry.regime, variables)
    if not verts:
        return False, "empty regime"
    vals = [(_eval(g, v), v) for v in verts]
    if any(x > 0 for x, _ in vals):
        bad = next(v for x, v in vals if x > 0)
        return False, f"exceeds at {_fmt_point(bad)}"
    if entry.direction == "<=":
        return True, f"max {max(x for x, _ in vals)} over {len(verts)} vertices"
    zeros = [v for x, v in vals if x == 0]
    if not zeros:
        return True, f"max {max(x for x, _ in vals)} over {len(verts)} vertices"
    # a zero on the closure is fine only if a strict constraint cuts that face away
    for c, op in entry.regime:
        if op == "<" and all(_eval(c, v) == 0 for v in zeros):
            return True, "equality only on an excluded boundary"
    return False, f"equality at {_fmt_point(zeros[0])}"


def _fmt_point(pt: dict) -> str:
    return ", ".join(f"{k}={v}" for k, v in pt.items()) or "constant"


def _e_gap(r: int, e_r: Fraction, n: int, rho: Fraction, y: Fraction) -> Fraction:
    """LHS - RHS in base-P logarithms: rho = log R, y = log u, P^2 eta = 1/(R u).

    The left side is a maximum over x = log(S/R) in [-rho, 0] of a
    piecewise-linear function, attained at a breakpoint.
    """
    k = Fraction(r * n, 2)
    cands = [x for x in (-rho, Fraction(0), y) if -rho <= x <= 0]
    lhs = max(-n * x + k * min(y, x) for x in cands)
    rhs = n * rho + k * y + n * e_r * min(Fraction(0), -rho - y)
    return lhs - rhs


# both sides are positively homogeneous in (rho, y), and on each cone cut out
# by y = 0 and y = -rho the gap is convex, so these rays are exhaustive
E_RAYS = ((Fraction(0), Fraction(1)), (Fraction(1), Fraction(0)), (Fraction(1), Fraction(-1)), (Fraction(0), Fraction(-1)))


def e_exponent_check(r: int, e_r: Fraction, n: int = 2) -> tuple[bool, str]:
    """max_{1 <= S <= R} (R/S)^n min(u, S/R)^(rn/2) <= R^n u^(rn/2) min(1, P^2 eta)^(n e(r))."""
    for rho, y in E_RAYS:
        gap = _e_gap(r, Fraction(e_r), n, rho, y)
        if gap > 0:
            return False, f"fails along rho={rho}, y={y} (gap {gap})"
    return True, "holds on all extreme rays"


def load_ledger(path=None) -> dict:
    if path is None:
        text = resources.files("cubiq").joinpath("data/ledger.json").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    return json.loads(text)


def exponent_ledger(path=None) -> list[dict]:
    """Verify every ledger entry exactly; sentinel entries are expected to fail."""
    data = load_ledger(path)
    out = []
    for obj in data["entries"]:
        entry = LedgerEntry.from_json(obj)
        if entry.kind == "affine":
            ok, detail = verify_affine(entry)
        elif entry.kind == "e_exponent":
            ok, detail = e_exponent_check(int(entry.extra["r"]), Fraction(entry.extra["e"]))
        else:
            raise InputError(f"unknown ledger entry kind {entry.kind!r}")
        out.append({"name": entry.name, "anchor": entry.anchor, "direction": entry.direction,
                    "holds": ok, "sentinel": entry.sentinel, "pass": ok != entry.sentinel, "detail": detail})
    return out
