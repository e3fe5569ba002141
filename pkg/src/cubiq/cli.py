"""Command-line entry point: `cubiq <module> <action> ...`.

Exit codes: 0 success, 1 input error, 2 budget exceeded, 3 a verification
reported failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .config import BUDGETS
from .errors import BudgetExceeded, HypothesisViolated, InputError

DEFAULT_SEED = 12345
DEFAULT_FORM = "field d=1\nvars s=4\nx1^3 : 1\nx2^3 : 1\nx3^3 : 1\nx4^3 : 1\n"


class VerificationFailed(Exception):
    pass


# -- serialization --------------------------------------------------------

def _plain(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    if hasattr(obj, "to_json"):
        return obj.to_json()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, default=_plain, indent=1, sort_keys=True) + "\n"


def _csv_text(rows: list[dict]) -> str:
    buf = io.StringIO()
    cols = list(dict.fromkeys(k for r in rows for k in r))
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: json.loads(dumps(v)) if not isinstance(v, (int, float, str)) else v for k, v in r.items()})
    return buf.getvalue()


# -- argument helpers -----------------------------------------------------

def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"not a rational number: {text!r}") from exc


def _pair(text: str) -> tuple[Fraction, Fraction]:
    parts = text.split(",")
    if len(parts) != 2:
        raise InputError(f"expected two comma-separated coordinates, got {text!r}")
    return _fraction(parts[0]), _fraction(parts[1])


def _number_list(text: str) -> list:
    return [_fraction(t) if "/" in t else int(float(t)) for t in text.split(",") if t]


def _json_arg(text: str):
    p = Path(text)
    if p.suffix == ".json" or (len(text) < 4096 and p.exists()):
        try:
            text = p.read_text()
        except OSError as exc:
            raise InputError(f"cannot read {text}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON: {exc}") from exc


def _form(args):
    from .forms import load_form, parse_form
    return load_form(args.form) if args.form else parse_form(DEFAULT_FORM)


def _field(args):
    from .field import make_field
    return make_field(args.d)


# -- handlers -------------------------------------------------------------

def cmd_field(args):
    from .field import (MinkowskiVec, dirichlet_fractional, dirichlet_integral, enumerate_residues,
                        is_integral_by_trace)
    F = _field(args)
    if args.action == "info":
        return {"field": F.to_json(), "trace_form": F.trace_form, "omega": str(F.omega_complex)}, None
    if args.action == "residues":
        classes = enumerate_residues(args.R, F)
        rows = [{"gamma_1": str(c.gamma.coords[0]), "gamma_2": str(c.gamma.coords[1]), "norm": c.norm,
                 "hnf": c.denom_ideal.hnf} for c in classes]
        return {"field": F.to_json(), "R": args.R, "count": len(classes), "classes": rows}, rows
    alpha = MinkowskiVec(F, *_pair(args.alpha))
    if args.action == "dirichlet":
        fn = dirichlet_fractional if args.fractional else dirichlet_integral
        return {"field": F.to_json(), "Q": str(args.Q), "result": fn(alpha, _fraction(args.Q))}, None
    if args.action == "trace":
        v = is_integral_by_trace(alpha)
        return {"field": F.to_json(), "alpha": alpha, "verdict": v.__dict__}, None
    raise InputError(f"unknown field action {args.action}")


def cmd_forms(args):
    from .forms import geometric_condition_scan, rank_at
    C = _form(args)
    if args.action == "info":
        return {"form": C, "diagonal": C.is_diagonal(), "text": C.format()}, None
    if args.action == "rank":
        x = _json_arg(args.x)
        return {"form": C, "x": x, "rank": rank_at(C, [tuple(v) if isinstance(v, list) else v for v in x])}, None
    if args.action == "scan":
        res = geometric_condition_scan(C, args.H)
        rows = [{"rank": r, "count": n} for r, n in sorted(res["counts"].items())]
        return res, rows
    raise InputError(f"unknown forms action {args.action}")


def cmd_sums(args):
    from .field import FieldElem, MinkowskiVec, dirichlet_fractional
    from .sums import Box, complete_sum, weyl_bound_rhs, weyl_sum
    C = _form(args)
    F = C.F
    if args.action == "weyl":
        alpha = MinkowskiVec(F, *_pair(args.alpha))
        rows = []
        for P in _number_list(args.P):
            rep = weyl_sum(C, alpha, P, Box.symmetric(C.s), literal_six=args.literal_six)
            # split alpha = gamma + theta at Q = P^(13/11) to evaluate the differencing bound
            approx = dirichlet_fractional(alpha, max(1, int(float(P) ** (13 / 11))))
            rhs = weyl_bound_rhs(C.s, approx.gamma.norm, float(approx.theta.height()), float(P))
            rows.append({"P": str(P), "alpha_1": str(alpha.x1), "alpha_2": str(alpha.x2),
                         "N_gamma": approx.gamma.norm, "theta": float(approx.theta.height()),
                         "value_re": rep.value.real, "value_im": rep.value.imag, "terms": rep.terms,
                         "bound_rhs": rhs, "ratio": abs(rep.value) / rhs})
        return {"form": C, "rows": rows}, rows
    if args.action == "complete":
        g = FieldElem.of(F, *_pair(args.gamma))
        rep = complete_sum(C, g)
        N = rep.params["N"]
        bound = N ** (2 * C.s - C.s / 6)
        row = {"gamma": g.to_json(), "N": N, "value_re": rep.value.real, "value_im": rep.value.imag,
               "bound_rhs": bound, "ratio": abs(rep.value) / bound}
        return {"form": C, "report": rep, "row": row}, [row]
    raise InputError(f"unknown sums action {args.action}")


def cmd_lattices(args):
    from .field import make_field
    from .lattices import IntegerLattice, calibrate_A0, shrink_check, successive_minima
    if args.action == "shrink":
        L = [[_fraction(str(x)) for x in row] for row in _json_arg(args.L)]
        return shrink_check(L, _fraction(args.a), _fraction(args.Z)), None
    if args.action == "minima":
        basis = _json_arg(args.basis)
        lat = IntegerLattice.from_generators(basis, len(basis[0]))
        return {"lattice": lat, "minima": successive_minima(lat)}, None
    if args.action == "calibrate":
        return {"field": args.d, **calibrate_A0(make_field(args.d))}, None
    raise InputError(f"unknown lattices action {args.action}")


def cmd_circle(args):
    from . import circle
    from .sums import Box
    if args.action == "ledger":
        rows = circle.exponent_ledger(args.ledger)
        bad = [r["name"] for r in rows if not r["pass"]]
        if bad:
            args._result = {"entries": rows}
            raise VerificationFailed("ledger entries failed: " + ", ".join(bad))
        return {"entries": rows}, rows
    C = _form(args)
    if args.action == "series":
        res = circle.singular_series(C, float(args.R))
        return res, res["per_norm"]
    if args.action == "count":
        return {"form": C, "P": args.P, "N": circle.brute_count(C, args.P, Box.symmetric(C.s))}, None
    if args.action == "report":
        params = {"samples": args.samples, "seed": args.seed_value}
        res = circle.asymptotic_report(C, _number_list(args.P), params)
        return res, res["rows"]
    if args.action == "integral":
        res = circle.singular_integral(C, Box.symmetric(C.s), args.method, samples=args.samples,
                                       seed=args.seed_value, allow_uncentered=True)
        return res, None
    raise InputError(f"unknown circle action {args.action}")


def cmd_lines(args):
    from . import lines
    C = _form(args)
    if args.action == "find":
        space = lines.find_space_bounded(C, args.dim, args.bound)
        return {"form": C, "bound": args.bound, "dim": args.dim, "space": space,
                "certified_none": space is None}, None
    if args.action == "descend":
        obj = _json_arg(args.vline)
        basis = [[tuple(x) if isinstance(x, list) else x for x in v] for v in obj["basis"]]
        V = lines.LinearSpace(len(basis) - 1, basis, obj.get("field_tag", f"quadratic({C.F.d})"))
        return {"form": C, "result": lines.conjugate_descent(C, V)}, None
    if args.action == "almost-prime":
        line = lines.find_line_bounded(C, args.line_bound)
        if line is None:
            raise InputError(f"no rational line of height <= {args.line_bound}")
        sol = lines.almost_prime_solution(C, line, args.M, int(float(args.bound)))
        return {"form": C, "line": line, "solution": sol}, None
    raise InputError(f"unknown lines action {args.action}")


def cmd_verify_all(args):
    from .acceptance import run
    only = [int(x) for x in args.only.split(",")] if args.only else None
    outcomes = run(only, quick=args.quick)
    for o in outcomes:
        print(o.line, file=sys.stderr)
    res = {"quick": args.quick, "outcomes": [o.to_json() for o in outcomes]}
    if not all(o.passed for o in outcomes):
        args._result = res
        raise VerificationFailed(f"{sum(not o.passed for o in outcomes)} criteria failed")
    return res, [o.to_json() for o in outcomes]


# -- parser ---------------------------------------------------------------

def _common(nested: bool) -> argparse.ArgumentParser:
    """Shared flags; nested copies default to SUPPRESS so they never reset top-level values."""
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("output and budgets")

    def d(value):
        return argparse.SUPPRESS if nested else value

    g.add_argument("--json", action="store_true", default=d(False), help="print the JSON result to stdout")
    g.add_argument("--csv", action="store_true", default=d(False), help="also write result.csv")
    g.add_argument("--out", default=d(None), help="output directory (default: cubiq-runs/<command>-<config hash>)")
    g.add_argument("--seed", default=d(str(DEFAULT_SEED)), help="integer seed, or 'random'")
    for name in ("points", "classes", "quadrature", "pairs", "samples"):
        g.add_argument(f"--max-{name}", type=float, default=d(None), help=f"budget cap ({name})")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common(nested=True)
    ap = argparse.ArgumentParser(prog="cubiq", description="Circle-method toolkit for cubic forms over "
                                 "imaginary quadratic fields.", parents=[_common(nested=False)])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="module", required=True)

    def add(parent, name, help_, **kw):
        return parent.add_parser(name, help=help_, parents=[common], **kw)

    f = add(sub, "field", "field arithmetic, residues, Dirichlet approximation")
    fs = f.add_subparsers(dest="action", required=True)
    for name in ("info", "residues", "dirichlet", "trace"):
        p = add(fs, name, f"field {name}")
        p.add_argument("--d", type=int, default=1)
        if name == "residues":
            p.add_argument("--R", type=float, required=True)
        if name in ("dirichlet", "trace"):
            p.add_argument("--alpha", required=True, help="basis coordinates a1,a2 (rationals)")
        if name == "dirichlet":
            p.add_argument("--Q", required=True)
            p.add_argument("--fractional", action="store_true")
    f.set_defaults(handler=cmd_field)

    fo = add(sub, "forms", "cubic forms, Hessian ranks, geometric-condition scans")
    fos = fo.add_subparsers(dest="action", required=True)
    for name in ("info", "rank", "scan"):
        p = add(fos, name, f"forms {name}")
        p.add_argument("--form")
        if name == "rank":
            p.add_argument("--x", required=True, help="JSON list of [a1, a2] coordinates")
        if name == "scan":
            p.add_argument("--H", type=int, default=3)
    fo.set_defaults(handler=cmd_forms)

    su = add(sub, "sums", "Weyl and complete exponential sums")
    sus = su.add_subparsers(dest="action", required=True)
    p = add(sus, "weyl", "S(alpha; P) over the symmetric box")
    p.add_argument("--form")
    p.add_argument("--alpha", required=True)
    p.add_argument("--P", required=True, help="comma-separated list")
    p.add_argument("--literal-six", action="store_true")
    p = add(sus, "complete", "complete sum S_gamma")
    p.add_argument("--form")
    p.add_argument("--gamma", required=True)
    su.set_defaults(handler=cmd_sums)

    la = add(sub, "lattices", "shrinking lemma, successive minima, A0 calibration")
    las = la.add_subparsers(dest="action", required=True)
    p = add(las, "shrink", "N(1) against Z^-m N(Z)")
    p.add_argument("--L", required=True, help="JSON matrix of rationals (strings)")
    p.add_argument("--a", required=True)
    p.add_argument("--Z", required=True)
    p = add(las, "minima", "successive minima in the sup norm")
    p.add_argument("--basis", required=True, help="JSON list of integer generators")
    p = add(las, "calibrate", "calibrate the divisibility constant A0")
    p.add_argument("--d", type=int, default=1)
    la.set_defaults(handler=cmd_lattices)

    ci = add(sub, "circle", "singular series and integral, zero counts, exponent ledger")
    cis = ci.add_subparsers(dest="action", required=True)
    p = add(cis, "series", "truncated singular series")
    p.add_argument("--form")
    p.add_argument("--R", required=True)
    p = add(cis, "count", "N(P) by exact enumeration")
    p.add_argument("--form")
    p.add_argument("--P", type=int, required=True)
    p = add(cis, "report", "asymptotic comparison table")
    p.add_argument("--form")
    p.add_argument("--P", required=True, help="comma-separated list")
    p.add_argument("--samples", type=int, default=2 * 10 ** 6)
    p = add(cis, "integral", "singular integral over the symmetric box")
    p.add_argument("--form")
    p.add_argument("--method", choices=("density", "oscillatory"), default="density")
    p.add_argument("--samples", type=int, default=2 * 10 ** 6)
    p = add(cis, "ledger", "verify the exponent ledger")
    p.add_argument("--ledger", help="alternative ledger file")
    ci.set_defaults(handler=cmd_circle)

    li = add(sub, "lines", "linear spaces on the hypersurface")
    lis = li.add_subparsers(dest="action", required=True)
    p = add(lis, "find", "bounded search for a rational linear space")
    p.add_argument("--form")
    p.add_argument("--bound", type=int, default=1)
    p.add_argument("--dim", type=int, default=1)
    p = add(lis, "descend", "rational space from a conjugate pair")
    p.add_argument("--form")
    p.add_argument("--vline", required=True, help="JSON {basis: [[coord or [a, b]], ...]}")
    p = add(lis, "almost-prime", "zero with prime entries up to fixed factors")
    p.add_argument("--form")
    p.add_argument("--bound", default="1e7")
    p.add_argument("--line-bound", type=int, default=1)
    p.add_argument("--M", type=int)
    li.set_defaults(handler=cmd_lines)

    va = add(sub, "verify-all", "run the acceptance suite")
    va.add_argument("--quick", action="store_true", help="only criteria with a budget of at most two minutes")
    va.add_argument("--only", help="comma-separated criterion numbers")
    va.set_defaults(handler=cmd_verify_all, action=None)
    return ap


def _input_hashes(args) -> dict:
    out = {}
    for key in ("form", "L", "basis", "vline", "ledger"):
        val = getattr(args, key, None)
        if val and Path(val).is_file():
            out[key] = {"path": val, "sha256": hashlib.sha256(Path(val).read_bytes()).hexdigest()}
    if getattr(args, "form", "unset") is None:
        out["form"] = {"path": None, "sha256": hashlib.sha256(DEFAULT_FORM.encode()).hexdigest()}
    return out


def _config(args) -> dict:
    skip = {"handler", "json", "csv", "out", "_result"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _apply_budgets(args) -> None:
    for name, field_ in (("points", "points"), ("classes", "classes"), ("quadrature", "quadrature"),
                         ("pairs", "pairs"), ("samples", "monte_carlo")):
        val = getattr(args, f"max_{name}", None)
        if val is not None:
            setattr(BUDGETS, field_, val)


def _write_outputs(args, result, rows, status: str) -> Path:
    config = _config(args)
    key = hashlib.sha256(json.dumps(config, default=str, sort_keys=True).encode()).hexdigest()[:12]
    name = "-".join(x for x in (args.module, getattr(args, "action", None)) if x)
    out = Path(args.out) if args.out else Path("cubiq-runs") / f"{name}-{key}"
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"version": __version__, "config": config, "inputs": _input_hashes(args), "status": status,
                "budgets": {k: getattr(BUDGETS, k) for k in ("points", "classes", "quadrature", "pairs",
                                                             "monte_carlo")}}
    (out / "manifest.json").write_text(dumps(manifest))
    if result is not None:
        (out / "result.json").write_text(dumps(result))
    if args.csv and rows:
        (out / "result.csv").write_text(_csv_text(rows))
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed == "random":
        args.seed_value = int.from_bytes(os.urandom(4), "little")
    else:
        try:
            args.seed_value = int(args.seed)
        except ValueError:
            print("error: --seed must be an integer or 'random'", file=sys.stderr)
            return 1
    saved = dict(vars(BUDGETS))
    _apply_budgets(args)
    try:
        return _run(args)
    finally:
        # budget flags apply to one invocation only
        vars(BUDGETS).update(saved)


def _run(args) -> int:
    result = rows = None
    try:
        result, rows = args.handler(args)
        code, status = 0, "ok"
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        code, status = 2, f"budget exceeded: {exc}"
    except (InputError, HypothesisViolated) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        code, status = 1, f"input error: {exc}"
    except VerificationFailed as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        result = getattr(args, "_result", None)
        code, status = 3, f"verification failed: {exc}"
    out = _write_outputs(args, result, rows, status)
    if result is not None:
        if args.json:
            sys.stdout.write(dumps(result))
        else:
            print(_summary(result))
    print(f"outputs in {out}", file=sys.stderr)
    return code


def _summary(result) -> str:
    if isinstance(result, dict) and "entries" in result:
        width = max(len(r["name"]) for r in result["entries"])
        out = []
        for r in result["entries"]:
            tag = "PASS" if r["pass"] else "FAIL"
            kind = "sentinel" if r["sentinel"] else r["direction"]
            out.append(f"{tag}  {r['name']:<{width}}  {kind:<8}  {r['detail']}")
        return "\n".join(out)
    text = dumps(result)
    lines = text.splitlines()
    return text.rstrip() if len(lines) <= 40 else "\n".join(lines[:40] + [f"... ({len(lines) - 40} more lines; use --json)"])


if __name__ == "__main__":
    sys.exit(main())
