"""Recompute data/constants.json: python3 -m cubiq._calibrate [--out PATH]."""

from __future__ import annotations

import argparse
import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .field import dirichlet_batch, enumerate_residues, make_field
from .forms import CubicForm
from .lattices import calibrate_A0, shrink_check
from .sums import complete_sum

SEED = 7
MARGIN = {"dirichlet": 1.25, "shrink": 1.5, "complete_sum": 1.25}

# held out from the acceptance forms
CALIBRATION_FORMS = [[(1, 0), (1, 0)], [(2, 0), (0, 1)], [(1, 1), (1, -1)], [(5, 0), (1, 3)]]


def _round_up(x: float, digits: int = 2) -> float:
    k = 10 ** digits
    return math.ceil(x * k) / k


def fractional_constant(F, n1, n2, D, Qs=range(1, 9)) -> float:
    worst = 0.0
    for Q in Qs:
        f = dirichlet_batch(F, n1, n2, D, Q, fractional=True)
        g, den = f["gamma_num"], f["gamma_den"]
        th = np.maximum(np.abs(n1 * den - g[:, 0] * D), np.abs(n2 * den - g[:, 1] * D)) / (D * den)
        worst = max(worst, float((th * np.sqrt(f["norm"]) * Q).max()))
    return worst


def random_maps(seed: int, count: int):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        m = int(rng.integers(1, 5))
        yield [[Fraction(int(rng.integers(-30, 31)), int(rng.integers(1, 16))) for _ in range(m)] for _ in range(m)]


SHRINK_A = (Fraction(1, 2), Fraction(1), Fraction(2), Fraction(10))
SHRINK_Z = (Fraction(1, 2), Fraction(1, 4), Fraction(1, 8))


def shrink_worst(maps) -> dict[int, Fraction]:
    worst: dict[int, Fraction] = {}
    for L in maps:
        for a in SHRINK_A:
            for Z in SHRINK_Z:
                r = shrink_check(L, a, Z)["ratio"]
                worst[len(L)] = max(worst.get(len(L), Fraction(0)), r)
    return worst


def complete_sum_worst(forms, max_norm: int, F) -> float:
    classes = enumerate_residues(max_norm, F)
    worst = 0.0
    for co in forms:
        C = CubicForm.diagonal(F, co)
        s = C.s
        for c in classes:
            worst = max(worst, abs(complete_sum(C, c).value) * c.norm ** -(2 * s - s / 6))
    return worst


def calibrate() -> dict:
    rng = np.random.default_rng(SEED)
    out = {"version": __version__, "seed": SEED, "margins": MARGIN, "fields": {}}
    for d in (1, 3):
        F = make_field(d)
        D = 10007
        n1, n2 = rng.integers(0, D, 20000), rng.integers(0, D, 20000)
        c = fractional_constant(F, n1, n2, D)
        a0 = calibrate_A0(F)
        out["fields"][str(d)] = {
            "dirichlet_fractional_C": _round_up(c * MARGIN["dirichlet"]),
            "dirichlet_fractional_observed": c,
            "A0": a0["A0"], "A_sup": a0["A_sup"], "A_closed_form": a0["closed_form_min"],
        }
    worst = shrink_worst(random_maps(SEED, 1000))
    out["shrink_C"] = {str(m): _round_up(float(v) * MARGIN["shrink"]) for m, v in sorted(worst.items())}
    out["shrink_observed"] = {str(m): str(v) for m, v in sorted(worst.items())}
    F = make_field(1)
    cs = complete_sum_worst(CALIBRATION_FORMS, 20, F)
    out["complete_sum_C"] = _round_up(cs * MARGIN["complete_sum"])
    out["complete_sum_observed"] = cs
    return out


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).parent / "data" / "constants.json"))
    args = ap.parse_args(argv)
    data = calibrate()
    Path(args.out).write_text(json.dumps(data, indent=1, sort_keys=True) + "\n")
    print(json.dumps(data, indent=1, sort_keys=True))


if __name__ == "__main__":
    main()
