"""Enumeration budgets. Each cap can be overridden by an environment variable."""

from __future__ import annotations

import json
import os
from importlib import resources
from dataclasses import dataclass

from .errors import BudgetExceeded


def _env(name: str, default: float) -> float:
    raw = os.environ.get(name)
    return float(raw) if raw else default


@dataclass
class Budgets:
    points: float = 1e8          # lattice points visited by one enumeration
    classes: float = 2e6         # candidate residues examined by enumerate_residues
    quadrature: float = 6e7      # grid nodes times summands in a quadrature
    pairs: float = 1e8           # candidate pairs in the line search
    monte_carlo: float = 5e7     # Monte Carlo samples

    @classmethod
    def from_env(cls) -> Budgets:
        return cls(
            points=_env("CUBIQ_MAX_POINTS", cls.points),
            classes=_env("CUBIQ_MAX_CLASSES", cls.classes),
            quadrature=_env("CUBIQ_MAX_QUADRATURE", cls.quadrature),
            pairs=_env("CUBIQ_MAX_PAIRS", cls.pairs),
            monte_carlo=_env("CUBIQ_MAX_SAMPLES", cls.monte_carlo),
        )


BUDGETS = Budgets.from_env()


def check_budget(what: str, needed: float, cap: float) -> None:
    if needed > cap:
        raise BudgetExceeded(what, needed, cap)


def load_constants() -> dict:
    """Frozen calibration constants shipped with the package."""
    return json.loads(resources.files("cubiq").joinpath("data/constants.json").read_text())
