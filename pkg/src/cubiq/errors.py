"""Exception types shared across the package."""


class CubiqError(Exception):
    pass


class InputError(CubiqError, ValueError):
    """Malformed or out-of-contract input."""


class BudgetExceeded(CubiqError, RuntimeError):
    """An enumeration would exceed its configured budget."""

    def __init__(self, what: str, needed: float, cap: float):
        super().__init__(f"{what}: needs {needed:.3g} units, budget is {cap:.3g}")
        self.what = what
        self.needed = needed
        self.cap = cap


class HypothesisViolated(CubiqError, ValueError):
    """The hypotheses of a bound or lemma check do not hold for the sample."""
