import sympy as sp
import pytest
from hypothesis import settings

from cubiq.field import make_field

settings.register_profile("ci", max_examples=60, deadline=None)
settings.load_profile("ci")


def omega_sym(F):
    r = sp.sqrt(-F.d)
    return r if F.basis_kind == "sqrt_d" else (1 + r) / 2


def to_sym(F, coords):
    """Exact sympy number for basis coordinates (a1, a2)."""
    a1, a2 = (sp.Rational(c.numerator, c.denominator) if hasattr(c, "numerator") else sp.Integer(c)
              for c in coords)
    return a1 + a2 * omega_sym(F)


@pytest.fixture(params=[1, 3, 2, 7], ids=lambda d: f"d{d}")
def field(request):
    return make_field(request.param)


@pytest.fixture
def gaussian():
    return make_field(1)


@pytest.fixture
def eisenstein():
    return make_field(3)
