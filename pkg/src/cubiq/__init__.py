"""Circle-method and linear-space toolkit for cubic forms over imaginary quadratic fields."""

__version__ = "0.1.0"
