"""Certify coefficient sequences against generalized-monotonicity classes and
probe uniform convergence of the associated sine and complex trigonometric series."""

__version__ = "0.1.0"
