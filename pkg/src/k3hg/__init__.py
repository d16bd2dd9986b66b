"""Exact finite-field hypergeometric sums and the zeta functions of five
invertible K3 quartic pencils."""

__version__ = "0.1.0"
