"""Elliptic hypergeometric integrals, their recurrences, and numerical identity checks."""

__version__ = "0.1.0"
