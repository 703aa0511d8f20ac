"""Exact bar/cobar computations for dg algebras and ns operads."""

__version__ = "0.1.0"
