"""Numerical laboratory for KPZ-class integrable probability."""
__version__ = "0.1.0"
