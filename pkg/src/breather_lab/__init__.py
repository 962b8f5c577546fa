"""Numerical laboratory for small breathers of nonlinear Klein-Gordon equations."""
__version__ = "0.1.0"
