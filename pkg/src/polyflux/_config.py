"""Numerical constants shared by every module."""

# Absolute tolerance for every floating-point equality test.
TOL = 1e-12
