"""Finite-difference eigenvalue oracle."""
