"""Bessel functions, zeros and the cross-product root."""
