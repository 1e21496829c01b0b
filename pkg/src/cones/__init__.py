"""Cone fixtures and sharpness checks."""
