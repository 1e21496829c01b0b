"""Discrete rearrangements and the comparison constructions."""
