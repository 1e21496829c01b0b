"""
plate_tone - principal frequency of clamped plates on weighted model spaces.
"""

__version__ = "0.3.0"
