"""Tests package for plate_tone."""
