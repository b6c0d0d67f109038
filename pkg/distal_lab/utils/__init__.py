"""Interval arithmetic, continued fractions and seeding helpers for distal-lab."""
