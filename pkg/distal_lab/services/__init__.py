"""Numerical services: groups, systems, cocycles, towers, perturbation, diagnostics, lemmas."""
