"""Continued fractions of rotation angles and their convergent denominators."""

from __future__ import annotations

from typing import Iterator, List, Tuple

import numpy as np

COEFF_EPS = 1e-12
MAX_TERMS = 40

# Rotation numbers whose expansion closes with a denominator at most this are called rational.
RATIONAL_MAX_DENOMINATOR = 10_000
RATIONAL_TOL = 1e-12


def continued_fraction_coeffs(
    x: float, eps: float = COEFF_EPS, max_terms: int = MAX_TERMS
) -> Iterator[int]:
    """Euclidean algorithm on a real number, yielding [a0; a1, a2, ...]."""
    for _ in range(max_terms):
        whole, rem = divmod(x, 1.0)
        yield int(whole)
        if rem < eps:
            return
        x = 1.0 / rem


def convergents(x: float, max_terms: int = MAX_TERMS) -> Iterator[Tuple[int, int]]:
    """Successive continuants (p_k, q_k) of x."""
    p_prev, p = 0, 1
    q_prev, q = 1, 0
    for a in continued_fraction_coeffs(x, max_terms=max_terms):
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        yield p, q


def denominators(alpha: float, limit: int) -> List[int]:
    """Distinct convergent denominators q_k of alpha up to ``limit`` (q_0 = 1 first)."""
    out: List[int] = []
    for _, q in convergents(alpha):
        if q > limit:
            break
        if not out or q != out[-1]:
            out.append(q)
    return out


def circle_norm(x: float | np.ndarray) -> float | np.ndarray:
    """Distance to the nearest integer, ||x||."""
    frac = np.mod(x, 1.0)
    return np.minimum(frac, 1.0 - frac)


def is_rational(alpha: float) -> bool:
    for p, q in convergents(alpha):
        if q > RATIONAL_MAX_DENOMINATOR:
            return False
        if abs(alpha - p / q) < RATIONAL_TOL:
            return True
    return False
