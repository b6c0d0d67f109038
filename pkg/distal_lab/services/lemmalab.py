"""Monte Carlo and exact checks of the three probabilistic lemmas behind the perturbations."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from ..models.config import LemmaParams
from ..utils.seeding import task_rng

logger = logging.getLogger(__name__)

CHUNK_CELLS = 2_000_000
MASS_TOL = Fraction(1, 10**12)


class LemmaPreconditionError(ValueError):
    """Raised when lemma inputs fall outside the ranges the lemma is stated for."""


@dataclass
class LemmaCheck:
    lemma: str
    params: Dict[str, object]
    bound: float
    empirical: float
    margin: float
    passed: bool
    vacuous: bool = False
    extra: Dict[str, float] = field(default_factory=dict)

    @property
    def params_text(self) -> str:
        return ";".join(f"{k}={v}" for k, v in self.params.items())


def _margin(bound: float, trials: int, sigmas: float = 4.0) -> float:
    if not 0.0 < bound < 1.0:
        return 0.0
    return sigmas * math.sqrt(bound * (1.0 - bound) / trials)


def _chunks(trials: int, width: int) -> Iterator[int]:
    size = max(1, CHUNK_CELLS // max(width, 1))
    done = 0
    while done < trials:
        step = min(size, trials - done)
        yield step
        done += step


def _matched_counts(
    gamma: float, n: int, trials: int, rng: np.random.Generator
) -> Tuple[int, np.ndarray]:
    """M = floor(gamma N) and, per trial, |{i < M : pi(i) < M}| for a uniform pi."""
    m = int(math.floor(gamma * n))
    counts = []
    for size in _chunks(trials, n):
        perms = rng.permuted(np.tile(np.arange(n), (size, 1)), axis=1)
        counts.append(np.count_nonzero(perms[:, :m] < m, axis=1))
    return m, np.concatenate(counts)


def verify_randomp(gamma: float, n: int, trials: int, rng: np.random.Generator) -> LemmaCheck:
    """P(|{i <= M : pi(i) <= M}| > gamma^2 N / 2) against 1 - 10(1 - gamma)/(N gamma^2)."""
    if not 0.0 < gamma < 1.0:
        raise LemmaPreconditionError(f"gamma must lie in (0, 1), got {gamma}")
    if n < 2:
        raise LemmaPreconditionError(f"N must be >= 2, got {n}")
    bound = 1.0 - 10.0 * (1.0 - gamma) / (n * gamma * gamma)
    _, counts = _matched_counts(gamma, n, trials, rng)
    empirical = float(np.mean(counts > 0.5 * gamma * gamma * n))
    margin = _margin(bound, trials)
    vacuous = bound <= 0.0
    if vacuous:
        logger.warning("randomp gamma=%g N=%d: bound %.4g is vacuous", gamma, n, bound)
    return LemmaCheck(
        "randomp",
        {"gamma": gamma, "N": n, "trials": trials},
        bound,
        empirical,
        margin,
        passed=vacuous or empirical >= bound - margin,
        vacuous=vacuous,
    )


def verify_randomp_variance(
    gamma: float, n: int, trials: int, rng: np.random.Generator
) -> LemmaCheck:
    """E[(Y/M - rho)^2] against the hypergeometric value and the bound rho(1 - rho)/M."""
    if not 0.0 < gamma < 1.0 or n < 2:
        raise LemmaPreconditionError(f"need 0 < gamma < 1 and N >= 2, got gamma={gamma} N={n}")
    m, counts = _matched_counts(gamma, n, trials, rng)
    if m == 0:
        raise LemmaPreconditionError(f"M = floor(gamma N) is 0 for gamma={gamma} N={n}")
    rho = m / n
    sq = (counts / m - rho) ** 2
    empirical = float(np.mean(sq))
    stderr = float(np.std(sq, ddof=1) / math.sqrt(trials))
    exact = float(stats.hypergeom(n, m, m).var()) / m**2
    bound = rho * (1.0 - rho) / m
    agrees = abs(empirical - exact) <= 3.0 * stderr + 1e-15
    return LemmaCheck(
        "randomp-variance",
        {"gamma": gamma, "N": n, "trials": trials},
        bound,
        empirical,
        3.0 * stderr,
        passed=agrees and exact <= bound * (1.0 + 1e-12),
        extra={"exact": exact},
    )


def _exact(x) -> Fraction:
    if isinstance(x, (Fraction, int)):
        return Fraction(x)
    return Fraction(repr(float(x)))


def verify_del(masses: Sequence, overlaps: Sequence, delta) -> LemmaCheck:
    """sum over i outside I0 of mu(P_i) > 1 - sqrt(delta), with I0 the cells E fills beyond sqrt(delta).

    All arithmetic is on fractions; the square root is compared by squaring.
    """
    mass = [_exact(x) for x in masses]
    over = [_exact(x) for x in overlaps]
    d = _exact(delta)
    if len(mass) != len(over):
        raise LemmaPreconditionError("masses and overlaps must have the same length")
    if abs(sum(mass) - 1) > MASS_TOL:
        raise LemmaPreconditionError(f"masses sum to {float(sum(mass))}, not 1")
    if any(o < 0 or o > w for o, w in zip(over, mass)):
        raise LemmaPreconditionError("overlaps must lie between 0 and the cell mass")
    if not 0 < d < 1:
        raise LemmaPreconditionError(f"delta must lie in (0, 1), got {float(d)}")
    if sum(over) >= d:
        raise LemmaPreconditionError(f"mu(E) = {float(sum(over))} is not below delta = {float(d)}")
    # overlap / mass > sqrt(delta)  <=>  overlap^2 > delta mass^2
    excluded = [i for i, (o, w) in enumerate(zip(over, mass)) if w > 0 and o * o > d * w * w]
    skip = set(excluded)
    kept = sum((w for i, w in enumerate(mass) if i not in skip), Fraction(0))
    gap = 1 - kept
    holds = gap < 0 or d > gap * gap
    return LemmaCheck(
        "del",
        {"cells": len(mass), "delta": float(d)},
        1.0 - math.sqrt(float(d)),
        float(kept),
        0.0,
        passed=holds,
        extra={"excluded": float(len(excluded))},
    )


def random_del_instances(
    count: int, cells: int, rng: np.random.Generator
) -> Iterator[Tuple[List[Fraction], List[Fraction], Fraction]]:
    """Random rational partitions with an overlap set of measure below delta."""
    for _ in range(count):
        weights = rng.integers(1, 101, size=cells)
        total = int(weights.sum())
        overlap = [int(rng.integers(0, w // 3 + 1)) for w in weights]
        spare = total - sum(overlap)
        delta = Fraction(sum(overlap) + int(rng.integers(1, max(2, spare))), total)
        if delta >= 1:
            delta = Fraction(total - 1, total)
        yield (
            [Fraction(int(w), total) for w in weights],
            [Fraction(o, total) for o in overlap],
            delta,
        )


def verify_del_random(count: int, cells: int, rng: np.random.Generator) -> LemmaCheck:
    violations = 0
    checked = 0
    for masses, overlaps, delta in random_del_instances(count, cells, rng):
        if sum(overlaps) >= delta:
            continue
        checked += 1
        violations += int(not verify_del(masses, overlaps, delta).passed)
    return LemmaCheck(
        "del",
        {"instances": count, "cells": cells},
        1.0,
        1.0 - violations / checked if checked else 1.0,
        0.0,
        passed=violations == 0,
        extra={"violations": float(violations)},
    )


def verify_simple(
    p: float,
    L: int,
    n: int,
    trials: int,
    rng: np.random.Generator,
    weights: Optional[Sequence[float]] = None,
    dependence: str = "copies",
    p_actual: Optional[float] = None,
) -> LemmaCheck:
    """P(sum_j w_j X_j >= p/2) against 1 - 4(L+1) w / p^2.

    The X_j come in blocks of L + 1 consecutive indices; blocks are independent. Inside
    a block ``copies`` uses one Bernoulli draw for all members and ``anti`` uses one
    uniform shifted by r/(L+1) for member r.
    """
    if not 0.0 < p <= 1.0:
        raise LemmaPreconditionError(f"p must lie in (0, 1], got {p}")
    if L < 0 or n < 1:
        raise LemmaPreconditionError(f"need L >= 0 and n >= 1, got L={L} n={n}")
    actual = p if p_actual is None else p_actual
    if not p <= actual <= 1.0:
        raise LemmaPreconditionError(f"success probability {actual} must lie in [p, 1]")
    w = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, dtype=float)
    if len(w) != n or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise LemmaPreconditionError("weights must be n nonnegative numbers summing to 1")
    if dependence not in ("copies", "anti"):
        raise LemmaPreconditionError(f"unknown dependence {dependence!r}")
    size = L + 1
    block = np.arange(n) // size
    offset = (np.arange(n) % size) / size
    blocks = int(block[-1]) + 1
    bound = 1.0 - 4.0 * size * float(w.max()) / (p * p)
    hits = 0
    for chunk in _chunks(trials, n):
        u = rng.random((chunk, blocks))[:, block]
        if dependence == "anti":
            u = np.mod(u + offset[None, :], 1.0)
        x = (u < actual).astype(float) @ w
        hits += int(np.count_nonzero(x >= 0.5 * p))
    empirical = hits / trials
    margin = _margin(bound, trials)
    vacuous = bound <= 0.0
    if vacuous:
        logger.warning("simple p=%g L=%d n=%d: bound %.4g is vacuous", p, L, n, bound)
    return LemmaCheck(
        "simple",
        {"p": p, "L": L, "n": n, "dependence": dependence, "p_actual": actual, "trials": trials},
        bound,
        empirical,
        margin,
        passed=vacuous or empirical >= bound - margin,
        vacuous=vacuous,
    )


def lemma_tasks(params: LemmaParams, seed: int) -> List[Callable[[], LemmaCheck]]:
    """Independent checks of the configured grids, each with its own random stream."""
    tasks: List[Callable[[], LemmaCheck]] = []
    trials = params.trials

    def add(fn: Callable[[np.random.Generator], LemmaCheck]) -> None:
        index = len(tasks)
        tasks.append(lambda: fn(task_rng(seed, index)))

    for gamma in params.randomp_gamma:
        for n in params.randomp_N:
            add(lambda rng, g=gamma, n=n: verify_randomp(g, n, trials, rng))
            if params.randomp_variance and math.floor(gamma * n) >= 1:
                add(lambda rng, g=gamma, n=n: verify_randomp_variance(g, n, trials, rng))
    if params.del_instances:
        add(lambda rng: verify_del_random(params.del_instances, params.del_cells, rng))
    for p in params.simple_p:
        for L in params.simple_L:
            for n in params.simple_n:
                for dep in params.simple_dependence:
                    add(
                        lambda rng, p=p, L=L, n=n, dep=dep: verify_simple(
                            p, L, n, trials, rng, dependence=dep
                        )
                    )
                for actual in params.simple_p_actual:
                    if actual > p:
                        add(
                            lambda rng, p=p, L=L, n=n, q=actual: verify_simple(
                                p, L, n, trials, rng, p_actual=q
                            )
                        )
    return tasks


def run_lemma_grid(params: LemmaParams, seed: int) -> List[LemmaCheck]:
    checks = [task() for task in lemma_tasks(params, seed)]
    failed = [c for c in checks if not c.passed]
    logger.info("lemma grid: %d checks, %d failed", len(checks), len(failed))
    return checks
