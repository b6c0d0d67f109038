"""Birkhoff-average ergodicity scores and structural obstruction checks."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..utils.contfrac import circle_norm
from .cocycles import GridCocycle, pair_cocycle
from .groups import (
    Character,
    CompactGroup,
    HomogeneousSpace,
    Product,
    Torus,
    is_trivial_character,
    power_group,
)
from .systems import (
    GOLDEN,
    HomogeneousExtension,
    RelativeSquareComponent,
    Rotation,
    SkewProductSystem,
    System,
)

logger = logging.getLogger(__name__)

ORBIT_CHUNK = 4096


class NotApplicable(ValueError):
    """Raised when a diagnostic is asked about a setting it does not cover."""


@dataclass
class ErgodicityReport:
    """|Birkhoff average - integral| per (test function, start)."""

    function_ids: List[str]
    scores: np.ndarray
    n: int
    starts: int
    threshold: float = 0.1

    @property
    def max_score(self) -> float:
        return float(np.max(self.scores, initial=0.0))

    @property
    def mean_score(self) -> float:
        return float(np.mean(self.scores)) if self.scores.size else 0.0

    def function_max(self) -> Dict[str, float]:
        return {fid: float(np.max(row)) for fid, row in zip(self.function_ids, self.scores)}

    @property
    def detected_invariant(self) -> bool:
        return self.max_score > self.threshold

    def rows(self) -> List[Tuple[str, int, int, float]]:
        """(function-id, start-id, n, score) rows."""
        return [
            (fid, s, self.n, float(self.scores[f, s]))
            for f, fid in enumerate(self.function_ids)
            for s in range(self.starts)
        ]


def signed_characters(group: CompactGroup, limit: int) -> List[Character]:
    """Characters with frequencies of both signs, factor by factor."""
    if isinstance(group, Product):
        chars: List[Character] = [()]
        for factor in group.factors:
            chars = [c + fc for c in chars for fc in signed_characters(factor, limit)]
        return chars
    if isinstance(group, Torus):
        return [tuple(f) for f in itertools.product(range(1 - limit, limit), repeat=group.dim)]
    out: List[Character] = []
    for c in group.characters(limit):
        for cand in (c, group.conjugate_character(c)):
            if cand not in out:
                out.append(cand)
    return out


class TestFunctionFamily:
    """Functions u_k(z) * chi(g) with u_k(z) = exp(2 pi i k z), |k| <= base_modes.

    ``z`` is the first coordinate and ``g`` the fiber group coordinates starting at
    ``fiber_offset``. The product of the trivial mode and the trivial character is left
    out, so every member integrates to 0.
    """

    __test__ = False

    def __init__(
        self,
        base_modes: int = 4,
        group: Optional[CompactGroup] = None,
        fiber_limit: int = 8,
        fiber_offset: int = 1,
        include_base: bool = True,
    ):
        self.modes = list(range(-base_modes, base_modes + 1)) if include_base else [0]
        self.group = group
        self.fiber_offset = fiber_offset
        if group is None:
            self.chars: List[Character] = [()]
        else:
            self.chars = signed_characters(group, fiber_limit)
        self.members: List[Tuple[int, int]] = [
            (k, c)
            for k in range(len(self.modes))
            for c in range(len(self.chars))
            if not (self.modes[k] == 0 and is_trivial_character(self.chars[c]))
        ]

    @property
    def ids(self) -> List[str]:
        out = []
        for k, c in self.members:
            char = self.chars[c]
            label = f"u{self.modes[k]}"
            if char:
                label += "*chi" + ",".join(str(v) for v in char)
            out.append(label)
        return out

    def __len__(self) -> int:
        return len(self.members)

    def _parts(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        z = points[..., 0]
        base = np.exp(2j * np.pi * np.multiply.outer(np.asarray(self.modes, dtype=float), z))
        if self.group is None:
            fiber = np.ones((1,) + z.shape, dtype=complex)
        else:
            g = points[..., self.fiber_offset : self.fiber_offset + self.group.dim]
            fiber = np.stack([self.group.character_values(c, g) for c in self.chars])
        return base, fiber

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Values of every member, shape (len(family), ...)."""
        base, fiber = self._parts(points)
        return np.stack([base[k] * fiber[c] for k, c in self.members])

    def orbit_sums(self, points: np.ndarray) -> np.ndarray:
        """Sum over the leading (time) axis of every member, shape (len(family), ...)."""
        base, fiber = self._parts(points)
        table = np.einsum("km...,cm...->kc...", base, fiber)
        ks = [k for k, _ in self.members]
        cs = [c for _, c in self.members]
        return table[ks, cs]


def family_for(system: System, base_modes: int = 4, fiber_limit: int = 8) -> TestFunctionFamily:
    if isinstance(system, SkewProductSystem):
        return TestFunctionFamily(base_modes, system.group, fiber_limit, system.base.point_dim)
    return TestFunctionFamily(base_modes, None, fiber_limit)


def birkhoff_score(
    system: System,
    family: TestFunctionFamily,
    n: int,
    starts: int,
    rng: np.random.Generator,
    points: Optional[np.ndarray] = None,
    threshold: float = 0.1,
) -> ErgodicityReport:
    """|n^-1 sum_{j<n} f(T^j x)| for each family member and each sampled start x."""
    if n < 1:
        raise ValueError(f"orbit length must be >= 1, got {n}")
    if points is None:
        points = system.sample_points(rng, starts)
    current = np.asarray(points, dtype=float)
    sums = np.zeros((len(family), len(current)), dtype=complex)
    done = 0
    while done < n:
        m = min(ORBIT_CHUNK, n - done)
        orbit = system.orbit_points(current, m)
        sums += family.orbit_sums(orbit)
        current = system.forward_points(orbit[-1])
        done += m
    scores = np.abs(sums) / n
    report = ErgodicityReport(family.ids, scores, n, len(points), threshold)
    logger.info("birkhoff score on %s at n=%d: max=%.4g", system.descriptor, n, report.max_score)
    return report


def score_vs_n(
    system: System,
    family: TestFunctionFamily,
    ns: Sequence[int],
    starts: int,
    rng: np.random.Generator,
    threshold: float = 0.1,
) -> List[ErgodicityReport]:
    """Reports for each orbit length, all from the same starting points."""
    points = system.sample_points(rng, starts)
    return [birkhoff_score(system, family, n, starts, rng, points, threshold) for n in sorted(ns)]


def rotation_character_bound(alpha: float, n: int) -> float:
    """Envelope 1 / (n sin(pi ||alpha||)) of the base character average."""
    return 1.0 / (n * math.sin(math.pi * float(circle_norm(alpha))))


def rotation_character_average(alpha: float, n: int, k: int = 1) -> float:
    """Exact |n^-1 sum_{j<n} exp(2 pi i k j alpha)| = |sin(pi n k alpha)| / (n |sin(pi k alpha)|)."""
    return abs(math.sin(math.pi * n * k * alpha)) / (n * abs(math.sin(math.pi * k * alpha)))


def relative_ergodicity_probe(
    component: RelativeSquareComponent,
    phi,
    group: CompactGroup,
    n: int,
    starts: int,
    rng: np.random.Generator,
    base_modes: int = 0,
    fiber_limit: int = 4,
    threshold: float = 0.1,
) -> ErgodicityReport:
    """Birkhoff scores of u(z) chi1(g1) chi2(g2) under T_psi on the component measure."""
    psi = pair_cocycle(phi, component)
    pair_group = power_group(group, 2)
    system = SkewProductSystem(component, pair_group, psi)
    family = TestFunctionFamily(
        base_modes,
        pair_group,
        fiber_limit,
        fiber_offset=component.point_dim,
        include_base=base_modes > 0,
    )
    return birkhoff_score(system, family, n, starts, rng, threshold=threshold)


def probe_k0_grid(
    extension: HomogeneousExtension,
    phi,
    group: CompactGroup,
    k0s: Sequence[np.ndarray],
    n: int,
    starts: int,
    rng: np.random.Generator,
    **kwargs,
) -> Dict[int, ErgodicityReport]:
    return {
        i: relative_ergodicity_probe(
            RelativeSquareComponent(extension, k0), phi, group, n, starts, rng, **kwargs
        )
        for i, k0 in enumerate(k0s)
    }


@dataclass
class ObstructionReport:
    samples: int
    obstructed: int

    @property
    def all_obstructed(self) -> bool:
        return self.obstructed == self.samples


def _random_cocycle(
    extension: HomogeneousExtension, group: CompactGroup, cells: int, rng: np.random.Generator
) -> GridCocycle:
    edges = [np.concatenate([[0.0], np.sort(rng.random(cells - 1)), [1.0]])]
    for lo, hi in extension.space.spans:
        edges.append(np.arange(lo, hi + 1.0))
    shape = tuple(len(e) - 1 for e in edges)
    values = group.haar_sample(rng, int(np.prod(shape))).reshape(shape + (group.dim,))
    return GridCocycle(group, edges, values)


def finite_group_obstruction_check(
    space: HomogeneousSpace,
    group: CompactGroup,
    samples: int,
    rng: np.random.Generator,
    base: Optional[Rotation] = None,
    cells: int = 8,
    points: int = 64,
    steps: int = 16,
) -> ObstructionReport:
    """On the diagonal component k0 = e of a finite group extension, g1^-1 g2 is T_psi-invariant.

    Both psi entries are evaluated at the same point of X, so they coincide exactly; the
    check verifies that equality and the conserved fiber quantity along sampled orbits.
    """
    k_group = space.group
    if not k_group.finite:
        raise NotApplicable(f"{k_group.descriptor} is infinite; the obstruction concerns finite K")
    if not space.is_trivial:
        raise NotApplicable("the diagonal obstruction is stated for H = {e}")
    base = base or Rotation(GOLDEN)
    obstructed = 0
    for _ in range(samples):
        gamma = GridCocycle.constant(k_group, k_group.haar_sample(rng, 1)[0])
        extension = HomogeneousExtension(base, space, gamma)
        phi = _random_cocycle(extension, group, cells, rng)
        component = RelativeSquareComponent(extension, k_group.identity())
        psi = pair_cocycle(phi, component)
        pair_group = power_group(group, 2)
        system = SkewProductSystem(component, pair_group, psi)
        x = system.sample_points(rng, points)
        gd = group.dim
        fiber = x[:, component.point_dim :]
        invariant = group.compose(group.inverse(fiber[:, :gd]), fiber[:, gd:])
        ok = True
        for _ in range(steps):
            values = psi.evaluate(x[:, : component.point_dim])
            if not np.array_equal(values[:, :gd], values[:, gd:]):
                ok = False
                break
            x = system.forward_points(x)
            fiber = x[:, component.point_dim :]
            now = group.compose(group.inverse(fiber[:, :gd]), fiber[:, gd:])
            if np.max(group.distance(now, invariant)) > 1e-12:
                ok = False
                break
        obstructed += int(ok)
    logger.info("finite obstruction on %s: %d/%d", k_group.descriptor, obstructed, samples)
    return ObstructionReport(samples, obstructed)
