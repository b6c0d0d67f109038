"""Exact Rokhlin towers over interval-exchange bases.

Towers are cut out of first-return (Kac) columns, so every level is an interval and
all measures are computed with interval arithmetic.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..utils.intervals import SLIVER, IntervalSet
from .cocycles import Cocycle, FiniteFullGroupElement, GridCocycle
from .systems import BaseSystem

logger = logging.getLogger(__name__)

FIRST_CHUNK = 64
MAX_CHUNK = 65_536
MAX_RETURN_TIME = 50_000_000
MAX_COLUMNS = 1_000_000
CUT_TOL = 1e-12
KAC_TOL = 1e-6


class CoverageUnattainable(RuntimeError):
    """Raised when no candidate base reaches the requested coverage."""

    def __init__(self, message: str, best_coverage: float):
        super().__init__(message)
        self.best_coverage = best_coverage


class OverFragmentation(RuntimeError):
    """Raised when purification produces more columns than the configured cap."""


class TowerShapeError(ValueError):
    """Raised for tower heights or inputs a construction cannot use."""


@dataclass
class KacColumn:
    """Sub-interval [lo, hi) of the return set with first-return time ``time``."""

    lo: float
    hi: float
    time: int

    @property
    def width(self) -> float:
        return self.hi - self.lo


def _on_circle(xs: np.ndarray) -> np.ndarray:
    """Fold images that rounded to just below 1 back onto 0."""
    return np.where(xs > 1.0 - CUT_TOL, 0.0, xs)


def _first_event(base: BaseSystem, a: float, w: float, lo: float, hi: float):
    """First step of the orbit of [a, a+w) that hits [lo, hi) or straddles a cut of T.

    The seam at 1 counts as a cut, so no piece is followed across it.
    """
    cuts = np.append(base.cuts, 1.0)
    start = 0
    chunk = FIRST_CHUNK
    while start < MAX_RETURN_TIME:
        steps = np.arange(start, start + chunk)
        xs = _on_circle(base.iterate(a, steps))
        hit = (xs < hi - CUT_TOL) & (xs + w > lo + CUT_TOL) & (steps >= 1)
        inside = (xs[:, None] + CUT_TOL < cuts[None, :]) & (
            cuts[None, :] < xs[:, None] + w - CUT_TOL
        )
        straddle = inside.any(axis=1)
        hit_at = np.flatnonzero(hit)
        cut_at = np.flatnonzero(straddle)
        first_hit = hit_at[0] if len(hit_at) else None
        first_cut = cut_at[0] if len(cut_at) else None
        if first_hit is not None or first_cut is not None:
            if first_cut is not None and (first_hit is None or first_cut < first_hit):
                j = int(first_cut)
                c = float(cuts[inside[j]][0])
                return "cut", int(steps[j]), float(xs[j]), c
            j = int(first_hit)
            return "hit", int(steps[j]), float(xs[j]), None
        start += chunk
        chunk = min(chunk * 2, MAX_CHUNK)
    raise TowerShapeError(f"no return to [{lo}, {hi}) within {MAX_RETURN_TIME} steps")


def first_return(base: BaseSystem, lo: float, hi: float) -> List[KacColumn]:
    """Exact first-return columns of [lo, hi): pieces on which T^t is a translation back into it."""
    if not 0.0 <= lo < hi <= 1.0:
        raise TowerShapeError(f"return set [{lo}, {hi}) must be a nonempty sub-interval of [0, 1)")
    work: List[Tuple[float, float]] = [(lo, hi)]
    columns: List[KacColumn] = []
    while work:
        a, b = work.pop()
        w = b - a
        if w <= SLIVER:
            continue
        kind, step, x, cut = _first_event(base, a, w, lo, hi)
        if kind == "cut":
            mid = a + (cut - x)
            work.extend([(a, mid), (mid, b)])
            continue
        splits = [p for p in (lo, hi) if x + CUT_TOL < p < x + w - CUT_TOL]
        if splits:
            edges = [a] + [a + (p - x) for p in splits] + [b]
            work.extend(zip(edges[:-1], edges[1:]))
            continue
        columns.append(KacColumn(a, b, step))
    columns.sort(key=lambda c: c.lo)
    logger.debug("first return to [%.6g, %.6g): %d columns", lo, hi, len(columns))
    return columns


def return_time_profile(columns: List[KacColumn]) -> Dict[int, float]:
    """Distinct return times with the measure of the base carrying each."""
    profile: Dict[int, float] = {}
    for col in columns:
        profile[col.time] = profile.get(col.time, 0.0) + col.width
    return dict(sorted(profile.items()))


def kac_total(columns: List[KacColumn]) -> float:
    """Sum of width * return time; equals 1 for an ergodic base."""
    return float(sum(col.width * col.time for col in columns))


@dataclass
class RokhlinTower:
    """Columns of height ``height`` whose level i of column p is [positions[p, i], + width[p])."""

    system: BaseSystem
    height: int
    width: np.ndarray
    positions: np.ndarray
    coverage: float
    base_length: float = 0.0

    @property
    def lo(self) -> np.ndarray:
        return self.positions[:, 0]

    @property
    def residual(self) -> float:
        return max(0.0, 1.0 - self.coverage)

    @property
    def half(self) -> int:
        return self.height // 2

    @property
    def central_level(self) -> int:
        return self.height // 2

    def __len__(self) -> int:
        return len(self.width)

    def level(self, i: int) -> IntervalSet:
        return IntervalSet.from_pairs(zip(self.positions[:, i], self.positions[:, i] + self.width))

    def level_mass(self) -> float:
        return float(np.sum(self.width))

    def levels_disjoint(self, tol: float = 1e-12) -> bool:
        lo = self.positions.reshape(-1)
        hi = (self.positions + self.width[:, None]).reshape(-1)
        order = np.argsort(lo, kind="stable")
        return bool(np.all(lo[order][1:] >= hi[order][:-1] - tol))

    def midpoints(self) -> np.ndarray:
        return self.positions + 0.5 * self.width[:, None]


def build_tower(system: BaseSystem, height: int, eps: float) -> RokhlinTower:
    """Tower of the given height covering at least 1 - eps, cut from Kac columns.

    A Kac column of return time t contributes floor(t/h) stacked blocks of height h.
    Candidate bases are tried from longest to shortest.
    """
    if height < 1:
        raise TowerShapeError(f"tower height must be >= 1, got {height}")
    best = 0.0
    for length in system.candidate_base_lengths(height):
        columns = first_return(system, 0.0, length)
        total = kac_total(columns)
        if abs(total - 1.0) > KAC_TOL:
            logger.warning("base length %.6g: Kac total %.12g, skipping", length, total)
            continue
        coverage = sum(c.width * height * (c.time // height) for c in columns)
        if coverage > 1.0 + KAC_TOL:
            logger.warning("base length %.6g: coverage %.12g exceeds 1, skipping", length, coverage)
            continue
        best = max(best, coverage)
        if coverage < 1.0 - eps:
            logger.debug("base length %.6g covers %.6g < %.6g", length, coverage, 1.0 - eps)
            continue
        widths, positions = [], []
        for col in columns:
            blocks = col.time // height
            if blocks == 0:
                continue
            steps = np.arange(blocks * height).reshape(blocks, height)
            positions.append(_on_circle(system.iterate(col.lo, steps)))
            widths.append(np.full(blocks, col.width))
        tower = RokhlinTower(
            system=system,
            height=height,
            width=np.concatenate(widths),
            positions=np.concatenate(positions),
            coverage=float(coverage),
            base_length=length,
        )
        logger.info(
            "built tower on %s: height=%d columns=%d coverage=%.12g",
            system.descriptor,
            height,
            len(tower),
            tower.coverage,
        )
        return tower
    logger.warning("tower of height %d on %s: best coverage %.6g", height, system.descriptor, best)
    raise CoverageUnattainable(
        f"no base on {system.descriptor} reaches coverage {1.0 - eps:.6g} at height {height}",
        best_coverage=best,
    )


def refine_by_points(tower: RokhlinTower, points: np.ndarray) -> RokhlinTower:
    """Split columns so that no level contains one of ``points`` in its interior."""
    pts = np.unique(np.asarray(points, dtype=float))
    if not len(pts) or not len(tower):
        return tower
    pos = tower.positions
    ends = pos + tower.width[:, None]
    left = np.searchsorted(pts, pos + CUT_TOL, side="right")
    right = np.searchsorted(pts, ends - CUT_TOL, side="left")
    cut_cols = np.flatnonzero((right > left).any(axis=1))
    if not len(cut_cols):
        return tower
    keep = np.ones(len(tower), dtype=bool)
    keep[cut_cols] = False
    widths = [tower.width[keep]]
    positions = [pos[keep]]
    for p in cut_cols:
        offsets = {0.0, float(tower.width[p])}
        for i in np.flatnonzero(right[p] > left[p]):
            offsets.update((pts[left[p, i] : right[p, i]] - pos[p, i]).tolist())
        offsets = np.asarray(sorted(offsets))
        w = np.diff(offsets)
        sel = w > SLIVER
        widths.append(w[sel])
        positions.append(pos[p][None, :] + offsets[:-1][sel][:, None])
    return RokhlinTower(
        system=tower.system,
        height=tower.height,
        width=np.concatenate(widths),
        positions=np.concatenate(positions),
        coverage=tower.coverage,
        base_length=tower.base_length,
    )


@dataclass
class PureColumn:
    lo: float
    width: float
    positions: np.ndarray
    values: np.ndarray
    in_c: np.ndarray


@dataclass
class PureTower:
    """A tower with phi0 constant on every level and each level inside or outside C."""

    tower: RokhlinTower
    values: np.ndarray
    in_c: np.ndarray

    @property
    def height(self) -> int:
        return self.tower.height

    def __len__(self) -> int:
        return len(self.tower)

    def column(self, p: int) -> PureColumn:
        t = self.tower
        return PureColumn(
            float(t.positions[p, 0]), float(t.width[p]), t.positions[p], self.values[p], self.in_c[p]
        )

    def patterns(self) -> Dict[bytes, np.ndarray]:
        """Column indices grouped by their (values, C-membership) pattern."""
        keys = np.concatenate(
            [self.values.reshape(len(self), -1), self.in_c.astype(float)], axis=1
        )
        _, inverse = np.unique(keys, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        groups: Dict[bytes, np.ndarray] = {}
        for g in range(int(inverse.max(initial=-1)) + 1):
            idx = np.flatnonzero(inverse == g)
            groups[keys[idx[0]].tobytes()] = idx
        return groups

    def dump(self) -> List[str]:
        """One line per (column, level): ``column level lo hi value in_c``."""
        t = self.tower
        lines = []
        for p in range(len(t)):
            for i in range(t.height):
                lo = t.positions[p, i]
                value = ";".join(format(float(v), ".12g") for v in self.values[p, i])
                lines.append(
                    f"{p} {i} {format(lo, '.17g')} {format(lo + t.width[p], '.17g')} "
                    f"{value} {int(self.in_c[p, i])}"
                )
        return lines


def purify(
    tower: RokhlinTower,
    phi0: Cocycle,
    area: Optional[IntervalSet] = None,
    max_columns: int = MAX_COLUMNS,
) -> PureTower:
    """Coarsest refinement of the columns making phi0 and membership in ``area`` constant per level."""
    if not isinstance(phi0, GridCocycle) or phi0.domain_dim != 1:
        raise TowerShapeError("purification needs a finite-valued phi0 on the base")
    area = area if area is not None else IntervalSet.full()
    cuts = np.concatenate([phi0.axis_edges(0), area.breakpoints()])
    refined = refine_by_points(tower, cuts)
    if len(refined) > max_columns:
        raise OverFragmentation(f"{len(refined)} columns exceed the cap of {max_columns}")
    mids = refined.midpoints()
    values = phi0(mids[..., None])
    in_c = area.contains(mids)
    logger.debug("purified %d columns into %d", len(tower), len(refined))
    return PureTower(refined, values, in_c)


@dataclass
class CLevelStats:
    lower: np.ndarray
    upper: np.ndarray
    mass: np.ndarray
    threshold: float
    fraction: float


def c_level_stats(
    pure: PureTower, measure_c: Optional[float] = None, slack: float = 0.5
) -> CLevelStats:
    """Per-column counts of C-levels in the lower levels [0, N) and the upper levels [h-N, h)."""
    h = pure.height
    n = h // 2
    if measure_c is None:
        measure_c = float(np.sum(pure.in_c * pure.tower.width[:, None]))
        measure_c /= max(pure.tower.coverage, SLIVER)
    lower = pure.in_c[:, :n].sum(axis=1)
    upper = pure.in_c[:, h - n :].sum(axis=1)
    mass = pure.tower.width * h
    threshold = 0.5 * measure_c * n * (1.0 - slack)
    good = (lower >= threshold) & (upper >= threshold)
    total = float(np.sum(mass))
    fraction = float(np.sum(mass[good]) / total) if total > 0 else 0.0
    return CLevelStats(lower, upper, mass, threshold, fraction)


@dataclass
class PairingInvolution:
    element: FiniteFullGroupElement
    mode: str
    matches: np.ndarray
    permutation: Optional[np.ndarray] = None
    pairs: List[Tuple[int, int]] = field(default_factory=list)


def _pair_cells(tower: RokhlinTower, cols: np.ndarray, src: np.ndarray, dst: np.ndarray):
    jump = dst - src
    lo = np.concatenate([tower.positions[cols, src], tower.positions[cols, dst]])
    width = np.concatenate([tower.width[cols], tower.width[cols]])
    exps = np.concatenate([jump, -jump])
    return FiniteFullGroupElement(lo, lo + width, exps)


def random_pairing(
    pure: PureTower,
    rng: np.random.Generator,
    mode: str = "c-matched",
    shuffle: bool = False,
) -> PairingInvolution:
    """Involution swapping lower-half levels with upper-half levels of the same column.

    ``c-matched`` pairs the i-th lower C-level with the i-th upper C-level (in a random
    order when ``shuffle``); ``uniform-permutation`` draws one pi in Sym(N) and swaps
    level j with level pi(j) + N + 1 in every column.
    """
    tower = pure.tower
    h = tower.height
    n = h // 2
    in_c = pure.in_c
    if mode == "c-matched":
        lower_c = in_c[:, :n]
        upper_c = in_c[:, h - n :]
        if shuffle:
            keys = rng.random(upper_c.shape)
        else:
            keys = np.broadcast_to(np.arange(n, dtype=float), upper_c.shape).copy()
        keys[~upper_c] = np.inf
        upper_order = np.argsort(keys, axis=1, kind="stable")
        lower_keys = np.where(lower_c, np.arange(n)[None, :], n)
        lower_order = np.argsort(lower_keys, axis=1, kind="stable")
        matches = np.minimum(lower_c.sum(axis=1), upper_c.sum(axis=1))
        rank = np.arange(n)[None, :]
        active = rank < matches[:, None]
        cols, ranks = np.nonzero(active)
        src = lower_order[cols, ranks]
        dst = upper_order[cols, ranks] + (h - n)
        element = _pair_cells(tower, cols, src, dst)
        logger.debug("c-matched pairing: %d swapped level pairs", len(cols))
        return PairingInvolution(element, mode, matches)
    if mode == "uniform-permutation":
        if h % 2 == 0:
            raise TowerShapeError(f"uniform-permutation pairing needs an odd height, got {h}")
        perm = rng.permutation(n)
        src = np.tile(np.arange(n), len(tower))
        dst = np.tile(perm + n + 1, len(tower))
        cols = np.repeat(np.arange(len(tower)), n)
        element = _pair_cells(tower, cols, src, dst)
        matched = (in_c[:, :n] & in_c[:, perm + n + 1]).sum(axis=1)
        pairs = [(j, int(perm[j]) + n + 1) for j in range(n)]
        return PairingInvolution(element, mode, matched, permutation=perm, pairs=pairs)
    raise TowerShapeError(f"unknown pairing mode: {mode!r}")
