"""Perturbation constructions that push a cocycle into the open sets U(C, a, c_a, g).

The simple construction works on a base system Y with a step cocycle; the relative one
works on a compact extension X = Z x_gamma K/H x_S V and is measured on the ergodic
components of the relative square.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..utils.intervals import SLIVER, BoxSet, IntervalSet
from .cocycles import (
    Cocycle,
    FiniteFullGroupElement,
    GridCocycle,
    cocycle_metric,
    cocycle_power_many,
    differs_on,
    metric_from_levels,
    pair_cocycle,
    tau_twist,
)
from .groups import CompactGroup, HomogeneousSpace, dense_subset
from .systems import BaseSystem, HomogeneousExtension, RelativeSquareComponent, translated_tuple_system
from .towers import (
    CoverageUnattainable,
    PureTower,
    RokhlinTower,
    build_tower,
    c_level_stats,
    purify,
    random_pairing,
    refine_by_points,
)

logger = logging.getLogger(__name__)

CUT = 1e-12
MAX_CELL_DEPTH = 60
SCAN_RESOLUTION = 2.0**-12
SCAN_A = 0.1
SCAN_DEPTH = 2
XI_LOG_CAP = 4096

Area = Union[IntervalSet, BoxSet]


class PreconditionFailed(ValueError):
    """Raised when an input violates a precondition of a construction or check."""


class PerturbationError(RuntimeError):
    """Raised when a construction cannot reach its guarantees within its caps."""


class FiniteExtensionError(PerturbationError):
    """Raised when the relative construction is asked to run on a finite-index extension."""


@dataclass
class PerturbationParams:
    target: np.ndarray
    a: float
    delta: float
    area: Optional[Area] = None
    b: float = 0.2
    target2: Optional[np.ndarray] = None
    N: Optional[int] = None
    doublings: int = 4
    k0_grid: int = 64
    samples: int = 2048
    del_constant: float = 10.0

    def __post_init__(self) -> None:
        if not self.a > 0:
            raise PreconditionFailed(f"a must be positive, got {self.a}")
        if not 0 < self.delta < 1:
            raise PreconditionFailed(f"delta must lie in (0, 1), got {self.delta}")
        if not 0 < self.b < 1:
            raise PreconditionFailed(f"b must lie in (0, 1), got {self.b}")
        self.target = np.asarray(self.target, dtype=float)
        if self.target2 is not None:
            self.target2 = np.asarray(self.target2, dtype=float)


@dataclass
class MembershipCheck:
    passed: bool
    fraction: float
    c_a: float


@dataclass
class K0Row:
    k0: np.ndarray
    fraction: float
    stderr: float
    passed: bool


@dataclass
class XiLog:
    """Cells of the central level whose random net value was evaluated, with the drawn index."""

    cap: int = XI_LOG_CAP
    cells: Dict[Tuple[int, int, int], int] = field(default_factory=dict)

    def record(self, p: np.ndarray, q: np.ndarray, r: np.ndarray, index: np.ndarray) -> None:
        room = self.cap - len(self.cells)
        if room <= 0:
            return
        for key in zip(p[:room].tolist(), q[:room].tolist(), r[:room].tolist(), index[:room].tolist()):
            self.cells.setdefault(key[:3], key[3])

    def __len__(self) -> int:
        return len(self.cells)


@dataclass
class PerturbationResult:
    phi: Cocycle
    tau: FiniteFullGroupElement
    distance: float
    fraction: float
    c_a: float
    m: int
    N: int
    passed: bool
    notes: List[str] = field(default_factory=list)
    per_k0: List[K0Row] = field(default_factory=list)
    xi_log: Optional[XiLog] = None
    extras: Dict[str, float] = field(default_factory=dict)


def _split(cur: np.ndarray, width: np.ndarray, breaks: np.ndarray):
    """Cut pieces [cur, cur + width) at interior break points.

    Returns the parent index of every new piece with its start and end offsets.
    """
    left = np.searchsorted(breaks, cur + CUT, side="right")
    right = np.searchsorted(breaks, cur + width - CUT, side="left")
    counts = np.clip(right - left, 0, None)
    pieces = counts + 1
    parent = np.repeat(np.arange(len(cur)), pieces)
    rank = np.arange(int(pieces.sum())) - np.repeat(np.cumsum(pieces) - pieces, pieces)
    first = np.repeat(left, pieces)
    last = max(len(breaks) - 1, 0)
    start_break = breaks[np.clip(first + rank - 1, 0, last)] if len(breaks) else np.zeros(len(rank))
    end_break = breaks[np.clip(first + rank, 0, last)] if len(breaks) else np.zeros(len(rank))
    base = cur[parent]
    start = np.where(rank == 0, 0.0, start_break - base)
    end = np.where(rank == counts[parent], width[parent], end_break - base)
    return parent, start, end


class _Pieces:
    """Pieces of [0, 1) followed along the orbit while a cocycle power accumulates."""

    def __init__(self, lo, hi, steps, group: CompactGroup):
        self.orig = np.asarray(lo, dtype=float)
        self.cur = self.orig.copy()
        self.width = np.asarray(hi, dtype=float) - self.orig
        self.steps = np.asarray(steps, dtype=np.int64)
        self.value = np.broadcast_to(group.identity(), (len(self.orig), group.dim)).copy()

    def cut(self, breaks: np.ndarray, mask: Optional[np.ndarray] = None) -> None:
        if not len(breaks):
            return
        idx = np.arange(len(self.cur)) if mask is None else np.flatnonzero(mask)
        parent, start, end = _split(self.cur[idx], self.width[idx], breaks)
        parent = idx[parent]
        keep = np.ones(len(self.cur), dtype=bool)
        keep[idx] = False
        width = end - start
        ok = width > SLIVER
        parent, start, width = parent[ok], start[ok], width[ok]
        self.orig = np.concatenate([self.orig[keep], self.orig[parent] + start])
        self.cur = np.concatenate([self.cur[keep], self.cur[parent] + start])
        self.steps = np.concatenate([self.steps[keep], self.steps[parent]])
        self.value = np.concatenate([self.value[keep], self.value[parent]])
        self.width = np.concatenate([self.width[keep], width])

    def move(self, base: BaseSystem, mask: np.ndarray, n: int) -> None:
        cur = base.iterate(self.cur[mask], n)
        # a start mapped to 0 can round to just below 1
        cur = np.where(cur + self.width[mask] > 1.0 + 1e-9, 0.0, cur)
        self.cur[mask] = cur


def _interior(points: np.ndarray) -> np.ndarray:
    points = np.unique(np.asarray(points, dtype=float))
    return points[(points > CUT) & (points < 1.0 - CUT)]


def twisted_pieces(
    phi: Cocycle,
    base: BaseSystem,
    tau: FiniteFullGroupElement,
    extra_breaks: Sequence[float] = (),
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact partition of [0, 1) on which phi_tau is constant: (lo, width, value)."""
    grid = phi.as_grid()
    if grid.domain_dim != 1:
        raise PreconditionFailed("exact twisted values need a cocycle on the base")
    lo, hi, exps = tau.all_cells()
    pieces = _Pieces(lo, hi, exps, phi.group)
    pieces.cut(_interior(extra_breaks))
    edges = _interior(grid.axis_edges(0))
    forward_breaks = _interior(np.concatenate([edges, base.cuts]))
    group = phi.group
    while True:
        active = pieces.steps > 0
        if not active.any():
            break
        pieces.cut(forward_breaks, active)
        active = pieces.steps > 0
        mids = pieces.cur[active] + 0.5 * pieces.width[active]
        pieces.value[active] = group.compose(grid.evaluate(mids[:, None]), pieces.value[active])
        pieces.move(base, active, 1)
        pieces.steps[active] -= 1
    inverse_breaks = _interior(base.inverse_cuts)
    while True:
        active = pieces.steps < 0
        if not active.any():
            break
        pieces.cut(inverse_breaks, active)
        active = pieces.steps < 0
        pieces.move(base, active, -1)
        pieces.cut(edges, active)
        active = pieces.steps < 0
        mids = pieces.cur[active] + 0.5 * pieces.width[active]
        step = group.inverse(grid.evaluate(mids[:, None]))
        pieces.value[active] = group.compose(step, pieces.value[active])
        pieces.steps[active] += 1
    return pieces.orig, pieces.width, pieces.value


def u_fraction(
    phi: Cocycle,
    base: BaseSystem,
    tau: FiniteFullGroupElement,
    area: IntervalSet,
    target: np.ndarray,
    a: float,
) -> float:
    """nu({y in C : d(phi_tau(y), g) < a}) / nu(C), computed over an exact partition."""
    measure = area.measure
    if measure <= 0:
        raise PreconditionFailed("C must have positive measure")
    lo, width, value = twisted_pieces(phi, base, tau, area.breakpoints())
    good = area.contains(lo + 0.5 * width) & (phi.group.distance(value, target) < a)
    return float(np.sum(width[good]) / measure)


def monte_carlo_fraction(
    phi: Cocycle,
    system,
    tau: FiniteFullGroupElement,
    area: Area,
    target: np.ndarray,
    a: float,
    samples: int,
    rng: np.random.Generator,
    measure: Optional[float] = None,
) -> Tuple[float, float]:
    """Sampled estimate of the same fraction with its standard error."""
    points = system.sample_points(rng, samples)
    in_c = _contains(area, points)
    values = tau_twist(phi, tau, system, points)
    good = in_c & (phi.group.distance(values, target) < a)
    measure = area.measure if measure is None else measure
    frac = float(np.mean(good) / measure)
    stderr = float(np.std(good, ddof=1) / math.sqrt(samples) / measure)
    return frac, stderr


def _contains(area: Optional[Area], points: np.ndarray) -> np.ndarray:
    if area is None:
        return np.ones(points.shape[:-1], dtype=bool)
    if isinstance(area, IntervalSet):
        return area.contains(points[..., 0])
    flat = points.reshape(-1, points.shape[-1])[:, : area.dim]
    return area.contains(flat).reshape(points.shape[:-1])


def check_U_simple(
    phi: Cocycle,
    base: BaseSystem,
    tau: FiniteFullGroupElement,
    area: IntervalSet,
    target: np.ndarray,
    a: float,
    c_a: float,
) -> MembershipCheck:
    """Whether tau(C) = C and nu({y in C : d(phi_tau(y), g) < a}) > c_a nu(C)."""
    image = tau.image(base, area)
    moved = image.symmetric_difference_measure(area)
    if moved > 1e-9:
        raise PreconditionFailed(f"tau does not map C onto itself (moved mass {moved:.3g})")
    fraction = u_fraction(phi, base, tau, area, target, a)
    return MembershipCheck(passed=fraction > c_a, fraction=fraction, c_a=c_a)


def _as_interval_set(area: Optional[Area]) -> IntervalSet:
    if area is None:
        return IntervalSet.full()
    if isinstance(area, BoxSet):
        if area.dim != 1:
            raise PreconditionFailed("the simple construction takes C on the base coordinate")
        return area.project(0)
    return area


def perturb_simple(
    phi0: Cocycle,
    base: BaseSystem,
    group: CompactGroup,
    params: PerturbationParams,
    rng: np.random.Generator,
) -> PerturbationResult:
    """Perturb phi0 on the central level of a Rokhlin tower so that phi lands in U(C, a, c_a, g)."""
    if not isinstance(phi0, GridCocycle) or phi0.domain_dim != 1:
        raise PreconditionFailed("phi0 must be a finite-valued step cocycle on the base")
    if phi0.group != group:
        raise PreconditionFailed(f"phi0 takes values in {phi0.group}, not {group}")
    delta = params.delta
    if delta >= 1.0 / 20.0:
        raise PreconditionFailed(f"delta={delta} leaves c_a <= 0; need delta < 1/20")
    area = _as_interval_set(params.area)
    if area.measure <= 0:
        raise PreconditionFailed("C must have positive measure")
    net = group.eps_net(params.a)
    m = net.m
    c_a = (0.5 - 10.0 * delta) / m
    n = max(params.N or 1, math.ceil((1.0 / delta - 1.0) / 2.0))
    cap = n * 2**params.doublings
    notes: List[str] = []
    while n <= cap:
        height = 2 * n + 1
        try:
            tower = build_tower(base, height, eps=delta)
        except CoverageUnattainable as exc:
            raise PerturbationError(
                f"no tower of height {height} with coverage {1 - delta:.6g} "
                f"(best {exc.best_coverage:.6g})"
            ) from exc
        pure = purify(tower, phi0, area)
        stats = c_level_stats(pure, area.measure)
        pairs = np.minimum(stats.lower, stats.upper)
        matched = float(np.sum(pure.tower.width * pairs) / area.measure)
        logger.debug("N=%d matched lower share %.6g", n, matched)
        if matched > 0.5 - 10.0 * delta:
            pairing = random_pairing(pure, rng, "c-matched", shuffle=True)
            phi = _slice_central_level(phi0, pure.tower, net.elements)
            check = check_U_simple(phi, base, pairing.element, area, params.target, params.a, c_a)
            if check.passed:
                distance = cocycle_metric(phi, phi0)
                changed = differs_on(phi, phi0)
                central = pure.tower.level(pure.tower.central_level)
                if changed.difference(central).measure > 1e-12:
                    raise PerturbationError("perturbation touched cells off the central level")
                logger.info(
                    "perturb_simple: N=%d m=%d fraction=%.6g c_a=%.6g distance=%.6g",
                    n,
                    m,
                    check.fraction,
                    c_a,
                    distance,
                )
                return PerturbationResult(
                    phi=phi,
                    tau=pairing.element,
                    distance=distance,
                    fraction=check.fraction,
                    c_a=c_a,
                    m=m,
                    N=n,
                    passed=distance <= delta + 1e-12,
                    notes=notes,
                    extras={"coverage": pure.tower.coverage, "matched": matched},
                )
            notes.append(f"N={n}: fraction {check.fraction:.6g} <= c_a")
        else:
            notes.append(f"N={n}: matched share {matched:.6g} too small")
        logger.info("perturb_simple: doubling N from %d", n)
        n *= 2
    raise PerturbationError(f"N cap {cap} exceeded; " + "; ".join(notes))


def _slice_central_level(phi0: GridCocycle, tower: RokhlinTower, net: np.ndarray) -> GridCocycle:
    """phi = f_l on the l-th of m equal slices of every central-level interval, phi0 elsewhere."""
    m = len(net)
    start = tower.positions[:, tower.central_level]
    step = tower.width / m
    offsets = np.arange(m)
    lo = (start[:, None] + offsets[None, :] * step[:, None]).reshape(-1)
    hi = (start[:, None] + (offsets[None, :] + 1) * step[:, None]).reshape(-1)
    hi = hi.reshape(len(start), m)
    hi[:, -1] = start + tower.width
    values = np.tile(net, (len(start), 1))
    return phi0.overlay(lo, hi.reshape(-1), values)


_GOLDEN_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _splitmix(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = x.astype(np.uint64) + _GOLDEN_GAMMA
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


def _cell_hash(key: int, p: np.ndarray, q: np.ndarray, r: np.ndarray) -> np.ndarray:
    h = _splitmix(r.astype(np.uint64))
    h = _splitmix(h ^ q.astype(np.uint64))
    h = _splitmix(h ^ p.astype(np.uint64))
    return _splitmix(h ^ np.uint64(key))


class CentralCellCocycle(Cocycle):
    """phi0 off the central level; on it, a net value drawn independently per P x Q x R cell."""

    def __init__(
        self,
        phi0: Cocycle,
        extension: HomogeneousExtension,
        central: IntervalSet,
        net: np.ndarray,
        depth_z: int,
        depth_k: int,
        key: int,
        log: Optional[XiLog] = None,
    ):
        self.phi0 = phi0
        self.group = phi0.group
        self.domain_dim = phi0.domain_dim
        self.spans = phi0.spans
        self.extension = extension
        self.central = central
        self.net = np.asarray(net, dtype=float)
        self.depth_z = depth_z
        self.depth_k = depth_k
        self.key = int(key)
        self.log = log
        space = extension.space
        self._radix = []
        for axis, discrete in enumerate(space.group.discrete_axes):
            if axis in space.axes:
                self._radix.append(1)
            elif discrete:
                lo, hi = space.spans[axis]
                self._radix.append(int(round(hi - lo)))
            else:
                self._radix.append(2**depth_k)

    @property
    def q_cells(self) -> int:
        return int(np.prod(self._radix))

    @property
    def r_cells(self) -> int:
        return (2**self.depth_k) ** self.extension.fiber.dim

    def _q_index(self, c: np.ndarray) -> np.ndarray:
        index = np.zeros(c.shape[:-1], dtype=np.int64)
        for axis, radix in enumerate(self._radix):
            if radix == 1:
                continue
            lo, hi = self.extension.space.spans[axis]
            frac = (c[..., axis] - lo) / (hi - lo)
            cell = np.clip(np.floor(frac * radix).astype(np.int64), 0, radix - 1)
            index = index * radix + cell
        return index

    def _r_index(self, v: np.ndarray) -> np.ndarray:
        side = 2**self.depth_k
        index = np.zeros(v.shape[:-1], dtype=np.int64)
        for axis in range(v.shape[-1]):
            cell = np.clip(np.floor(v[..., axis] * side).astype(np.int64), 0, side - 1)
            index = index * side + cell
        return index

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        out = np.array(self.phi0.evaluate(points), dtype=float, copy=True)
        z, c, v = self.extension.split(points)
        mask = self.central.contains(z[..., 0])
        if not mask.any():
            return out
        p = np.floor(z[mask][:, 0] * 2.0**self.depth_z).astype(np.int64)
        q = self._q_index(c[mask])
        r = self._r_index(v[mask])
        index = (_cell_hash(self.key, p, q, r) % np.uint64(len(self.net))).astype(np.int64)
        out[mask] = self.net[index]
        if self.log is not None:
            self.log.record(p, q, r, index)
        return out


def subgroup_margin(space: HomogeneousSpace, b: float, iterations: int = 50) -> float:
    """Largest eta with lambda_K({k : d_K(k, H) <= eta}) <= b / 10, by bisection."""
    budget = b / 10.0
    lo, hi = 0.0, max(space.group.diameter, 1e-9)
    if space.neighborhood_measure(hi) <= budget:
        return hi
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if space.neighborhood_measure(mid) <= budget:
            lo = mid
        else:
            hi = mid
    return lo


def _k0_grid(space: HomogeneousSpace, count: int, eta: float, rng: np.random.Generator) -> np.ndarray:
    group = space.group
    kept: List[np.ndarray] = []
    rejected = 0
    while len(kept) < count:
        draw = group.haar_sample(rng, count)
        far = space.distance_to_subgroup(draw) > eta
        rejected += int(np.sum(~far))
        kept.extend(draw[far])
    if rejected:
        logger.warning("k0 grid: resampled %d draws within %.4g of H", rejected, eta)
    return np.asarray(kept[:count])


def _central_distance(
    phi: Cocycle,
    phi0: Cocycle,
    extension: HomogeneousExtension,
    central: IntervalSet,
    samples: int,
    rng: np.random.Generator,
) -> float:
    """Estimate of d(phi, phi0) from points drawn on the central level, where the two differ."""
    mass = central.measure
    if mass <= 0 or samples <= 0:
        return 0.0
    points = extension.sample_points(rng, samples)
    widths = central.hi - central.lo
    pick = rng.choice(len(widths), size=samples, p=widths / mass)
    points[:, 0] = central.lo[pick] + rng.random(samples) * widths[pick]
    dist = phi.group.distance(phi.evaluate(points), phi0.evaluate(points))
    return metric_from_levels(dist, np.full(samples, mass / samples))


def perturb_relative(
    phi0: Cocycle,
    extension: HomogeneousExtension,
    group: CompactGroup,
    params: PerturbationParams,
    rng: np.random.Generator,
) -> PerturbationResult:
    """Random perturbation on the central level of a Z-tower, measured per component k0.

    The cell values xi are keyed off ``rng``, so different generators give different fields.
    """
    space = extension.space
    if space.group.finite or space.neighborhood_measure(0.0) > 0:
        raise FiniteExtensionError(
            f"K/H = {space.group.descriptor}/H has finite index; the extending group must be infinite"
        )
    if phi0.group != group:
        raise PreconditionFailed(f"phi0 takes values in {phi0.group}, not {group}")
    if phi0.domain_dim != extension.point_dim:
        raise PreconditionFailed("phi0 must be defined on the extension")
    if params.target2 is None:
        raise PreconditionFailed("the relative construction needs a target pair (g1, g2)")
    delta, b, a = params.delta, params.b, params.a
    net = group.eps_net(a)
    m = net.m
    c_a = 1.0 / (100.0 * m * m)
    eta = subgroup_margin(space, b)
    if eta <= 0:
        raise PerturbationError("no margin eta leaves room for the k0 grid")
    depth_k = max(0, math.floor(-math.log2(eta)) + 1)
    q_count = 1
    for axis, discrete in enumerate(space.group.discrete_axes):
        if axis in space.axes:
            continue
        lo, hi = space.spans[axis]
        q_count *= int(round(hi - lo)) if discrete else 2**depth_k
    r_count = (2**depth_k) ** extension.fiber.dim
    cells = q_count * r_count**2
    p = 1.0 / (m * m)
    w_bound = p * p * b / (40.0 * (cells + 1))

    n = max(
        params.N or 1,
        math.ceil((1.0 / delta - 1.0) / 2.0),
        math.ceil(1.0 / (10.0 * delta)) + 1,
    )
    height = 2 * n + 1
    base = extension.base
    try:
        tower = build_tower(base, height, eps=delta / 100.0)
    except CoverageUnattainable as exc:
        raise PerturbationError(
            f"no Z-tower of height {height} (best coverage {exc.best_coverage:.6g})"
        ) from exc
    tower = refine_by_points(tower, np.asarray(_z_breaks(phi0, params.area), dtype=float))
    central = tower.level(tower.central_level)
    central_mass = central.measure
    depth_z = math.ceil(math.log2(1.0 / (w_bound * central_mass)))
    if depth_z > MAX_CELL_DEPTH:
        raise PerturbationError(f"P-cell depth {depth_z} exceeds the cap {MAX_CELL_DEPTH}")

    shape = (len(tower), height)
    pure = PureTower(tower, np.zeros(shape + (0,)), np.ones(shape, dtype=bool))
    pairing = random_pairing(pure, rng, "uniform-permutation")
    key = int(rng.integers(2**63))
    phi = CentralCellCocycle(phi0, extension, central, net.elements, depth_z, depth_k, key)
    distance = _central_distance(phi, phi0, extension, central, params.samples, rng)
    log = XiLog()
    phi.log = log

    per_k0: List[K0Row] = []
    target = np.concatenate([params.target, params.target2])
    for k0 in _k0_grid(space, params.k0_grid, eta, rng):
        per_k0.append(_measure_component(phi, extension, k0, pairing.element, params, target, c_a, rng))
    share = float(np.mean([row.passed for row in per_k0])) if per_k0 else 0.0
    passed = share >= 1.0 - b
    bad_share = math.sqrt(params.del_constant / n)
    notes = [
        f"del constant {params.del_constant:g}: predicted unbalanced column share {bad_share:.4g}",
        f"passing k0 share {share:.4g}",
    ]
    logger.info(
        "perturb_relative: N=%d m=%d eta=%.4g l=%d l'=%d L=%d passing share=%.4g",
        n,
        m,
        eta,
        depth_k,
        depth_z,
        cells,
        share,
    )
    return PerturbationResult(
        phi=phi,
        tau=pairing.element,
        distance=distance,
        fraction=share,
        c_a=c_a,
        m=m,
        N=n,
        passed=passed,
        notes=notes,
        per_k0=per_k0,
        xi_log=log,
        extras={
            "eta": eta,
            "l": float(depth_k),
            "l_prime": float(depth_z),
            "L": float(cells),
            "coverage": tower.coverage,
            "distance_bound": central_mass,
        },
    )


def _z_breaks(phi0: Cocycle, area: Optional[Area]) -> List[float]:
    out: List[float] = []
    edges = phi0.axis_edges(0)
    if edges is not None:
        out.extend(edges.tolist())
    if isinstance(area, BoxSet):
        out.extend(area.axis_breakpoints(0).tolist())
    elif isinstance(area, IntervalSet):
        out.extend(area.breakpoints().tolist())
    return out


def _measure_component(
    phi: Cocycle,
    extension: HomogeneousExtension,
    k0: np.ndarray,
    tau: FiniteFullGroupElement,
    params: PerturbationParams,
    target: np.ndarray,
    c_a: float,
    rng: np.random.Generator,
) -> K0Row:
    component = RelativeSquareComponent(extension, k0)
    psi = pair_cocycle(phi, component)
    points = component.sample_points(rng, params.samples)
    in_c = _contains(params.area, points)
    values = cocycle_power_many(psi, component, tau.exponent(points[:, 0]), points)
    gd = phi.group.dim
    close = (phi.group.distance(values[:, :gd], target[:gd]) < params.a) & (
        phi.group.distance(values[:, gd:], target[gd:]) < params.a
    )
    good = in_c & close
    mass = float(np.mean(in_c))
    if mass <= 0:
        return K0Row(k0, 0.0, 0.0, False)
    fraction = float(np.mean(good)) / mass**2
    stderr = float(np.std(good, ddof=1) / math.sqrt(params.samples)) / mass**2
    logger.debug("k0=%s fraction=%.4g +- %.2g", np.round(k0, 4).tolist(), fraction, stderr)
    return K0Row(np.asarray(k0), fraction, stderr, fraction > c_a)


def tuple_membership(
    phi: Cocycle,
    system,
    k_list: Sequence[np.ndarray],
    tau: FiniteFullGroupElement,
    area: Optional[Area],
    targets: Sequence[np.ndarray],
    a: float,
    c_a: float,
    samples: int,
    rng: np.random.Generator,
) -> MembershipCheck:
    """All coordinates of the twisted tuple cocycle a-close to their targets, by sampling."""
    tuple_system = translated_tuple_system(system, k_list, phi, phi.group)
    if len(targets) != len(k_list) + 1:
        raise PreconditionFailed(f"need {len(k_list) + 1} targets, got {len(targets)}")
    points = system.sample_points(rng, samples)
    in_c = _contains(area, points)
    values = cocycle_power_many(tuple_system.cocycle, system, tau.exponent(points[:, 0]), points)
    gd = phi.group.dim
    close = np.ones(samples, dtype=bool)
    for i, g in enumerate(targets):
        close &= phi.group.distance(values[:, i * gd : (i + 1) * gd], np.asarray(g, dtype=float)) < a
    mass = float(np.mean(in_c))
    fraction = float(np.mean(in_c & close)) / mass if mass > 0 else 0.0
    return MembershipCheck(passed=fraction > c_a, fraction=fraction, c_a=c_a)


@dataclass
class EssentialValueScore:
    target: np.ndarray
    height: int
    score: float


def _dyadic_family() -> List[IntervalSet]:
    quarters = [IntervalSet.full(k / 4, (k + 1) / 4) for k in range(4)]
    halves = [IntervalSet.full(0.0, 0.5), IntervalSet.full(0.5, 1.0)]
    return quarters + halves + [IntervalSet.full()]


def essential_value_scan(
    phi: Cocycle,
    base: BaseSystem,
    group: CompactGroup,
    targets: Optional[Sequence[np.ndarray]] = None,
    a: float = SCAN_A,
    heights: Sequence[int] = (5, 11, 21),
    seeds: int = 4,
    resolution: float = SCAN_RESOLUTION,
    depth: int = SCAN_DEPTH,
) -> List[EssentialValueScore]:
    """Min over a dyadic C family of the best fraction over C-preserving pairings.

    Without ``targets`` the scan runs over the dense subset of ``group`` at ``depth``.
    """
    if targets is None:
        targets = list(dense_subset(group, depth))
    if not len(targets):
        raise PreconditionFailed("targets must be nonempty")
    grid = phi.as_grid(resolution)
    marker = GridCocycle.constant(group, group.identity())
    scores: List[EssentialValueScore] = []
    for height in heights:
        try:
            tower = build_tower(base, height, eps=0.2)
        except CoverageUnattainable:
            logger.warning("essential value scan: skipping height %d", height)
            continue
        best: Dict[int, List[float]] = {i: [] for i in range(len(targets))}
        for area in _dyadic_family():
            pure = purify(tower, marker, area)
            taus = [FiniteFullGroupElement.identity()]
            for seed in range(seeds):
                stream = np.random.default_rng(seed)
                taus.append(random_pairing(pure, stream, "c-matched", shuffle=seed > 0).element)
            for i, g in enumerate(targets):
                g = np.asarray(g, dtype=float)
                best[i].append(max(u_fraction(grid, base, tau, area, g, a) for tau in taus))
        for i, g in enumerate(targets):
            scores.append(EssentialValueScore(np.asarray(g, dtype=float), height, float(min(best[i]))))
    return scores
