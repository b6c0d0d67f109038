"""Finite-valued cocycles, their powers and metric, and the finite full group.

Points are float arrays of shape ``(..., domain_dim)``; cocycle values are group
elements of shape ``(..., group.dim)``. A base-system point may also be passed as a
bare coordinate array.
"""

from __future__ import annotations

import logging
import re
from abc import ABC, abstractmethod
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..utils.intervals import SLIVER, IntervalSet
from .groups import CompactGroup, Torus, parse_element, power_group

logger = logging.getLogger(__name__)

DEFAULT_RESOLUTION = 2.0**-20
METRIC_RESOLUTION = 2.0**-16


class DomainMismatch(ValueError):
    """Raised when two cocycles, or a cocycle and a system, live on different spaces."""


class CocycleLiteralError(ValueError):
    """Raised when a cocycle literal cannot be parsed."""


class InvalidFullGroupElement(ValueError):
    """Raised when cells and exponents do not define an invertible finite full group element."""


def as_points(points: np.ndarray | float, dim: int) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    if dim == 1 and (points.ndim == 0 or points.shape[-1] != 1):
        points = points[..., None]
    return points


class Cocycle(ABC):
    """A measurable map from a product of coordinate spans into a compact group."""

    group: CompactGroup
    domain_dim: int
    spans: List[Tuple[float, float]]
    finite_valued: bool = True

    @abstractmethod
    def evaluate(self, points: np.ndarray) -> np.ndarray: ...

    def __call__(self, points: np.ndarray | float) -> np.ndarray:
        return self.evaluate(as_points(points, self.domain_dim))

    def axis_edges(self, axis: int) -> Optional[np.ndarray]:
        """Cell edges along ``axis``; None when the cocycle is not a step function."""
        return None

    def as_grid(self, resolution: float = DEFAULT_RESOLUTION) -> "GridCocycle":
        raise NotImplementedError(f"{type(self).__name__} has no grid form")


class GridCocycle(Cocycle):
    """Step cocycle constant on the cells of a product grid."""

    def __init__(
        self,
        group: CompactGroup,
        edges: Sequence[np.ndarray],
        values: np.ndarray,
    ):
        self.group = group
        self.edges = [np.asarray(e, dtype=float) for e in edges]
        self.values = np.asarray(values, dtype=float)
        self.domain_dim = len(self.edges)
        self.spans = [(float(e[0]), float(e[-1])) for e in self.edges]
        shape = tuple(len(e) - 1 for e in self.edges)
        if self.values.shape != shape + (group.dim,):
            raise DomainMismatch(
                f"values shape {self.values.shape} does not match grid {shape} x {group.dim}"
            )
        if any(np.any(np.diff(e) <= 0) for e in self.edges):
            raise CocycleLiteralError("grid edges must be strictly increasing")

    @classmethod
    def constant(
        cls,
        group: CompactGroup,
        value: np.ndarray,
        spans: Sequence[Tuple[float, float]] = ((0.0, 1.0),),
    ) -> "GridCocycle":
        edges = [np.array([lo, hi]) for lo, hi in spans]
        shape = (1,) * len(edges) + (group.dim,)
        return cls(group, edges, np.broadcast_to(np.asarray(value, dtype=float), shape).copy())

    @classmethod
    def from_intervals(
        cls,
        group: CompactGroup,
        cells: Sequence[Tuple[float, float, np.ndarray]],
        default: Optional[np.ndarray] = None,
        span: Tuple[float, float] = (0.0, 1.0),
    ) -> "GridCocycle":
        """1-D step cocycle from (lo, hi, value) cells; ``default`` fills the rest."""
        default = group.identity() if default is None else np.asarray(default, dtype=float)
        ordered = sorted(cells, key=lambda c: c[0])
        for (lo1, hi1, _), (lo2, _, _) in zip(ordered, ordered[1:]):
            if lo2 < hi1 - SLIVER:
                raise CocycleLiteralError(f"cells [{lo1}, {hi1}) and [{lo2}, ...) overlap")
        points = {span[0], span[1]}
        for lo, hi, _ in ordered:
            if lo < span[0] - SLIVER or hi > span[1] + SLIVER or hi <= lo:
                raise CocycleLiteralError(f"cell [{lo}, {hi}) is not inside {span}")
            points.update((float(lo), float(hi)))
        edges = np.unique(np.asarray(sorted(points)))
        mids = 0.5 * (edges[:-1] + edges[1:])
        values = np.broadcast_to(default, (len(mids), group.dim)).copy()
        for lo, hi, value in ordered:
            values[(mids >= lo) & (mids < hi)] = np.asarray(value, dtype=float)
        return cls(group, [edges], values)

    def axis_edges(self, axis: int) -> np.ndarray:
        return self.edges[axis]

    def as_grid(self, resolution: float = DEFAULT_RESOLUTION) -> "GridCocycle":
        return self

    def _cell_index(self, points: np.ndarray) -> Tuple[np.ndarray, ...]:
        idx = []
        for axis, e in enumerate(self.edges):
            i = np.searchsorted(e, points[..., axis], side="right") - 1
            idx.append(np.clip(i, 0, len(e) - 2))
        return tuple(idx)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        if points.shape[-1] != self.domain_dim:
            raise DomainMismatch(
                f"points have {points.shape[-1]} coordinates, cocycle expects {self.domain_dim}"
            )
        return self.values[self._cell_index(points)]

    def refine(self, edges: Sequence[np.ndarray]) -> "GridCocycle":
        """Same cocycle on a finer grid containing the given edges."""
        merged = [np.unique(np.concatenate([own, np.asarray(e)])) for own, e in zip(self.edges, edges)]
        mids = [0.5 * (e[:-1] + e[1:]) for e in merged]
        mesh = np.stack(np.meshgrid(*mids, indexing="ij"), axis=-1)
        return GridCocycle(self.group, merged, self.evaluate(mesh))

    def cells_1d(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self.domain_dim != 1:
            raise DomainMismatch("cells_1d needs a one-dimensional domain")
        e = self.edges[0]
        return e[:-1], e[1:], self.values

    def overlay(self, lo: np.ndarray, hi: np.ndarray, values: np.ndarray) -> "GridCocycle":
        """1-D cocycle equal to ``values`` on the given disjoint intervals and to self elsewhere."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        values = np.asarray(values, dtype=float).reshape(len(lo), self.group.dim)
        edges = np.unique(np.concatenate([self.edges[0], lo, hi]))
        mids = 0.5 * (edges[:-1] + edges[1:])
        out = self.evaluate(mids[:, None]).copy()
        order = np.argsort(lo)
        lo, hi, values = lo[order], hi[order], values[order]
        j = np.searchsorted(lo, mids, side="right") - 1
        safe = np.clip(j, 0, len(lo) - 1)
        inside = (j >= 0) & (mids < hi[safe])
        out[inside] = values[safe[inside]]
        return GridCocycle(self.group, [edges], out)

    def dump_lines(self) -> List[str]:
        """One cell per line: ``lo hi value`` (value coordinates joined by ';')."""
        lo, hi, values = self.cells_1d()
        return [
            f"{format(a, '.17g')} {format(b, '.17g')} "
            + ";".join(format(float(v), ".17g") for v in val)
            for a, b, val in zip(lo, hi, values)
        ]

    @classmethod
    def load_lines(cls, group: CompactGroup, lines: Sequence[str]) -> "GridCocycle":
        cells = []
        for lineno, line in enumerate(lines, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise CocycleLiteralError(f"line {lineno}: expected 'lo hi value', got {line!r}")
            try:
                lo, hi = float(parts[0]), float(parts[1])
                value = np.asarray([float(v) for v in parts[2].split(";")])
            except ValueError as exc:
                raise CocycleLiteralError(f"line {lineno}: {exc}") from exc
            cells.append((lo, hi, value))
        if not cells:
            raise CocycleLiteralError("no cells found")
        span = (min(c[0] for c in cells), max(c[1] for c in cells))
        return cls.from_intervals(group, cells, span=span)


class FunctionCocycle(Cocycle):
    """Cocycle given by an evaluator, discretized on demand."""

    finite_valued = False

    def __init__(
        self,
        group: CompactGroup,
        fn: Callable[[np.ndarray], np.ndarray],
        domain_dim: int = 1,
        spans: Optional[Sequence[Tuple[float, float]]] = None,
        name: str = "function",
    ):
        self.group = group
        self.fn = fn
        self.domain_dim = domain_dim
        self.spans = list(spans) if spans else [(0.0, 1.0)] * domain_dim
        self.name = name

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        return self.group.canonical(self.fn(points))

    def discretize(self, resolution: float = DEFAULT_RESOLUTION) -> GridCocycle:
        """Step cocycle taking the value at each cell midpoint, cells of width ``resolution``."""
        edges = []
        for lo, hi in self.spans:
            count = max(1, int(round((hi - lo) / resolution)))
            edges.append(np.linspace(lo, hi, count + 1))
        mids = [0.5 * (e[:-1] + e[1:]) for e in edges]
        mesh = np.stack(np.meshgrid(*mids, indexing="ij"), axis=-1)
        logger.debug("discretized %s into %d cells", self.name, int(np.prod([len(m) for m in mids])))
        return GridCocycle(self.group, edges, self.evaluate(mesh))

    def as_grid(self, resolution: float = DEFAULT_RESOLUTION) -> GridCocycle:
        return self.discretize(resolution)


def identity_coord(group: Optional[CompactGroup] = None) -> FunctionCocycle:
    """phi(y) = y on a circle base, with values in T^1."""
    group = group or Torus(1)
    if not (isinstance(group, Torus) and group.dim == 1):
        raise CocycleLiteralError("identity-coord needs the target group torus:1")
    return FunctionCocycle(group, lambda p: p[..., :1], name="identity-coord")


class TupleCocycle(Cocycle):
    """(phi(y), phi(y k1), ..., phi(y kn)) into G^(n+1), y k the right translate in the fiber."""

    finite_valued = False

    def __init__(self, phi: Cocycle, space, k_list: Sequence[np.ndarray]):
        self.phi = phi
        self.space = space
        self.k_list = [np.asarray(k, dtype=float) for k in k_list]
        self.group = power_group(phi.group, len(self.k_list) + 1)
        self.domain_dim = phi.domain_dim
        self.spans = phi.spans

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        parts = [self.phi.evaluate(points)]
        for k in self.k_list:
            parts.append(self.phi.evaluate(self.space.right_translate(points, k)))
        return np.concatenate(parts, axis=-1)


class PairCocycle(Cocycle):
    """psi(z, kH, kk0H, v1, v2) = (phi(z, kH, v1), phi(z, kk0H, v2))."""

    finite_valued = False

    def __init__(self, phi: Cocycle, component):
        self.phi = phi
        self.component = component
        self.group = power_group(phi.group, 2)
        self.domain_dim = component.point_dim
        self.spans = component.spans

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        first = self.phi.evaluate(self.component.side(points, 0))
        second = self.phi.evaluate(self.component.side(points, 1))
        return np.concatenate([first, second], axis=-1)


def pair_cocycle(phi: Cocycle, component) -> PairCocycle:
    if phi.domain_dim != component.extension.point_dim:
        raise DomainMismatch(
            f"phi has {phi.domain_dim} coordinates, the extension has {component.extension.point_dim}"
        )
    return PairCocycle(phi, component)


_CELL = re.compile(r"\(\s*([^,()]+?)\s*,\s*([^,()]+?)\s*\)\s*:\s*([^,\[\]()]+)")


def parse_cocycle(
    literal: str,
    group: CompactGroup,
    domain_dim: int = 1,
    spans: Optional[Sequence[Tuple[float, float]]] = None,
) -> Cocycle:
    """Parse "const:g", "identity-coord" or "cells:[(a,b):g, ...]"."""
    text = literal.strip()
    spans = list(spans) if spans else [(0.0, 1.0)] * domain_dim
    if text.startswith("const:"):
        try:
            value = parse_element(group, text[len("const:") :].replace(";", ","))
        except ValueError as exc:
            raise CocycleLiteralError(str(exc)) from exc
        return GridCocycle.constant(group, value, spans)
    if text == "identity-coord":
        if domain_dim != 1:
            raise CocycleLiteralError("identity-coord is defined on a one-dimensional base")
        return identity_coord(group)
    if text.startswith("cells:"):
        if domain_dim != 1:
            raise CocycleLiteralError("cells literals describe one-dimensional step cocycles")
        body = text[len("cells:") :].strip()
        if not (body.startswith("[") and body.endswith("]")):
            raise CocycleLiteralError(f"cells literal must be bracketed: {literal!r}")
        cells = []
        for lo, hi, value in _CELL.findall(body):
            try:
                cells.append(
                    (float(lo), float(hi), parse_element(group, value.strip().replace(";", ",")))
                )
            except ValueError as exc:
                raise CocycleLiteralError(f"bad cell ({lo}, {hi}): {exc}") from exc
        if not cells:
            raise CocycleLiteralError(f"no cells in {literal!r}")
        return GridCocycle.from_intervals(group, cells, span=spans[0])
    raise CocycleLiteralError(f"unknown cocycle literal: {literal!r}")


def _forward(system, x: np.ndarray) -> np.ndarray:
    return system.forward_points(x)


def cocycle_power_many(phi: Cocycle, system, exponents: np.ndarray, points: np.ndarray) -> np.ndarray:
    """phi_{n}(y) for a per-point exponent n (any sign)."""
    points = as_points(points, phi.domain_dim)
    lead = points.shape[:-1]
    flat = points.reshape(-1, points.shape[-1]).copy()
    exps = np.broadcast_to(np.asarray(exponents, dtype=np.int64), lead).reshape(-1)
    group = phi.group
    out = np.broadcast_to(group.identity(), (len(flat), group.dim)).copy()
    top = int(exps.max(initial=0))
    for j in range(top):
        idx = np.nonzero(exps > j)[0]
        x = flat[idx]
        out[idx] = group.compose(phi.evaluate(x), out[idx])
        flat[idx] = system.forward_points(x)
    bottom = int(-exps.min(initial=0))
    for j in range(1, bottom + 1):
        idx = np.nonzero(-exps >= j)[0]
        x = system.backward_points(flat[idx])
        flat[idx] = x
        out[idx] = group.compose(group.inverse(phi.evaluate(x)), out[idx])
    return out.reshape(lead + (group.dim,))


def cocycle_power(phi: Cocycle, system, n: int, points: np.ndarray | float) -> np.ndarray:
    """phi_n(y): phi(T^{n-1}y)...phi(y) for n > 0, identity for n = 0, phi_{|n|}(T^n y)^-1 for n < 0."""
    points = as_points(points, phi.domain_dim)
    return cocycle_power_many(phi, system, np.full(points.shape[:-1], int(n)), points)


def metric_from_levels(distances: np.ndarray, masses: np.ndarray) -> float:
    """inf{eps > 0 : mass(distance > eps) < eps} for a finitely-valued distance function."""
    distances = np.asarray(distances, dtype=float).reshape(-1)
    masses = np.asarray(masses, dtype=float).reshape(-1)
    levels = np.unique(np.concatenate([[0.0], distances]))
    order = np.argsort(distances)
    sorted_d = distances[order]
    tail = np.concatenate([np.cumsum(masses[order][::-1])[::-1], [0.0]])
    above = tail[np.searchsorted(sorted_d, levels, side="right")]
    return float(np.min(np.maximum(levels, above)))


def _common_grid(phi: Cocycle, psi: Cocycle) -> Tuple[GridCocycle, GridCocycle]:
    a = phi.as_grid(METRIC_RESOLUTION)
    b = psi.as_grid(METRIC_RESOLUTION)
    return a.refine(b.edges), b.refine(a.edges)


def cocycle_metric(phi: Cocycle, psi: Cocycle) -> float:
    """d(phi, psi) = inf{eps : nu(d_G(phi, psi) > eps) < eps}, exact over the merged cells."""
    if phi.group != psi.group:
        raise DomainMismatch(f"target groups differ: {phi.group} vs {psi.group}")
    if phi.domain_dim != psi.domain_dim or not np.allclose(phi.spans, psi.spans):
        raise DomainMismatch("cocycles are defined on different domains")
    a, b = _common_grid(phi, psi)
    widths = [np.diff(e) / (e[-1] - e[0]) for e in a.edges]
    mass = widths[0]
    for w in widths[1:]:
        mass = np.multiply.outer(mass, w)
    dist = phi.group.distance(a.values, b.values)
    return metric_from_levels(dist, mass)


def differs_on(phi: GridCocycle, psi: GridCocycle, tol: float = 1e-12) -> IntervalSet:
    """Exact set where two one-dimensional step cocycles disagree."""
    if phi.domain_dim != 1 or psi.domain_dim != 1:
        raise DomainMismatch("differs_on compares one-dimensional step cocycles")
    a, b = phi.refine(psi.edges), psi.refine(phi.edges)
    e = a.edges[0]
    bad = phi.group.distance(a.values, b.values) > tol
    return IntervalSet.from_pairs(zip(e[:-1][bad], e[1:][bad]))


class FiniteFullGroupElement:
    """tau(z) = T^{s_j} z on the cell [lo_j, hi_j); exponent 0 off the stored cells.

    The exponent depends on the base coordinate only, so the same element acts on any
    system whose first coordinate is the base point.
    """

    def __init__(self, lo: np.ndarray, hi: np.ndarray, exponents: np.ndarray):
        lo = np.asarray(lo, dtype=float).reshape(-1)
        hi = np.asarray(hi, dtype=float).reshape(-1)
        exps = np.asarray(exponents, dtype=np.int64).reshape(-1)
        keep = (exps != 0) & (hi - lo > SLIVER)
        lo, hi, exps = lo[keep], hi[keep], exps[keep]
        order = np.argsort(lo, kind="stable")
        self.lo, self.hi, self.exps = lo[order], hi[order], exps[order]
        if np.any(self.lo[1:] < self.hi[:-1] - SLIVER):
            raise InvalidFullGroupElement("cells overlap")

    @classmethod
    def identity(cls) -> "FiniteFullGroupElement":
        return cls(np.empty(0), np.empty(0), np.empty(0, dtype=np.int64))

    @classmethod
    def constant(
        cls, exponent: int, span: Tuple[float, float] = (0.0, 1.0)
    ) -> "FiniteFullGroupElement":
        return cls(np.array([span[0]]), np.array([span[1]]), np.array([exponent]))

    def __len__(self) -> int:
        return len(self.lo)

    @property
    def max_abs_exponent(self) -> int:
        return int(np.max(np.abs(self.exps), initial=0))

    def exponent(self, z: np.ndarray | float) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if not len(self.lo):
            return np.zeros(z.shape, dtype=np.int64)
        j = np.searchsorted(self.lo, z, side="right") - 1
        safe = np.clip(j, 0, len(self.lo) - 1)
        inside = (j >= 0) & (z < self.hi[safe])
        return np.where(inside, self.exps[safe], 0)

    def apply(self, system, points: np.ndarray) -> np.ndarray:
        points = as_points(points, system.point_dim)
        exps = self.exponent(points[..., 0])
        lead = points.shape[:-1]
        flat = points.reshape(-1, points.shape[-1]).copy()
        e = exps.reshape(-1)
        for j in range(int(e.max(initial=0))):
            idx = np.nonzero(e > j)[0]
            flat[idx] = system.forward_points(flat[idx])
        for j in range(1, int(-e.min(initial=0)) + 1):
            idx = np.nonzero(-e >= j)[0]
            flat[idx] = system.backward_points(flat[idx])
        return flat.reshape(lead + (points.shape[-1],))

    def all_cells(self, span: Tuple[float, float] = (0.0, 1.0)):
        gaps = IntervalSet(self.lo, self.hi).complement(*span)
        lo = np.concatenate([self.lo, gaps.lo])
        hi = np.concatenate([self.hi, gaps.hi])
        exps = np.concatenate([self.exps, np.zeros(len(gaps), dtype=np.int64)])
        return lo, hi, exps

    def image_pairs(self, base, area: Optional[IntervalSet] = None) -> List[Tuple[float, float]]:
        """Pieces of tau(area) (the whole space when ``area`` is None)."""
        lo, hi, exps = self.all_cells()
        if area is not None:
            lo_parts, hi_parts, exp_parts = [], [], []
            for s in np.unique(exps):
                sel = exps == s
                part = IntervalSet.from_pairs(zip(lo[sel], hi[sel])).intersection(area)
                lo_parts.append(part.lo)
                hi_parts.append(part.hi)
                exp_parts.append(np.full(len(part), s))
            lo, hi, exps = np.concatenate(lo_parts), np.concatenate(hi_parts), np.concatenate(exp_parts)
        pairs: List[Tuple[float, float]] = []
        for s in np.unique(exps):
            sel = exps == s
            pairs.extend(base.image_pairs(lo[sel], hi[sel], int(s)))
        return pairs

    def image(self, base, area: IntervalSet) -> IntervalSet:
        return IntervalSet.from_pairs(self.image_pairs(base, area))

    def validate(self, base, tol: float = 1e-9) -> bool:
        """Images of the cells tile [0, 1): pairwise disjoint with total measure 1."""
        pairs = sorted(self.image_pairs(base))
        arr = np.asarray(pairs, dtype=float).reshape(-1, 2)
        total = float(np.sum(arr[:, 1] - arr[:, 0]))
        overlap = float(np.sum(np.clip(arr[:-1, 1] - arr[1:, 0], 0.0, None)))
        if overlap > tol or abs(total - 1.0) > tol:
            raise InvalidFullGroupElement(
                f"cell images do not tile the space: overlap={overlap:.3g} total={total:.12g}"
            )
        return True


def tau_twist(phi: Cocycle, tau: FiniteFullGroupElement, system, points: np.ndarray) -> np.ndarray:
    """phi_tau(y) = phi_{s(y)}(y) with s the exponent of tau at y."""
    points = as_points(points, phi.domain_dim)
    return cocycle_power_many(phi, system, tau.exponent(points[..., 0]), points)
