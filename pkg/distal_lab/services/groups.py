"""Compact groups, homogeneous spaces, epsilon-nets and the monothetic generator scan.

Group elements are float coordinate arrays of shape ``(..., dim)``. Every group knows
its coordinate spans, so Haar measure is normalized Lebesgue measure on the spans and
sets of elements can be stored as unions of boxes.
"""

from __future__ import annotations

import logging
import math
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

logger = logging.getLogger(__name__)

# Distances below this count as equality of canonical representatives.
ELEMENT_TOL = 1e-12

Character = Tuple[int, ...]


class GroupDescriptorError(ValueError):
    """Raised when a group or element descriptor cannot be parsed."""


class UnsupportedSubgroup(RuntimeError):
    """Raised when a subgroup computation needs a description the subgroup lacks."""


def circle_distance(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    diff = np.mod(np.asarray(x) - np.asarray(y), 1.0)
    return np.minimum(diff, 1.0 - diff)


def _cartesian(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.concatenate([np.repeat(a, len(b), axis=0), np.tile(b, (len(a), 1))], axis=1)


def _axis_grid(count: int, span: Tuple[float, float]) -> np.ndarray:
    lo, hi = span
    return lo + (hi - lo) * np.arange(count) / count


class CompactGroup(ABC):
    """A compact group with a bi-invariant metric and normalized Haar measure."""

    abelian: bool = True
    finite: bool = False

    @property
    @abstractmethod
    def dim(self) -> int: ...

    @property
    @abstractmethod
    def spans(self) -> List[Tuple[float, float]]: ...

    @property
    @abstractmethod
    def descriptor(self) -> str: ...

    @property
    @abstractmethod
    def diameter(self) -> float: ...

    @property
    def char_arity(self) -> int:
        return 1

    @property
    def discrete_axes(self) -> List[bool]:
        """Per coordinate, whether it takes only integer values."""
        return [False] * self.dim

    @abstractmethod
    def compose(self, x: np.ndarray, y: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def inverse(self, x: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def distance(self, x: np.ndarray, y: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def haar_sample(self, rng: np.random.Generator, size: int) -> np.ndarray: ...

    @abstractmethod
    def grid(self, per_axis: int) -> np.ndarray:
        """Uniform grid with ``per_axis`` points along every continuous axis."""

    @abstractmethod
    def characters(self, limit: int) -> List[Character]: ...

    @abstractmethod
    def character_values(self, char: Character, x: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def conjugate_character(self, char: Character) -> Character: ...

    @abstractmethod
    def canonical(self, x: np.ndarray) -> np.ndarray:
        """Map coordinates onto canonical representatives."""

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.descriptor})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, CompactGroup) and other.descriptor == self.descriptor

    def __hash__(self) -> int:
        return hash(self.descriptor)

    def identity(self) -> np.ndarray:
        return np.zeros(self.dim)

    def is_identity(self, x: np.ndarray) -> np.ndarray:
        return self.distance(x, self.identity()) < ELEMENT_TOL

    def power(self, x: np.ndarray, n: int) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if n < 0:
            return self.power(self.inverse(x), -n)
        result = np.broadcast_to(self.identity(), x.shape).copy()
        base = x
        while n:
            if n & 1:
                result = self.compose(base, result)
            base = self.compose(base, base)
            n >>= 1
        return result

    def accumulate(self, values: np.ndarray) -> np.ndarray:
        """Prefix products along axis 0: out[j] = values[j]...values[0]."""
        values = np.asarray(values, dtype=float)
        out = np.empty_like(values)
        acc = np.broadcast_to(self.identity(), values.shape[1:]).copy()
        for j in range(len(values)):
            acc = self.compose(values[j], acc)
            out[j] = acc
        return out

    def in_span(self, x: np.ndarray) -> bool:
        x = np.atleast_2d(x)
        return all(
            bool(np.all((x[:, i] >= lo) & (x[:, i] < hi))) for i, (lo, hi) in enumerate(self.spans)
        )

    def eps_net(self, a: float) -> "EpsilonNet":
        """Net of radius a/10: every element lies within a/10 of some net point."""
        if not a > 0:
            raise ValueError(f"net radius parameter must be positive, got {a}")
        per_axis = max(1, math.ceil(5.0 / a - 1e-9))
        elements = self.grid(per_axis)
        logger.debug("eps_net %s a=%s -> m=%d", self.descriptor, a, len(elements))
        return EpsilonNet(radius=a / 10.0, elements=elements, group=self)


class Torus(CompactGroup):
    """T^d with coordinates in [0, 1) and the max of circle distances."""

    def __init__(self, d: int = 1):
        if d < 1:
            raise GroupDescriptorError(f"torus dimension must be >= 1, got {d}")
        self.d = d

    @property
    def dim(self) -> int:
        return self.d

    @property
    def spans(self) -> List[Tuple[float, float]]:
        return [(0.0, 1.0)] * self.d

    @property
    def descriptor(self) -> str:
        return f"torus:{self.d}"

    @property
    def diameter(self) -> float:
        return 0.5

    @property
    def char_arity(self) -> int:
        return self.d

    def canonical(self, x: np.ndarray) -> np.ndarray:
        out = np.mod(np.asarray(x, dtype=float), 1.0)
        return np.where(out >= 1.0, 0.0, out)

    def compose(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return self.canonical(np.asarray(x) + np.asarray(y))

    def inverse(self, x: np.ndarray) -> np.ndarray:
        return self.canonical(-np.asarray(x))

    def distance(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.max(circle_distance(x, y), axis=-1)

    def power(self, x: np.ndarray, n: int) -> np.ndarray:
        return self.canonical(n * np.asarray(x, dtype=float))

    def accumulate(self, values: np.ndarray) -> np.ndarray:
        return self.canonical(np.cumsum(values, axis=0))

    def haar_sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.random((size, self.d))

    def grid(self, per_axis: int) -> np.ndarray:
        axis = _axis_grid(per_axis, (0.0, 1.0)).reshape(-1, 1)
        out = axis
        for _ in range(self.d - 1):
            out = _cartesian(out, axis)
        return out

    def characters(self, limit: int) -> List[Character]:
        ranges = [range(limit)] * self.d
        return [tuple(int(v) for v in freq) for freq in np.ndindex(*[len(r) for r in ranges])]

    def character_values(self, char: Character, x: np.ndarray) -> np.ndarray:
        freq = np.asarray(char, dtype=float)
        return np.exp(2j * np.pi * (np.asarray(x) @ freq))

    def conjugate_character(self, char: Character) -> Character:
        return tuple(-c for c in char)


class Cyclic(CompactGroup):
    """Z/m with residues 0..m-1 stored as floats and the discrete metric."""

    finite = True

    def __init__(self, m: int):
        if m < 1:
            raise GroupDescriptorError(f"cyclic order must be >= 1, got {m}")
        self.m = m

    @property
    def order(self) -> int:
        return self.m

    @property
    def dim(self) -> int:
        return 1

    @property
    def spans(self) -> List[Tuple[float, float]]:
        return [(0.0, float(self.m))]

    @property
    def descriptor(self) -> str:
        return f"cyclic:{self.m}"

    @property
    def discrete_axes(self) -> List[bool]:
        return [True]

    @property
    def diameter(self) -> float:
        return 1.0 if self.m > 1 else 0.0

    def canonical(self, x: np.ndarray) -> np.ndarray:
        return np.mod(np.floor(np.asarray(x, dtype=float) + 1e-9), self.m)

    def compose(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.mod(np.asarray(x) + np.asarray(y), self.m)

    def inverse(self, x: np.ndarray) -> np.ndarray:
        return np.mod(-np.asarray(x), self.m)

    def distance(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        diff = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
        return (np.max(diff, axis=-1) > 0.5).astype(float)

    def power(self, x: np.ndarray, n: int) -> np.ndarray:
        return np.mod(n * np.asarray(x, dtype=float), self.m)

    def accumulate(self, values: np.ndarray) -> np.ndarray:
        return np.mod(np.cumsum(values, axis=0), self.m)

    def haar_sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.integers(0, self.m, size=(size, 1)).astype(float)

    def grid(self, per_axis: int) -> np.ndarray:
        return np.arange(self.m, dtype=float).reshape(-1, 1)

    def characters(self, limit: int) -> List[Character]:
        return [(j,) for j in range(self.m)]

    def character_values(self, char: Character, x: np.ndarray) -> np.ndarray:
        return np.exp(2j * np.pi * char[0] * np.asarray(x)[..., 0] / self.m)

    def conjugate_character(self, char: Character) -> Character:
        return ((-char[0]) % self.m,)


class OrthogonalPlane(CompactGroup):
    """O(2) as (theta, s): rotation by theta turns followed by reflection when s = 1.

    (t1, s1)(t2, s2) = (t1 + (-1)^s1 t2, s1 xor s2). Elements with different s are at
    distance 1; otherwise the distance is the circle distance of the angles.
    """

    abelian = False

    @property
    def dim(self) -> int:
        return 2

    @property
    def spans(self) -> List[Tuple[float, float]]:
        return [(0.0, 1.0), (0.0, 2.0)]

    @property
    def descriptor(self) -> str:
        return "o2"

    @property
    def discrete_axes(self) -> List[bool]:
        return [False, True]

    @property
    def diameter(self) -> float:
        return 1.0

    def canonical(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        theta = np.mod(x[..., 0], 1.0)
        theta = np.where(theta >= 1.0, 0.0, theta)
        s = np.mod(np.floor(x[..., 1] + 1e-9), 2.0)
        return np.stack([theta, s], axis=-1)

    def compose(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        sign = 1.0 - 2.0 * x[..., 1]
        theta = np.mod(x[..., 0] + sign * y[..., 0], 1.0)
        theta = np.where(theta >= 1.0, 0.0, theta)
        s = np.mod(x[..., 1] + y[..., 1], 2.0)
        return np.stack(np.broadcast_arrays(theta, s), axis=-1)

    def inverse(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        theta = np.where(x[..., 1] > 0.5, x[..., 0], np.mod(-x[..., 0], 1.0))
        theta = np.where(theta >= 1.0, 0.0, theta)
        return np.stack([theta, x[..., 1]], axis=-1)

    def distance(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        same = np.abs(x[..., 1] - y[..., 1]) < 0.5
        return np.where(same, circle_distance(x[..., 0], y[..., 0]), 1.0)

    def haar_sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.stack([rng.random(size), rng.integers(0, 2, size=size).astype(float)], axis=-1)

    def grid(self, per_axis: int) -> np.ndarray:
        theta = _axis_grid(per_axis, (0.0, 1.0)).reshape(-1, 1)
        return _cartesian(np.array([[0.0], [1.0]]), theta)[:, ::-1].copy()

    def characters(self, limit: int) -> List[Character]:
        # one-dimensional characters only: trivial and determinant
        return [(0,), (1,)]

    def character_values(self, char: Character, x: np.ndarray) -> np.ndarray:
        s = np.asarray(x, dtype=float)[..., 1]
        return np.where(char[0] % 2 == 1, 1.0 - 2.0 * s, 1.0).astype(complex)

    def conjugate_character(self, char: Character) -> Character:
        return char


class Product(CompactGroup):
    """Direct product of factor groups; metric is the max of factor metrics."""

    def __init__(self, factors: Sequence[CompactGroup]):
        if not factors:
            raise GroupDescriptorError("product needs at least one factor")
        self.factors = list(factors)
        self.abelian = all(f.abelian for f in self.factors)
        self.finite = all(f.finite for f in self.factors)
        bounds = np.cumsum([0] + [f.dim for f in self.factors])
        self._slices = [slice(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]
        cb = np.cumsum([0] + [f.char_arity for f in self.factors])
        self._char_slices = [slice(int(a), int(b)) for a, b in zip(cb[:-1], cb[1:])]

    @property
    def order(self) -> int:
        return int(np.prod([f.order for f in self.factors]))

    @property
    def dim(self) -> int:
        return sum(f.dim for f in self.factors)

    @property
    def spans(self) -> List[Tuple[float, float]]:
        return [span for f in self.factors for span in f.spans]

    @property
    def descriptor(self) -> str:
        return "product(" + ",".join(f.descriptor for f in self.factors) + ")"

    @property
    def discrete_axes(self) -> List[bool]:
        return [flag for f in self.factors for flag in f.discrete_axes]

    @property
    def diameter(self) -> float:
        return max(f.diameter for f in self.factors)

    @property
    def char_arity(self) -> int:
        return sum(f.char_arity for f in self.factors)

    def split(self, x: np.ndarray) -> List[np.ndarray]:
        x = np.asarray(x, dtype=float)
        return [x[..., s] for s in self._slices]

    def _map(self, fn_name: str, *args: np.ndarray) -> np.ndarray:
        parts = [self.split(a) for a in args]
        out = [getattr(f, fn_name)(*(p[i] for p in parts)) for i, f in enumerate(self.factors)]
        return np.concatenate(np.broadcast_arrays(*out), axis=-1)

    def canonical(self, x: np.ndarray) -> np.ndarray:
        return self._map("canonical", x)

    def compose(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return self._map("compose", x, y)

    def inverse(self, x: np.ndarray) -> np.ndarray:
        return self._map("inverse", x)

    def distance(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        xs, ys = self.split(x), self.split(y)
        dists = [f.distance(a, b) for f, a, b in zip(self.factors, xs, ys)]
        return np.max(np.stack(np.broadcast_arrays(*dists), axis=-1), axis=-1)

    def accumulate(self, values: np.ndarray) -> np.ndarray:
        parts = self.split(values)
        return np.concatenate([f.accumulate(p) for f, p in zip(self.factors, parts)], axis=-1)

    def power(self, x: np.ndarray, n: int) -> np.ndarray:
        parts = self.split(x)
        return np.concatenate([f.power(p, n) for f, p in zip(self.factors, parts)], axis=-1)

    def haar_sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.concatenate([f.haar_sample(rng, size) for f in self.factors], axis=-1)

    def grid(self, per_axis: int) -> np.ndarray:
        out = self.factors[0].grid(per_axis)
        for f in self.factors[1:]:
            out = _cartesian(out, f.grid(per_axis))
        return out

    def characters(self, limit: int) -> List[Character]:
        chars: List[Character] = [()]
        for f in self.factors:
            chars = [c + fc for c in chars for fc in f.characters(limit)]
        return chars

    def character_values(self, char: Character, x: np.ndarray) -> np.ndarray:
        parts = self.split(x)
        out = np.ones(np.asarray(x).shape[:-1], dtype=complex)
        for f, s, p in zip(self.factors, self._char_slices, parts):
            out = out * f.character_values(tuple(char[s]), p)
        return out

    def conjugate_character(self, char: Character) -> Character:
        out: Character = ()
        for f, s in zip(self.factors, self._char_slices):
            out = out + f.conjugate_character(tuple(char[s]))
        return out


def power_group(group: CompactGroup, n: int) -> CompactGroup:
    """G^n as a product group; G itself when n = 1."""
    if n < 1:
        raise GroupDescriptorError(f"power must be >= 1, got {n}")
    if n == 1:
        return group
    return Product([group] * n)


def is_trivial_character(char: Character) -> bool:
    return all(c == 0 for c in char)


@dataclass
class EpsilonNet:
    """Finite set F with the whole group covered by a/10-balls around its points."""

    radius: float
    elements: np.ndarray
    group: CompactGroup

    @property
    def m(self) -> int:
        return len(self.elements)

    def nearest_distance(self, samples: np.ndarray) -> np.ndarray:
        samples = np.atleast_2d(samples)
        best = np.full(len(samples), np.inf)
        for f in self.elements:
            best = np.minimum(best, self.group.distance(samples, f))
        return best

    def covers(self, samples: np.ndarray) -> np.ndarray:
        return self.nearest_distance(samples) <= self.radius + ELEMENT_TOL


def eps_net(group: CompactGroup, a: float) -> EpsilonNet:
    return group.eps_net(a)


def haar_sample(group: CompactGroup, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    return group.haar_sample(rng, size)


def dense_subset(group: CompactGroup, depth: int) -> np.ndarray:
    """Finite stage of the countable dense set: dyadic grid of denominator 2**depth."""
    return group.grid(2**depth)


def _lex_less(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    less = np.zeros(a.shape[:-1], dtype=bool)
    decided = np.zeros(a.shape[:-1], dtype=bool)
    for c in range(a.shape[-1]):
        lt = a[..., c] < b[..., c] - ELEMENT_TOL
        gt = a[..., c] > b[..., c] + ELEMENT_TOL
        less |= ~decided & lt
        decided |= lt | gt
    return less


class HomogeneousSpace:
    """K/H for a finite subgroup H, or for a coordinate sub-torus H of a torus K.

    Cosets are stored through canonical representatives: the lexicographically least
    element of kH for finite H, and k with the H-axes zeroed for a sub-torus.
    """

    def __init__(
        self,
        group: CompactGroup,
        elements: Optional[np.ndarray] = None,
        axes: Optional[Sequence[int]] = None,
    ):
        self.group = group
        self.axes: Tuple[int, ...] = tuple(axes) if axes else ()
        if self.axes:
            if not isinstance(group, Torus):
                raise UnsupportedSubgroup("sub-torus subgroups need a torus parent group")
            if any(a < 0 or a >= group.dim for a in self.axes):
                raise GroupDescriptorError(f"sub-torus axes {self.axes} out of range")
            self.elements = None
        else:
            if elements is None:
                elements = group.identity().reshape(1, -1)
            elements = group.canonical(np.atleast_2d(np.asarray(elements, dtype=float)))
            self.elements = elements
            self._check_subgroup()

    def _check_subgroup(self) -> None:
        els = self.elements
        if not np.any(self.group.is_identity(els)):
            raise GroupDescriptorError("subgroup must contain the identity")
        for h in els:
            prods = self.group.compose(h, els)
            for p in prods:
                if np.min(self.group.distance(els, p)) > 1e-9:
                    raise GroupDescriptorError("subgroup elements are not closed under composition")

    @property
    def is_finite(self) -> bool:
        return self.elements is not None

    @property
    def is_trivial(self) -> bool:
        return self.is_finite and len(self.elements) == 1

    @property
    def order(self) -> Optional[int]:
        return len(self.elements) if self.is_finite else None

    @property
    def spans(self) -> List[Tuple[float, float]]:
        return self.group.spans

    @property
    def dim(self) -> int:
        return self.group.dim

    def representative(self, k: np.ndarray) -> np.ndarray:
        k = self.group.canonical(np.asarray(k, dtype=float))
        if self.axes:
            out = k.copy()
            out[..., list(self.axes)] = 0.0
            return out
        best = k
        for h in self.elements:
            cand = self.group.compose(k, h)
            best = np.where(_lex_less(cand, best)[..., None], cand, best)
        return best

    def act(self, k: np.ndarray, coset: np.ndarray) -> np.ndarray:
        """Left action k . (xH) = (kx)H."""
        return self.representative(self.group.compose(k, coset))

    def haar(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.representative(self.group.haar_sample(rng, size))

    def quotient_distance(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Hausdorff distance of the cosets xH and yH: min over h of d(x, yh)."""
        if self.axes:
            keep = [i for i in range(self.group.dim) if i not in self.axes]
            if not keep:
                return np.zeros(np.asarray(x).shape[:-1])
            return np.max(circle_distance(np.asarray(x)[..., keep], np.asarray(y)[..., keep]), axis=-1)
        best = None
        for h in self.elements:
            d = self.group.distance(x, self.group.compose(y, h))
            best = d if best is None else np.minimum(best, d)
        return best

    def distance_to_subgroup(self, k: np.ndarray) -> np.ndarray:
        return self.quotient_distance(k, self.group.identity())

    def neighborhood_measure(self, eta: float, samples: int = 1 << 16) -> float:
        """Haar measure of {k : d_K(k, H) <= eta}."""
        g = self.group
        if self.axes:
            codim = g.dim - len(self.axes)
            return float(min(1.0, 2.0 * eta) ** codim)
        els = self.elements
        sep = np.inf
        for i in range(len(els)):
            for j in range(i + 1, len(els)):
                sep = min(sep, float(g.distance(els[i], els[j])))
        if isinstance(g, Torus) and 2 * eta < sep:
            return float(len(els) * min(1.0, 2.0 * eta) ** g.dim)
        if isinstance(g, OrthogonalPlane) and 2 * eta < sep and eta < 1.0:
            return float(len(els) * min(1.0, 2.0 * eta) / 2.0)
        if isinstance(g, Cyclic):
            return 1.0 if eta >= 1.0 else len(els) / g.m
        rng = np.random.default_rng(0)
        pts = g.haar_sample(rng, samples)
        return float(np.mean(self.distance_to_subgroup(pts) <= eta))

    def conjugate_intersection(self, k0: np.ndarray) -> "HomogeneousSpace":
        """The subgroup k0 H k0^-1 intersected with H, as a homogeneous space of K."""
        g = self.group
        if g.abelian:
            return self
        if not self.is_finite:
            raise UnsupportedSubgroup(
                f"cannot intersect a sub-torus with its conjugate inside non-abelian {g.descriptor}"
            )
        k0 = np.asarray(k0, dtype=float)
        k0_inv = g.inverse(k0)
        kept = []
        for h in self.elements:
            conj = g.compose(g.compose(k0, h), k0_inv)
            if np.min(g.distance(self.elements, conj)) < ELEMENT_TOL:
                kept.append(h)
        return HomogeneousSpace(g, np.asarray(kept))


@dataclass
class DensityReport:
    """Covering radius of the orbit {k, k^2, ..., k^n_max}."""

    covering_radius: float
    orbit_size: int
    n_max: int
    eps: float

    @property
    def generator(self) -> bool:
        return self.covering_radius == 0.0 or self.covering_radius < self.eps


def _orbit(group: CompactGroup, k: np.ndarray, n_max: int) -> np.ndarray:
    k = np.asarray(k, dtype=float).reshape(-1)
    if isinstance(group, (Torus, Cyclic)):
        n = np.arange(1, n_max + 1, dtype=float).reshape(-1, 1)
        return group.canonical(n * k)
    return group.accumulate(np.broadcast_to(k, (n_max, group.dim)))


def generator_density_scan(
    group: CompactGroup, k: np.ndarray, n_max: int, eps: float
) -> DensityReport:
    """Measure how densely the cyclic orbit of ``k`` fills the group."""
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    orbit = _orbit(group, k, n_max)
    unique = np.unique(np.round(orbit, 13), axis=0)
    if isinstance(group, Torus) and group.dim == 1:
        pts = np.sort(unique[:, 0])
        gaps = np.diff(np.concatenate([pts, [pts[0] + 1.0]]))
        radius = float(np.max(gaps) / 2.0)
    else:
        per_axis = max(2, math.ceil(2.0 / eps))
        grid = group.grid(per_axis)
        if isinstance(group, Torus):
            tree = cKDTree(np.mod(unique, 1.0), boxsize=1.0)
            dist, _ = tree.query(grid, p=np.inf)
            radius = float(np.max(dist))
        else:
            radius = 0.0
            for start in range(0, len(grid), 4096):
                chunk = grid[start : start + 4096]
                best = np.full(len(chunk), np.inf)
                for u in unique:
                    best = np.minimum(best, group.distance(chunk, u))
                radius = max(radius, float(np.max(best)))
    report = DensityReport(
        covering_radius=radius, orbit_size=len(unique), n_max=n_max, eps=eps
    )
    logger.info(
        "generator scan %s: radius=%.3g orbit=%d generator=%s",
        group.descriptor,
        radius,
        report.orbit_size,
        report.generator,
    )
    return report


def _split_top_level(text: str) -> List[str]:
    parts, depth, current = [], 0, ""
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append(current)
            current = ""
        else:
            current += ch
    parts.append(current)
    return [p.strip() for p in parts if p.strip()]


def parse_group(descriptor: str) -> CompactGroup:
    """Parse "torus:d", "cyclic:m", "o2" or "product(a,b,...)"."""
    text = descriptor.strip().lower()
    if text == "o2":
        return OrthogonalPlane()
    match = re.fullmatch(r"(torus|cyclic):(\d+)", text)
    if match:
        kind, size = match.group(1), int(match.group(2))
        return Torus(size) if kind == "torus" else Cyclic(size)
    match = re.fullmatch(r"product\((.*)\)", text)
    if match:
        return Product([parse_group(p) for p in _split_top_level(match.group(1))])
    raise GroupDescriptorError(f"unknown group descriptor: {descriptor!r}")


def parse_element(group: CompactGroup, text: str) -> np.ndarray:
    """Parse "1/3" or "0.25,1" into canonical coordinates of ``group``."""
    try:
        coords = [float(Fraction(part.strip())) for part in str(text).split(",")]
    except (ValueError, ZeroDivisionError) as exc:
        raise GroupDescriptorError(f"cannot parse element {text!r}") from exc
    if len(coords) != group.dim:
        raise GroupDescriptorError(
            f"element {text!r} has {len(coords)} coordinates, {group.descriptor} needs {group.dim}"
        )
    return group.canonical(np.asarray(coords))


def format_element(x: np.ndarray) -> str:
    return ";".join(format(float(v), ".12g") for v in np.asarray(x).reshape(-1))
