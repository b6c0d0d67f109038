"""Measure-preserving systems: interval-exchange bases, skew products, compact extensions.

Every system maps point arrays of shape ``(..., point_dim)``. The base systems are
interval exchanges of [0, 1), so images of finite unions of intervals are exact.
"""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..utils.contfrac import circle_norm, denominators, is_rational
from ..utils.intervals import SLIVER, IntervalSet
from .cocycles import Cocycle, DomainMismatch, TupleCocycle, as_points
from .groups import CompactGroup, HomogeneousSpace

logger = logging.getLogger(__name__)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
SQRT2 = math.sqrt(2.0) - 1.0
DEFAULT_ODOMETER_DEPTH = 20
MAX_ODOMETER_DEPTH = 52
MAX_DENOMINATOR = 2_000_000
ORBIT_CHUNK = 4096


class RationalAngleError(ValueError):
    """Raised for rotation angles that are rational or outside (0, 1)."""


class SystemDescriptorError(ValueError):
    """Raised when a system descriptor string cannot be parsed."""


class ComponentError(ValueError):
    """Raised when a component or tuple system is built from inconsistent inputs."""


class System(ABC):
    """An invertible measure-preserving map on a product of coordinate spans."""

    point_dim: int = 1

    @property
    @abstractmethod
    def spans(self) -> List[Tuple[float, float]]: ...

    @property
    @abstractmethod
    def descriptor(self) -> str: ...

    @abstractmethod
    def forward_points(self, points: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def backward_points(self, points: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def sample_points(self, rng: np.random.Generator, size: int) -> np.ndarray: ...

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.descriptor})"

    def orbit_points(self, points: np.ndarray, n: int) -> np.ndarray:
        """Stack of T^j(points) for j = 0..n-1, shape (n, ..., point_dim)."""
        points = as_points(points, self.point_dim)
        out = np.empty((n,) + points.shape)
        current = points
        for j in range(n):
            out[j] = current
            current = self.forward_points(current)
        return out

    def iterate_points(self, points: np.ndarray, n: int) -> np.ndarray:
        current = as_points(points, self.point_dim)
        step = self.forward_points if n >= 0 else self.backward_points
        for _ in range(abs(n)):
            current = step(current)
        return current


class BaseSystem(System):
    """Interval exchange of [0, 1) given by pieces [lo, hi) translated by ``shift``."""

    point_dim = 1

    def __init__(self, lo: Sequence[float], hi: Sequence[float], shift: Sequence[float]):
        self.piece_lo = np.asarray(lo, dtype=float)
        self.piece_hi = np.asarray(hi, dtype=float)
        self.piece_shift = np.asarray(shift, dtype=float)

    @property
    def spans(self) -> List[Tuple[float, float]]:
        return [(0.0, 1.0)]

    @property
    def cuts(self) -> np.ndarray:
        """Interior points where T is discontinuous."""
        return self.piece_lo[1:]

    @property
    def inverse_cuts(self) -> np.ndarray:
        """Interior points where T^-1 is discontinuous."""
        images = np.mod(self.piece_lo + self.piece_shift, 1.0)
        return np.sort(images[images > SLIVER])

    @abstractmethod
    def iterate(self, y: np.ndarray | float, n: np.ndarray | int) -> np.ndarray:
        """T^n(y) in closed form; ``n`` broadcasts against ``y`` and may be negative."""

    @abstractmethod
    def candidate_base_lengths(self, height: int) -> List[float]:
        """Tower base lengths to try for a tower of the given height, longest first."""

    def forward(self, y: np.ndarray | float) -> np.ndarray:
        return self.iterate(y, 1)

    def backward(self, y: np.ndarray | float) -> np.ndarray:
        return self.iterate(y, -1)

    def forward_points(self, points: np.ndarray) -> np.ndarray:
        points = as_points(points, 1)
        return self.iterate(points, 1)

    def backward_points(self, points: np.ndarray) -> np.ndarray:
        points = as_points(points, 1)
        return self.iterate(points, -1)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.random(size)

    def sample_points(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.sample(rng, size)[:, None]

    def orbit(self, y: np.ndarray | float, n: int) -> np.ndarray:
        """T^j(y) for j = 0..n-1, stacked on a new leading axis."""
        y = np.asarray(y, dtype=float)
        steps = np.arange(n).reshape((n,) + (1,) * y.ndim)
        return self.iterate(y[None, ...], steps)

    def orbit_points(self, points: np.ndarray, n: int) -> np.ndarray:
        points = as_points(points, 1)
        return self.orbit(points[..., 0], n)[..., None]

    def iterate_points(self, points: np.ndarray, n: int) -> np.ndarray:
        return self.iterate(as_points(points, 1), n)

    def discontinuities(self, n: int) -> np.ndarray:
        """Interior points where T^n is discontinuous, sorted."""
        if n == 0:
            return np.empty(0)
        cuts = self.cuts if n > 0 else self.inverse_cuts
        sign = -1 if n > 0 else 1
        steps = np.arange(abs(n))[:, None] * sign
        pts = self.iterate(cuts[None, :], steps).reshape(-1)
        pts = pts[(pts > SLIVER) & (pts < 1.0 - SLIVER)]
        return np.unique(pts)

    def image_pairs(self, lo: np.ndarray, hi: np.ndarray, n: int) -> List[Tuple[float, float]]:
        """Pieces of T^n applied to the union of [lo_i, hi_i)."""
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if n == 0:
            return [(float(a), float(b)) for a, b in zip(lo, hi) if b - a > SLIVER]
        pieces = IntervalSet.from_pairs(zip(lo, hi)).split_at(self.discontinuities(n))
        if not pieces:
            return []
        arr = np.asarray(pieces, dtype=float)
        starts = self.iterate(arr[:, 0], n)
        widths = arr[:, 1] - arr[:, 0]
        # a left endpoint mapped to 0 can round to just below 1
        starts = np.where(starts + widths > 1.0 + 1e-9, 0.0, starts)
        ends = np.minimum(starts + widths, 1.0)
        return [(float(a), float(b)) for a, b in zip(starts, ends) if b - a > SLIVER]

    def image(self, area: IntervalSet, n: int = 1) -> IntervalSet:
        return IntervalSet.from_pairs(self.image_pairs(area.lo, area.hi, n))


class Rotation(BaseSystem):
    """y -> y + alpha mod 1, a two-interval exchange."""

    def __init__(self, alpha: float, max_denominator: int = MAX_DENOMINATOR):
        alpha = float(alpha)
        if not 0.0 < alpha < 1.0:
            raise RationalAngleError(f"rotation angle must lie in (0, 1), got {alpha}")
        if is_rational(alpha):
            raise RationalAngleError(f"rotation angle {alpha} is rational")
        self.alpha = alpha
        self._alpha_hi = math.floor(alpha * 2**26) / 2**26
        self._alpha_lo = alpha - self._alpha_hi
        self.max_denominator = max_denominator
        super().__init__([0.0, 1.0 - alpha], [1.0 - alpha, 1.0], [alpha, alpha - 1.0])

    @property
    def descriptor(self) -> str:
        if self.alpha == GOLDEN:
            return "rotation:golden"
        if self.alpha == SQRT2:
            return "rotation:sqrt2"
        return f"rotation:{self.alpha!r}"

    @property
    def cuts(self) -> np.ndarray:
        return np.array([1.0 - self.alpha])

    @property
    def inverse_cuts(self) -> np.ndarray:
        return np.array([self.alpha])

    def iterate(self, y: np.ndarray | float, n: np.ndarray | int) -> np.ndarray:
        n = np.asarray(n, dtype=np.int64)
        # n * alpha_hi is exact for |n| < 2**26
        shift = np.mod(np.mod(n * self._alpha_hi, 1.0) + n * self._alpha_lo, 1.0)
        out = np.mod(np.asarray(y, dtype=float) + shift, 1.0)
        return np.where(out >= 1.0, 0.0, out)

    def candidate_base_lengths(self, height: int) -> List[float]:
        lengths = []
        for q in denominators(self.alpha, self.max_denominator):
            length = float(circle_norm(q * self.alpha))
            if length > SLIVER and (not lengths or length < lengths[-1]):
                lengths.append(length)
        return lengths


def _bit_reverse(values: np.ndarray, depth: int) -> np.ndarray:
    values = values.astype(np.int64)
    out = np.zeros_like(values)
    for _ in range(depth):
        out = (out << 1) | (values & 1)
        values = values >> 1
    return out


class Odometer(BaseSystem):
    """Dyadic adding machine truncated to ``depth`` binary digits, as an interval exchange.

    The binary digits of y are the odometer sequence; adding one carries into the next
    digit, and the all-ones block of length ``depth`` wraps to zero.
    """

    def __init__(self, depth: int = DEFAULT_ODOMETER_DEPTH):
        if not 1 <= depth <= MAX_ODOMETER_DEPTH:
            raise SystemDescriptorError(
                f"odometer depth must be in 1..{MAX_ODOMETER_DEPTH}, got {depth}"
            )
        self.depth = depth
        lo, hi, shift = [], [], []
        for j in range(depth):
            a, b = 1.0 - 2.0**-j, 1.0 - 2.0 ** -(j + 1)
            lo.append(a)
            hi.append(b)
            shift.append(2.0 ** -(j + 1) - a)
        lo.append(1.0 - 2.0**-depth)
        hi.append(1.0)
        shift.append(-(1.0 - 2.0**-depth))
        super().__init__(lo, hi, shift)

    @property
    def descriptor(self) -> str:
        return f"odometer:{self.depth}"

    @property
    def cells(self) -> int:
        return 1 << self.depth

    def iterate(self, y: np.ndarray | float, n: np.ndarray | int) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        n = np.asarray(n, dtype=np.int64)
        scaled = y * self.cells
        digits = np.floor(scaled).astype(np.int64)
        digits = np.clip(digits, 0, self.cells - 1)
        rest = scaled - digits
        counter = _bit_reverse(digits, self.depth)
        counter = np.mod(counter + n, self.cells)
        return (_bit_reverse(counter, self.depth) + rest) / self.cells

    def candidate_base_lengths(self, height: int) -> List[float]:
        start = max(0, math.ceil(math.log2(max(height, 1))))
        return [2.0**-k for k in range(start, self.depth + 1)]


def make_rotation(alpha: float) -> Rotation:
    return Rotation(alpha)


def parse_system(descriptor: str) -> BaseSystem:
    """Parse "rotation:golden", "rotation:sqrt2", "rotation:<float>" or "odometer[:<D>]"."""
    kind, _, arg = descriptor.strip().partition(":")
    kind = kind.strip().lower()
    arg = arg.strip()
    if kind == "rotation":
        if arg == "golden":
            return Rotation(GOLDEN)
        if arg == "sqrt2":
            return Rotation(SQRT2)
        try:
            return make_rotation(float(arg))
        except ValueError as exc:
            if isinstance(exc, RationalAngleError):
                raise
            raise SystemDescriptorError(f"bad rotation angle in {descriptor!r}") from exc
    if kind == "odometer":
        if not arg:
            return Odometer()
        try:
            return Odometer(int(arg))
        except ValueError as exc:
            if isinstance(exc, SystemDescriptorError):
                raise
            raise SystemDescriptorError(f"bad odometer depth in {descriptor!r}") from exc
    raise SystemDescriptorError(f"unknown system descriptor: {descriptor!r}")


class SkewProductSystem(System):
    """T_phi(y, g) = (Ty, phi(y) g) on Y x G."""

    def __init__(self, base: System, group: CompactGroup, cocycle: Cocycle):
        if cocycle.group != group:
            raise DomainMismatch(f"cocycle takes values in {cocycle.group}, fiber is {group}")
        if cocycle.domain_dim != base.point_dim:
            raise DomainMismatch(
                f"cocycle is defined on {cocycle.domain_dim} coordinates, base has {base.point_dim}"
            )
        self.base = base
        self.group = group
        self.cocycle = cocycle
        self.point_dim = base.point_dim + group.dim

    @property
    def spans(self) -> List[Tuple[float, float]]:
        return self.base.spans + self.group.spans

    @property
    def descriptor(self) -> str:
        return f"skew({self.base.descriptor}; {self.group.descriptor})"

    def split(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        d = self.base.point_dim
        return points[..., :d], points[..., d:]

    def forward_points(self, points: np.ndarray) -> np.ndarray:
        y, g = self.split(np.asarray(points, dtype=float))
        fiber = self.group.compose(self.cocycle.evaluate(y), g)
        return np.concatenate([self.base.forward_points(y), fiber], axis=-1)

    def backward_points(self, points: np.ndarray) -> np.ndarray:
        y, g = self.split(np.asarray(points, dtype=float))
        prev = self.base.backward_points(y)
        fiber = self.group.compose(self.group.inverse(self.cocycle.evaluate(prev)), g)
        return np.concatenate([prev, fiber], axis=-1)

    def sample_points(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.concatenate(
            [self.base.sample_points(rng, size), self.group.haar_sample(rng, size)], axis=-1
        )

    def orbit_points(self, points: np.ndarray, n: int) -> np.ndarray:
        """Base orbit in closed form, fiber by prefix products of cocycle values."""
        points = np.asarray(points, dtype=float)
        y, g = self.split(points)
        out = np.empty((n,) + points.shape)
        done = 0
        while done < n:
            m = min(ORBIT_CHUNK, n - done)
            ys = self.base.orbit_points(y, m)
            values = self.cocycle.evaluate(ys)
            prefix = self.group.accumulate(values)
            out[done, ..., : y.shape[-1]] = ys[0]
            out[done, ..., y.shape[-1] :] = g
            if m > 1:
                out[done + 1 : done + m] = np.concatenate(
                    [ys[1:], self.group.compose(prefix[:-1], g[None, ...])], axis=-1
                )
            y = self.base.forward_points(ys[-1])
            g = self.group.compose(prefix[-1], g)
            done += m
        return out

    def right_translate(self, points: np.ndarray, k: np.ndarray) -> np.ndarray:
        y, g = self.split(np.asarray(points, dtype=float))
        return np.concatenate([y, self.group.compose(g, np.asarray(k, dtype=float))], axis=-1)


def make_skew_product(base: System, group: CompactGroup, phi: Cocycle) -> SkewProductSystem:
    return SkewProductSystem(base, group, phi)


@dataclass
class FiberSpec:
    """Rokhlin cocycle S on the fiber space V.

    ``point`` is the one-point space; ``torus-identity`` is T^dim with S = id;
    ``torus-rotation`` is T^dim with S_{(z,kH)} v = v + s(z, kH).
    """

    kind: str = "point"
    dim: int = 0
    rotation: Optional[Cocycle] = None

    def __post_init__(self) -> None:
        if self.kind == "point":
            self.dim = 0
        elif self.kind in ("torus-identity", "torus-rotation"):
            self.dim = max(self.dim, 1)
            if self.kind == "torus-rotation" and self.rotation is None:
                raise ComponentError("torus-rotation fibers need a rotation cocycle")
        else:
            raise ComponentError(f"unknown fiber kind: {self.kind!r}")

    @property
    def spans(self) -> List[Tuple[float, float]]:
        return [(0.0, 1.0)] * self.dim

    def _shift(self, index_points: np.ndarray) -> np.ndarray:
        return self.rotation.evaluate(index_points)[..., : self.dim]

    def apply(self, index_points: np.ndarray, v: np.ndarray) -> np.ndarray:
        if self.kind != "torus-rotation":
            return v
        return np.mod(v + self._shift(index_points), 1.0)

    def apply_inverse(self, index_points: np.ndarray, v: np.ndarray) -> np.ndarray:
        if self.kind != "torus-rotation":
            return v
        return np.mod(v - self._shift(index_points), 1.0)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.dim == 0:
            return np.empty((size, 0))
        return rng.random((size, self.dim))


class HomogeneousExtension(System):
    """X = Z x_gamma K/H x_S V with T(z, kH, v) = (Tz, gamma(z) kH, S_{(z,kH)} v)."""

    def __init__(
        self,
        base: BaseSystem,
        space: HomogeneousSpace,
        gamma: Cocycle,
        fiber: Optional[FiberSpec] = None,
    ):
        if gamma.group != space.group:
            raise ComponentError(f"gamma takes values in {gamma.group}, not in {space.group}")
        if gamma.domain_dim != base.point_dim:
            raise DomainMismatch("gamma must be defined on the base system")
        self.base = base
        self.space = space
        self.gamma = gamma
        self.fiber = fiber or FiberSpec()
        self.kdim = space.dim
        self.point_dim = base.point_dim + space.dim + self.fiber.dim

    @property
    def spans(self) -> List[Tuple[float, float]]:
        return self.base.spans + self.space.spans + self.fiber.spans

    @property
    def descriptor(self) -> str:
        return f"extension({self.base.descriptor}; {self.space.group.descriptor}; {self.fiber.kind})"

    def split(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return points[..., :1], points[..., 1 : 1 + self.kdim], points[..., 1 + self.kdim :]

    def forward_points(self, points: np.ndarray) -> np.ndarray:
        z, c, v = self.split(np.asarray(points, dtype=float))
        step = self.gamma.evaluate(z)
        v_next = self.fiber.apply(np.concatenate([z, c], axis=-1), v)
        return np.concatenate(
            [self.base.forward_points(z), self.space.act(step, c), v_next], axis=-1
        )

    def backward_points(self, points: np.ndarray) -> np.ndarray:
        z, c, v = self.split(np.asarray(points, dtype=float))
        prev = self.base.backward_points(z)
        c_prev = self.space.act(self.space.group.inverse(self.gamma.evaluate(prev)), c)
        v_prev = self.fiber.apply_inverse(np.concatenate([prev, c_prev], axis=-1), v)
        return np.concatenate([prev, c_prev, v_prev], axis=-1)

    def sample_points(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.concatenate(
            [
                self.base.sample_points(rng, size),
                self.space.haar(rng, size),
                self.fiber.sample(rng, size),
            ],
            axis=-1,
        )

    def right_translate(self, points: np.ndarray, k: np.ndarray) -> np.ndarray:
        if not self.space.is_trivial:
            raise ComponentError("right translation needs a group extension (H = {e})")
        z, c, v = self.split(np.asarray(points, dtype=float))
        c = self.space.group.compose(c, np.asarray(k, dtype=float))
        return np.concatenate([z, c, v], axis=-1)


class RelativeSquareComponent(System):
    """T_{k0} on Z x K/H x K/H x V x V, restricted to the component indexed by k0.

    Points are laid out as (z, c1, c2, v1, v2) with c1 = kH and c2 = k k0 H. The
    component is identified with L_{k0} = K/H_{k0} through (z, kH, kk0H) <-> (z, kH_{k0}).
    """

    def __init__(self, extension: HomogeneousExtension, k0: np.ndarray):
        group = extension.space.group
        k0 = np.asarray(k0, dtype=float).reshape(-1)
        if k0.shape != (group.dim,) or not group.in_span(k0):
            raise ComponentError(f"k0={k0.tolist()} is not an element of {group.descriptor}")
        self.extension = extension
        self.k0 = group.canonical(k0)
        self.space = extension.space
        self.stabilizer = self.space.conjugate_intersection(self.k0)
        self.kdim = group.dim
        self.vdim = extension.fiber.dim
        self.point_dim = 1 + 2 * self.kdim + 2 * self.vdim

    @property
    def spans(self) -> List[Tuple[float, float]]:
        ks = self.space.spans
        vs = self.extension.fiber.spans
        return self.extension.base.spans + ks + ks + vs + vs

    @property
    def descriptor(self) -> str:
        return f"component({self.extension.descriptor}; k0={self.k0.tolist()})"

    def _parts(self, points: np.ndarray):
        kd, vd = self.kdim, self.vdim
        z = points[..., :1]
        c1 = points[..., 1 : 1 + kd]
        c2 = points[..., 1 + kd : 1 + 2 * kd]
        v1 = points[..., 1 + 2 * kd : 1 + 2 * kd + vd]
        v2 = points[..., 1 + 2 * kd + vd :]
        return z, c1, c2, v1, v2

    def side(self, points: np.ndarray, i: int) -> np.ndarray:
        """The X-point of the first (i = 0) or second (i = 1) coordinate."""
        z, c1, c2, v1, v2 = self._parts(np.asarray(points, dtype=float))
        return np.concatenate([z, c1, v1] if i == 0 else [z, c2, v2], axis=-1)

    def _join(self, first: np.ndarray, second: np.ndarray) -> np.ndarray:
        kd = self.kdim
        z, c1, v1 = first[..., :1], first[..., 1 : 1 + kd], first[..., 1 + kd :]
        c2, v2 = second[..., 1 : 1 + kd], second[..., 1 + kd :]
        return np.concatenate([z, c1, c2, v1, v2], axis=-1)

    def forward_points(self, points: np.ndarray) -> np.ndarray:
        ext = self.extension
        first = ext.forward_points(self.side(points, 0))
        return self._join(first, ext.forward_points(self.side(points, 1)))

    def backward_points(self, points: np.ndarray) -> np.ndarray:
        ext = self.extension
        first = ext.backward_points(self.side(points, 0))
        return self._join(first, ext.backward_points(self.side(points, 1)))

    def lift(self, z: np.ndarray, k: np.ndarray, v1: np.ndarray, v2: np.ndarray) -> np.ndarray:
        """(z, kH, kk0H, v1, v2) for given z, k in K and fiber points."""
        group = self.space.group
        z = as_points(z, 1)
        c1 = self.space.representative(k)
        c2 = self.space.representative(group.compose(k, self.k0))
        return np.concatenate([z, c1, c2, v1, v2], axis=-1)

    def sample_points(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draws from mu_{k0} = theta x lambda_{L_{k0}} x rho x rho."""
        z = self.extension.base.sample_points(rng, size)
        k = self.space.group.haar_sample(rng, size)
        fiber = self.extension.fiber
        return self.lift(z, k, fiber.sample(rng, size), fiber.sample(rng, size))

    def correspondence(self, points: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        """(z, kH, kk0H, v1, v2) -> (z, k H_{k0}, v1, v2)."""
        z, c1, c2, v1, v2 = self._parts(np.asarray(points, dtype=float))
        group = self.space.group
        if not self.space.is_finite:
            k = c1
        else:
            k = None
            best = None
            for h in self.space.elements:
                cand = group.compose(c1, h)
                err = self.space.quotient_distance(group.compose(cand, self.k0), c2)
                if best is None:
                    k, best = cand, err
                else:
                    better = err < best - tol
                    k = np.where(better[..., None], cand, k)
                    best = np.minimum(best, err)
            if np.any(best > tol):
                raise ComponentError("point does not lie on the component of k0")
        return np.concatenate([z, self.stabilizer.representative(k), v1, v2], axis=-1)

    def quotient_action(self, points: np.ndarray) -> np.ndarray:
        """The map T_{k0} written on L_{k0}: (Tz, gamma(z) k H_{k0}, S v1, S v2)."""
        points = np.asarray(points, dtype=float)
        kd, vd = self.kdim, self.vdim
        z, k = points[..., :1], points[..., 1 : 1 + kd]
        v1, v2 = points[..., 1 + kd : 1 + kd + vd], points[..., 1 + kd + vd :]
        ext = self.extension
        group = self.space.group
        fiber = ext.fiber
        c1 = self.space.representative(k)
        c2 = self.space.representative(group.compose(k, self.k0))
        v1 = fiber.apply(np.concatenate([z, c1], axis=-1), v1)
        v2 = fiber.apply(np.concatenate([z, c2], axis=-1), v2)
        k_next = self.stabilizer.representative(group.compose(ext.gamma.evaluate(z), k))
        return np.concatenate([ext.base.forward_points(z), k_next, v1, v2], axis=-1)


def relative_square_component(
    base: BaseSystem,
    space: HomogeneousSpace,
    gamma: Cocycle,
    k0: np.ndarray,
    fiber: Optional[FiberSpec] = None,
) -> RelativeSquareComponent:
    return RelativeSquareComponent(HomogeneousExtension(base, space, gamma, fiber), k0)


class _CircleExtension:
    """A rotation seen as a T^1-extension of the one-point system: y k = y + k."""

    def right_translate(self, points: np.ndarray, k: np.ndarray) -> np.ndarray:
        return np.mod(np.asarray(points, dtype=float) + np.asarray(k, dtype=float), 1.0)


def translated_tuple_system(
    system: System,
    k_list: Sequence[np.ndarray],
    phi: Cocycle,
    group: CompactGroup,
) -> SkewProductSystem:
    """Skew product over ``system`` by (phi(y), phi(y k1), ..., phi(y kn)) into G^(n+1)."""
    if phi.group != group:
        raise DomainMismatch(f"phi takes values in {phi.group}, expected {group}")
    ks = [np.atleast_1d(np.asarray(k, dtype=float)) for k in k_list]
    for i in range(len(ks)):
        for j in range(i + 1, len(ks)):
            if ks[i].shape == ks[j].shape and np.allclose(ks[i], ks[j], atol=1e-12):
                raise ComponentError(f"duplicate translate {ks[i].tolist()}")
    if not ks:
        return SkewProductSystem(system, group, phi)
    if isinstance(system, Rotation):
        space = _CircleExtension()
    elif isinstance(system, SkewProductSystem):
        space = system
    elif isinstance(system, HomogeneousExtension) and system.space.is_trivial:
        space = system
    else:
        raise ComponentError(f"{system.descriptor} is not a group extension")
    logger.debug("tuple cocycle over %s with %d translates", system.descriptor, len(ks))
    cocycle = TupleCocycle(phi, space, ks)
    return SkewProductSystem(system, cocycle.group, cocycle)
