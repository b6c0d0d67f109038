"""Finite unions of half-open intervals and boxes with exact set arithmetic."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, List, Sequence, Tuple

import numpy as np

# Intervals shorter than this are treated as floating-point slivers and dropped.
SLIVER = 1e-13


class IntervalSet:
    """Sorted, disjoint, non-adjacent union of half-open intervals [lo, hi)."""

    __slots__ = ("_lo", "_hi")

    def __init__(self, lo: Sequence[float] | np.ndarray, hi: Sequence[float] | np.ndarray):
        self._lo = np.asarray(lo, dtype=float)
        self._hi = np.asarray(hi, dtype=float)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[float, float]]) -> "IntervalSet":
        items = sorted((float(a), float(b)) for a, b in pairs if b - a > SLIVER)
        lo: List[float] = []
        hi: List[float] = []
        for a, b in items:
            if hi and a <= hi[-1] + SLIVER:
                hi[-1] = max(hi[-1], b)
            else:
                lo.append(a)
                hi.append(b)
        return cls(lo, hi)

    @classmethod
    def empty(cls) -> "IntervalSet":
        return cls([], [])

    @classmethod
    def full(cls, lo: float = 0.0, hi: float = 1.0) -> "IntervalSet":
        return cls([lo], [hi])

    @property
    def lo(self) -> np.ndarray:
        return self._lo

    @property
    def hi(self) -> np.ndarray:
        return self._hi

    def __len__(self) -> int:
        return len(self._lo)

    def __iter__(self) -> Iterator[Tuple[float, float]]:
        return iter(zip(self._lo.tolist(), self._hi.tolist()))

    def __repr__(self) -> str:
        body = ", ".join(f"[{a:.6g}, {b:.6g})" for a, b in list(self)[:6])
        more = "" if len(self) <= 6 else f", ... ({len(self)} intervals)"
        return f"IntervalSet({body}{more})"

    @property
    def measure(self) -> float:
        return float(np.sum(self._hi - self._lo))

    @property
    def is_empty(self) -> bool:
        return len(self._lo) == 0

    def contains(self, x: np.ndarray | float) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.is_empty:
            return np.zeros(x.shape, dtype=bool)
        idx = np.searchsorted(self._lo, x, side="right") - 1
        safe = np.clip(idx, 0, len(self._lo) - 1)
        return (idx >= 0) & (x < self._hi[safe])

    def breakpoints(self) -> np.ndarray:
        return np.unique(np.concatenate([self._lo, self._hi]))

    def translate(self, shift: float) -> "IntervalSet":
        return IntervalSet(self._lo + shift, self._hi + shift)

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet.from_pairs(list(self) + list(other))

    def intersection(self, other: "IntervalSet") -> "IntervalSet":
        out: List[Tuple[float, float]] = []
        i = j = 0
        a_lo, a_hi, b_lo, b_hi = self._lo, self._hi, other._lo, other._hi
        while i < len(a_lo) and j < len(b_lo):
            lo = max(a_lo[i], b_lo[j])
            hi = min(a_hi[i], b_hi[j])
            if hi - lo > SLIVER:
                out.append((lo, hi))
            if a_hi[i] < b_hi[j]:
                i += 1
            else:
                j += 1
        return IntervalSet.from_pairs(out)

    def complement(self, lo: float = 0.0, hi: float = 1.0) -> "IntervalSet":
        out: List[Tuple[float, float]] = []
        cursor = lo
        for a, b in self:
            if a > cursor:
                out.append((cursor, min(a, hi)))
            cursor = max(cursor, b)
        if cursor < hi:
            out.append((cursor, hi))
        return IntervalSet.from_pairs(out)

    def difference(self, other: "IntervalSet") -> "IntervalSet":
        if self.is_empty:
            return self
        span_lo = float(min(self._lo[0], other._lo[0] if len(other) else self._lo[0]))
        span_hi = float(max(self._hi[-1], other._hi[-1] if len(other) else self._hi[-1]))
        return self.intersection(other.complement(span_lo, span_hi))

    def symmetric_difference_measure(self, other: "IntervalSet") -> float:
        return self.difference(other).measure + other.difference(self).measure

    def split_at(self, points: np.ndarray) -> List[Tuple[float, float]]:
        """Cut every interval at the given points; return the resulting pieces."""
        points = np.unique(np.asarray(points, dtype=float))
        pieces: List[Tuple[float, float]] = []
        for a, b in self:
            inner = points[(points > a + SLIVER) & (points < b - SLIVER)]
            edges = np.concatenate([[a], inner, [b]])
            pieces.extend(zip(edges[:-1].tolist(), edges[1:].tolist()))
        return pieces


@dataclass(frozen=True)
class Box:
    """Half-open axis-aligned box in product coordinates."""

    lo: Tuple[float, ...]
    hi: Tuple[float, ...]

    def contains(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        return np.all((points >= lo) & (points < hi), axis=1)


def _boxes_overlap(first: Box, second: Box) -> bool:
    return all(
        max(a_lo, b_lo) < min(a_hi, b_hi) - SLIVER
        for a_lo, a_hi, b_lo, b_hi in zip(first.lo, first.hi, second.lo, second.hi)
    )


class BoxSet:
    """Finite union of pairwise disjoint boxes inside a product of coordinate spans."""

    def __init__(self, boxes: Sequence[Box], spans: Sequence[Tuple[float, float]]):
        self.boxes = list(boxes)
        self.spans = [(float(a), float(b)) for a, b in spans]
        for box in self.boxes:
            if len(box.lo) != len(self.spans) or len(box.hi) != len(self.spans):
                raise ValueError("box dimension does not match the coordinate spans")
        for i, first in enumerate(self.boxes):
            for second in self.boxes[i + 1 :]:
                if _boxes_overlap(first, second):
                    raise ValueError(f"boxes {first} and {second} overlap")

    @classmethod
    def whole(cls, spans: Sequence[Tuple[float, float]]) -> "BoxSet":
        lo = tuple(float(a) for a, _ in spans)
        hi = tuple(float(b) for _, b in spans)
        return cls([Box(lo, hi)], spans)

    @property
    def dim(self) -> int:
        return len(self.spans)

    @property
    def measure(self) -> float:
        total = 0.0
        for box in self.boxes:
            vol = 1.0
            for (a, b), (s_lo, s_hi) in zip(zip(box.lo, box.hi), self.spans):
                vol *= max(0.0, b - a) / (s_hi - s_lo)
            total += vol
        return total

    def contains(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        hit = np.zeros(len(points), dtype=bool)
        for box in self.boxes:
            hit |= box.contains(points)
        return hit

    def axis_breakpoints(self, axis: int) -> np.ndarray:
        values = [b.lo[axis] for b in self.boxes] + [b.hi[axis] for b in self.boxes]
        return np.unique(np.asarray(values, dtype=float))

    def project(self, axis: int) -> IntervalSet:
        """Shadow of the set on one coordinate axis."""
        return IntervalSet.from_pairs((b.lo[axis], b.hi[axis]) for b in self.boxes)
