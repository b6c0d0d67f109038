"""Seed derivation for independent, replayable random streams."""

from __future__ import annotations

import numpy as np


def task_rng(seed: int, index: int) -> np.random.Generator:
    """Random stream for task ``index`` of a run seeded with ``seed``.

    Streams depend only on ``(seed, index)`` so grid points give the same numbers
    whatever order the workers pick them up in.
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))
