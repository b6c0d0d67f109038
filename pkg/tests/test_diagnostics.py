"""Tests for Birkhoff-average scores and obstruction checks."""

import cmath
import math

import numpy as np
import pytest

from distal_lab.services.cocycles import GridCocycle, identity_coord
from distal_lab.services.diagnostics import (
    NotApplicable,
    birkhoff_score,
    family_for,
    finite_group_obstruction_check,
    probe_k0_grid,
    relative_ergodicity_probe,
    rotation_character_average,
    rotation_character_bound,
    score_vs_n,
    signed_characters,
)
from distal_lab.services.groups import Cyclic, HomogeneousSpace, Torus
from distal_lab.services.systems import (
    GOLDEN,
    SQRT2,
    HomogeneousExtension,
    RelativeSquareComponent,
    Rotation,
    SkewProductSystem,
)


class TestRotationScores:
    """Character averages along rotation orbits."""

    @pytest.mark.parametrize("n", [10, 100, 1000, 10_000])
    def test_exact_average_is_below_envelope(self, n):
        """|sin(pi n alpha)| / (n |sin(pi alpha)|) <= 1 / (n sin(pi ||alpha||))."""
        assert rotation_character_average(GOLDEN, n) <= rotation_character_bound(GOLDEN, n) + 1e-15

    def test_exact_average_matches_direct_sum(self):
        """The closed form equals the geometric sum."""
        n = 257
        direct = abs(sum(cmath.exp(2j * math.pi * j * SQRT2) for j in range(n))) / n
        assert rotation_character_average(SQRT2, n) == pytest.approx(direct, rel=1e-9)

    def test_birkhoff_score_on_rotation(self):
        """Scores of u(+-1) on the golden rotation stay below the envelope at n = 10^4."""
        rot = Rotation(GOLDEN)
        family = family_for(rot, base_modes=1)
        report = birkhoff_score(rot, family, 10_000, 4, np.random.default_rng(0))
        assert family.ids == ["u-1", "u1"]
        assert report.max_score <= rotation_character_bound(GOLDEN, 10_000) * (1 + 1e-6)
        assert not report.detected_invariant

    def test_rows(self):
        """One row per (function, start) pair."""
        rot = Rotation(GOLDEN)
        report = birkhoff_score(rot, family_for(rot, 1), 100, 3, np.random.default_rng(1))
        rows = report.rows()
        assert len(rows) == 6
        assert all(row[2] == 100 for row in rows)

    def test_orbit_length_must_be_positive(self):
        """n = 0 is rejected."""
        rot = Rotation(GOLDEN)
        with pytest.raises(ValueError):
            birkhoff_score(rot, family_for(rot), 0, 1, np.random.default_rng(2))


class TestSkewProductScores:
    """Detection of invariant functions on skew products."""

    def test_product_system_is_detected(self):
        """With phi = 0 the fiber character is invariant and scores 1."""
        phi = GridCocycle.constant(Torus(1), np.zeros(1))
        system = SkewProductSystem(Rotation(GOLDEN), Torus(1), phi)
        family = family_for(system, base_modes=2, fiber_limit=2)
        report = birkhoff_score(system, family, 10_000, 4, np.random.default_rng(3), threshold=0.4)
        assert report.detected_invariant
        assert report.function_max()["u0*chi1"] == pytest.approx(1.0)

    @pytest.mark.slow
    def test_anzai_skew_product_is_not_flagged(self):
        """(y, g) -> (y + alpha, g + y) has small scores at n = 10^5."""
        system = SkewProductSystem(Rotation(GOLDEN), Torus(1), identity_coord())
        family = family_for(system, base_modes=2, fiber_limit=4)
        reports = score_vs_n(system, family, [100_000], 4, np.random.default_rng(4), threshold=0.05)
        assert not reports[0].detected_invariant

    def test_signed_characters_cover_both_signs(self):
        """Torus characters come with both signs, including the trivial one."""
        chars = signed_characters(Torus(1), 2)
        assert sorted(chars) == [(-1,), (0,), (1,)]


class TestRelativeProbes:
    """Relative-square components and the finite-group obstruction."""

    def test_constant_cocycle_is_not_relatively_ergodic(self):
        """A constant phi leaves the pair fiber fixed."""
        space = HomogeneousSpace(Torus(1))
        gamma = GridCocycle.constant(Torus(1), np.array([SQRT2]))
        extension = HomogeneousExtension(Rotation(GOLDEN), space, gamma)
        phi = GridCocycle.constant(Cyclic(2), np.zeros(1), extension.spans)
        component = RelativeSquareComponent(extension, np.array([0.3]))
        report = relative_ergodicity_probe(
            component, phi, Cyclic(2), 2000, 4, np.random.default_rng(5)
        )
        assert report.detected_invariant

    def test_k0_grid_probe(self):
        """One report per k0, keyed by position."""
        space = HomogeneousSpace(Torus(1))
        gamma = GridCocycle.constant(Torus(1), np.array([SQRT2]))
        extension = HomogeneousExtension(Rotation(GOLDEN), space, gamma)
        phi = GridCocycle.constant(Cyclic(2), np.zeros(1), extension.spans)
        k0s = [np.array([0.1]), np.array([0.4])]
        reports = probe_k0_grid(extension, phi, Cyclic(2), k0s, 500, 2, np.random.default_rng(8))
        assert sorted(reports) == [0, 1]
        assert all(r.detected_invariant for r in reports.values())

    def test_finite_obstruction(self):
        """On Z/2 every sampled cocycle has g1^-1 g2 invariant on the diagonal component."""
        report = finite_group_obstruction_check(
            HomogeneousSpace(Cyclic(2)), Cyclic(2), 100, np.random.default_rng(6)
        )
        assert report.obstructed == 100
        assert report.all_obstructed

    def test_obstruction_not_applicable_to_infinite_groups(self):
        """The obstruction concerns finite K only."""
        with pytest.raises(NotApplicable):
            finite_group_obstruction_check(
                HomogeneousSpace(Torus(1)), Cyclic(2), 1, np.random.default_rng(7)
            )


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
