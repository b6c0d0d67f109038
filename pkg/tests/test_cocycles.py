"""Tests for cocycles, cocycle powers, the cocycle metric and the finite full group."""

import numpy as np
import pytest

from distal_lab.services.cocycles import (
    CocycleLiteralError,
    DomainMismatch,
    FiniteFullGroupElement,
    GridCocycle,
    InvalidFullGroupElement,
    cocycle_metric,
    cocycle_power,
    differs_on,
    identity_coord,
    metric_from_levels,
    parse_cocycle,
    tau_twist,
)
from distal_lab.services.groups import Cyclic, OrthogonalPlane, Torus
from distal_lab.services.systems import GOLDEN, Rotation
from distal_lab.utils.intervals import IntervalSet


def _step(group, cells):
    return GridCocycle.from_intervals(group, [(lo, hi, np.array(v)) for lo, hi, v in cells])


class TestCocycleIdentity:
    """phi_{n+m}(y) = phi_n(T^m y) phi_m(y)."""

    @pytest.mark.parametrize("n, m", [(3, 4), (7, 0), (5, -2), (-3, -4)])
    def test_additivity_on_z2(self, n, m):
        """Additivity holds for positive, zero and negative exponents."""
        rot = Rotation(GOLDEN)
        phi = _step(Cyclic(2), [(0.0, 0.3, [1.0]), (0.6, 0.8, [1.0])])
        y = np.random.default_rng(1).random(64)
        lhs = cocycle_power(phi, rot, n + m, y)
        later = cocycle_power(phi, rot, n, rot.iterate(y, m))
        rhs = Cyclic(2).compose(later, cocycle_power(phi, rot, m, y))
        assert np.allclose(lhs, rhs)

    def test_additivity_non_abelian(self):
        """The order of composition matters in O(2) and is respected."""
        rot = Rotation(GOLDEN)
        group = OrthogonalPlane()
        phi = _step(group, [(0.0, 0.5, [0.1, 0.0]), (0.5, 1.0, [0.0, 1.0])])
        y = np.random.default_rng(2).random(32)
        lhs = cocycle_power(phi, rot, 9, y)
        later = cocycle_power(phi, rot, 5, rot.iterate(y, 4))
        rhs = group.compose(later, cocycle_power(phi, rot, 4, y))
        assert np.max(group.distance(lhs, rhs)) < 1e-12

    def test_zero_power_is_identity(self):
        """phi_0 is the identity everywhere."""
        phi = identity_coord()
        out = cocycle_power(phi, Rotation(GOLDEN), 0, np.array([0.1, 0.7]))
        assert np.allclose(out, 0.0)

    def test_identity_coord_power_is_birkhoff_sum(self):
        """For phi(y) = y, phi_n(y) is the sum of the first n orbit points mod 1."""
        rot = Rotation(GOLDEN)
        y = np.array([0.2])
        expected = np.mod(np.sum(rot.orbit(y, 6)), 1.0)
        assert float(cocycle_power(identity_coord(), rot, 6, y)[0, 0]) == pytest.approx(expected)


class TestMetric:
    """d(phi, psi) = inf{eps : nu(d_G(phi, psi) > eps) < eps}."""

    def test_equal_cocycles_have_distance_zero(self):
        """d(phi, phi) = 0."""
        phi = _step(Torus(1), [(0.0, 0.5, [0.25])])
        assert cocycle_metric(phi, phi) == pytest.approx(0.0)

    def test_small_disagreement_set(self):
        """Differing by 1 in Z/2 on a set of measure 0.01 gives distance 0.01."""
        phi = GridCocycle.constant(Cyclic(2), np.zeros(1))
        psi = _step(Cyclic(2), [(0.3, 0.31, [1.0])])
        assert cocycle_metric(phi, psi) == pytest.approx(0.01)

    def test_small_uniform_difference(self):
        """A uniform torus shift by 0.001 has distance 0.001."""
        phi = GridCocycle.constant(Torus(1), np.array([0.1]))
        psi = GridCocycle.constant(Torus(1), np.array([0.101]))
        assert cocycle_metric(phi, psi) == pytest.approx(0.001)

    def test_triangle_inequality(self):
        """d(phi, chi) <= d(phi, psi) + d(psi, chi) on random step cocycles."""
        rng = np.random.default_rng(3)
        for _ in range(20):
            made = []
            for _ in range(3):
                cuts = np.sort(rng.random(4))
                cells = [(cuts[0], cuts[1], [rng.random()]), (cuts[2], cuts[3], [rng.random()])]
                made.append(_step(Torus(1), cells))
            phi, psi, chi = made
            bound = cocycle_metric(phi, psi) + cocycle_metric(psi, chi)
            assert cocycle_metric(phi, chi) <= bound + 1e-12

    def test_metric_from_levels(self):
        """Level masses: distance 0.3 on mass 0.2 and 0 elsewhere gives 0.2."""
        assert metric_from_levels(np.array([0.0, 0.3]), np.array([0.8, 0.2])) == pytest.approx(0.2)

    def test_different_groups_rejected(self):
        """Cocycles into different groups cannot be compared."""
        with pytest.raises(DomainMismatch):
            cocycle_metric(
                GridCocycle.constant(Torus(1), [0.0]), GridCocycle.constant(Cyclic(2), [0.0])
            )

    def test_differs_on(self):
        """The disagreement set of two step cocycles is computed exactly."""
        phi = GridCocycle.constant(Cyclic(3), np.zeros(1))
        psi = _step(Cyclic(3), [(0.2, 0.4, [1.0]), (0.7, 0.75, [0.0])])
        assert list(differs_on(phi, psi)) == [(0.2, 0.4)]


class TestParsing:
    """Cocycle literals used by configs and flags."""

    def test_const(self):
        """const:g is constant."""
        phi = parse_cocycle("const:1/3", Torus(1))
        assert np.allclose(phi(np.array([0.1, 0.9])), 1 / 3)

    def test_cells_with_default_identity(self):
        """Cells not listed take the identity."""
        phi = parse_cocycle("cells:[(0,0.5):1, (0.75,1):1]", Cyclic(2))
        assert phi(np.array([0.25, 0.6, 0.8]))[:, 0].tolist() == [1.0, 0.0, 1.0]

    def test_identity_coord_needs_circle(self):
        """identity-coord only exists for torus:1 values."""
        with pytest.raises(CocycleLiteralError):
            parse_cocycle("identity-coord", Cyclic(2))

    @pytest.mark.parametrize("text", ["const:", "cells:(0,1):1", "cells:[]", "random"])
    def test_bad_literals(self, text):
        """Malformed literals raise CocycleLiteralError."""
        with pytest.raises(CocycleLiteralError):
            parse_cocycle(text, Torus(1))

    def test_overlapping_cells(self):
        """Cells may not overlap."""
        with pytest.raises(CocycleLiteralError):
            parse_cocycle("cells:[(0,0.5):1, (0.4,1):1]", Cyclic(2))

    def test_dump_and_load(self):
        """The level-dump format reloads to the same cocycle."""
        phi = _step(Torus(1), [(0.1, 0.4, [0.25]), (0.5, 0.9, [0.75])])
        again = GridCocycle.load_lines(Torus(1), phi.dump_lines())
        assert cocycle_metric(phi, again) == pytest.approx(0.0)


class TestFiniteFullGroup:
    """tau(z) = T^{s_j} z on finitely many cells."""

    def test_constant_power_is_valid(self):
        """T^3 itself is in the finite full group."""
        assert FiniteFullGroupElement.constant(3).validate(Rotation(GOLDEN))

    def test_swap_of_tower_levels_is_valid(self):
        """Exchanging an interval with its image is invertible."""
        rot = Rotation(GOLDEN)
        width = 0.1
        lo = 0.0
        hi_image = float(rot.iterate(lo, 1))
        tau = FiniteFullGroupElement(
            np.array([lo, hi_image]), np.array([lo + width, hi_image + width]), np.array([1, -1])
        )
        assert tau.validate(rot)
        y = np.array([0.05])
        assert float(tau.apply(rot, y)[0, 0]) == pytest.approx(float(rot.forward(0.05)))

    def test_non_invertible_element_rejected(self):
        """Moving one cell onto a fixed region does not tile the space."""
        tau = FiniteFullGroupElement(np.array([0.0]), np.array([0.1]), np.array([1]))
        with pytest.raises(InvalidFullGroupElement):
            tau.validate(Rotation(GOLDEN))

    def test_overlapping_cells_rejected(self):
        """Cells must be disjoint."""
        with pytest.raises(InvalidFullGroupElement):
            FiniteFullGroupElement(np.array([0.0, 0.05]), np.array([0.1, 0.2]), np.array([1, 2]))

    def test_image_preserves_measure(self):
        """tau maps a set to a set of the same measure."""
        rot = Rotation(GOLDEN)
        tau = FiniteFullGroupElement.constant(2)
        area = IntervalSet.full(0.2, 0.5)
        assert tau.image(rot, area).measure == pytest.approx(0.3)

    def test_twist_follows_exponent(self):
        """phi_tau(y) = phi_{s(y)}(y)."""
        rot = Rotation(GOLDEN)
        phi = identity_coord()
        tau = FiniteFullGroupElement.constant(2)
        y = np.array([0.3])
        assert np.allclose(tau_twist(phi, tau, rot, y), cocycle_power(phi, rot, 2, y))


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
