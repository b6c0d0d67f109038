"""Tests for base systems, skew products, extensions and relative-square components."""

import numpy as np
import pytest
from scipy import stats

from distal_lab.services.cocycles import DomainMismatch, GridCocycle, identity_coord
from distal_lab.services.groups import Cyclic, HomogeneousSpace, OrthogonalPlane, Torus
from distal_lab.services.systems import (
    GOLDEN,
    SQRT2,
    ComponentError,
    FiberSpec,
    HomogeneousExtension,
    Odometer,
    RationalAngleError,
    RelativeSquareComponent,
    Rotation,
    SkewProductSystem,
    SystemDescriptorError,
    make_rotation,
    make_skew_product,
    parse_system,
    relative_square_component,
    translated_tuple_system,
)
from distal_lab.utils.intervals import IntervalSet


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


class TestRotation:
    """Irrational rotations as two-interval exchanges."""

    def test_rational_angle_rejected(self):
        """Rational angles are not ergodic and are refused."""
        with pytest.raises(RationalAngleError):
            Rotation(0.25)

    def test_make_rotation(self):
        """The factory keeps the angle and rejects rationals the same way."""
        assert make_rotation(SQRT2).alpha == pytest.approx(SQRT2)
        with pytest.raises(RationalAngleError):
            make_rotation(0.5)

    def test_iterate_matches_stepping(self, rng):
        """T^n in closed form equals n single steps."""
        rot = Rotation(GOLDEN)
        y = rng.random(32)
        stepped = y.copy()
        for _ in range(50):
            stepped = rot.forward(stepped)
        assert np.allclose(rot.iterate(y, 50), stepped, atol=1e-12)

    def test_inverse(self, rng):
        """T^-n T^n = id."""
        rot = Rotation(SQRT2)
        y = rng.random(32)
        back = rot.iterate(rot.iterate(y, 12345), -12345)
        dist = np.minimum(np.abs(back - y), 1.0 - np.abs(back - y))
        assert np.max(dist) < 1e-9

    def test_large_exponent_precision(self):
        """n alpha mod 1 stays accurate for n near 10^7."""
        rot = Rotation(GOLDEN)
        n = 10_000_000
        expected = float((n * np.longdouble(GOLDEN)) % 1)
        assert float(rot.iterate(0.0, n)) == pytest.approx(expected, abs=1e-8)

    def test_image_preserves_measure(self):
        """Interval images have the same measure."""
        rot = Rotation(GOLDEN)
        area = IntervalSet.from_pairs([(0.1, 0.3), (0.5, 0.9)])
        for n in (1, 3, -2):
            assert rot.image(area, n).measure == pytest.approx(area.measure, abs=1e-12)

    def test_candidate_lengths_decrease(self):
        """Base lengths ||q alpha|| come from convergent denominators, longest first."""
        lengths = Rotation(GOLDEN).candidate_base_lengths(5)
        assert lengths == sorted(lengths, reverse=True)
        assert lengths[0] == pytest.approx(1.0 - GOLDEN)


class TestOdometer:
    """The dyadic odometer as an interval exchange."""

    def test_first_step_moves_left_half_to_right_half(self):
        """Adding one maps [0, 1/2) to [1/2, 1)."""
        odo = Odometer(8)
        assert float(odo.forward(0.25)) == pytest.approx(0.75)

    def test_period(self, rng):
        """T^(2^D) is the identity."""
        odo = Odometer(6)
        y = rng.random(16)
        assert np.allclose(odo.iterate(y, 64), y)

    def test_forward_backward(self, rng):
        """Backward undoes forward."""
        odo = Odometer(10)
        y = rng.random(16)
        assert np.allclose(odo.backward(odo.forward(y)), y)

    def test_depth_range(self):
        """Depth outside 1..52 is rejected."""
        with pytest.raises(SystemDescriptorError):
            Odometer(0)


class TestParseSystem:
    """System descriptors."""

    @pytest.mark.parametrize(
        "text, descriptor",
        [
            ("rotation:golden", "rotation:golden"),
            ("rotation:sqrt2", "rotation:sqrt2"),
            ("odometer:12", "odometer:12"),
            ("odometer", "odometer:20"),
        ],
    )
    def test_descriptors(self, text, descriptor):
        """Known descriptors parse to the matching system."""
        assert parse_system(text).descriptor == descriptor

    def test_rational_rotation_descriptor(self):
        """A rational angle in a descriptor raises RationalAngleError."""
        with pytest.raises(RationalAngleError):
            parse_system("rotation:0.5")

    @pytest.mark.parametrize("text", ["rotation:abc", "shift:2", "odometer:x"])
    def test_bad_descriptors(self, text):
        """Malformed descriptors raise SystemDescriptorError."""
        with pytest.raises(SystemDescriptorError):
            parse_system(text)


class TestSkewProduct:
    """T_phi(y, g) = (Ty, phi(y) g)."""

    def test_forward_backward(self, rng):
        """Backward inverts forward on the product."""
        system = SkewProductSystem(Rotation(GOLDEN), Torus(1), identity_coord())
        x = system.sample_points(rng, 32)
        back = system.backward_points(system.forward_points(x))
        assert np.max(Torus(1).distance(back[:, 1:], x[:, 1:])) < 1e-12

    def test_orbit_matches_stepping(self, rng):
        """The chunked orbit equals repeated forward steps."""
        phi = GridCocycle.from_intervals(
            Cyclic(3), [(0.0, 0.4, np.array([1.0])), (0.4, 1.0, np.array([2.0]))]
        )
        system = SkewProductSystem(Rotation(GOLDEN), Cyclic(3), phi)
        x = system.sample_points(rng, 8)
        orbit = system.orbit_points(x, 40)
        current = x
        for j in range(40):
            assert np.allclose(orbit[j], current)
            current = system.forward_points(current)

    def test_factory_matches_constructor(self, rng):
        """make_skew_product gives the same map as the class."""
        phi = GridCocycle.constant(Torus(1), np.array([0.2]))
        made = make_skew_product(Rotation(GOLDEN), Torus(1), phi)
        built = SkewProductSystem(Rotation(GOLDEN), Torus(1), phi)
        x = built.sample_points(rng, 8)
        assert np.allclose(made.forward_points(x), built.forward_points(x))

    @pytest.mark.parametrize(
        "group, phi, fiber_cells",
        [
            (Torus(1), identity_coord(), 4),
            (
                Cyclic(2),
                GridCocycle.from_intervals(Cyclic(2), [(0.2, 0.7, np.array([1.0]))]),
                2,
            ),
        ],
        ids=["anzai", "z2-step"],
    )
    def test_measure_preserved(self, group, phi, fiber_cells):
        """Pushed-forward Haar samples stay uniform on a 32-cell grid (p > 1e-3)."""
        system = SkewProductSystem(Rotation(GOLDEN), group, phi)
        x = system.forward_points(system.sample_points(np.random.default_rng(99), 100_000))
        base_cells = 32 // fiber_cells
        row = np.minimum((x[:, 0] * base_cells).astype(int), base_cells - 1)
        if isinstance(group, Torus):
            col = np.minimum((x[:, 1] * fiber_cells).astype(int), fiber_cells - 1)
        else:
            col = x[:, 1].astype(int)
        counts = np.bincount(row * fiber_cells + col, minlength=32)
        assert stats.chisquare(counts).pvalue > 1e-3

    def test_domain_mismatch(self):
        """Cocycles must take values in the fiber group."""
        with pytest.raises(DomainMismatch):
            SkewProductSystem(Rotation(GOLDEN), Cyclic(2), identity_coord())

    def test_non_abelian_fiber(self, rng):
        """O(2) fibers compose on the left."""
        phi = GridCocycle.constant(OrthogonalPlane(), np.array([0.1, 1.0]))
        system = SkewProductSystem(Rotation(GOLDEN), OrthogonalPlane(), phi)
        x = system.sample_points(rng, 4)
        step = system.forward_points(x)
        expected = OrthogonalPlane().compose(np.array([0.1, 1.0]), x[:, 1:])
        assert np.allclose(step[:, 1:], expected)


class TestExtensions:
    """X = Z x_gamma K/H x_S V and its relative-square components."""

    def _extension(self, space=None, fiber=None):
        space = space or HomogeneousSpace(Torus(1))
        gamma = GridCocycle.constant(space.group, np.array([SQRT2]))
        return HomogeneousExtension(Rotation(GOLDEN), space, gamma, fiber)

    def test_extension_forward_backward(self, rng):
        """Backward inverts forward on the extension."""
        rotation = GridCocycle.constant(Torus(1), np.array([0.3]), [(0.0, 1.0), (0.0, 1.0)])
        ext = self._extension(fiber=FiberSpec("torus-rotation", 1, rotation))
        x = ext.sample_points(rng, 16)
        back = ext.backward_points(ext.forward_points(x))
        assert np.allclose(back[:, :1], x[:, :1], atol=1e-12)
        assert np.max(Torus(2).distance(back[:, 1:], x[:, 1:])) < 1e-12

    def test_unknown_fiber_kind(self):
        """Fiber kinds are validated."""
        with pytest.raises(ComponentError):
            FiberSpec("sphere")

    def test_component_preserves_the_offset(self, rng):
        """On a group extension, c2 - c1 stays equal to k0 along orbits."""
        ext = self._extension()
        comp = RelativeSquareComponent(ext, np.array([0.3]))
        x = comp.sample_points(rng, 16)
        for _ in range(10):
            x = comp.forward_points(x)
            offset = Torus(1).compose(x[:, 2:3], Torus(1).inverse(x[:, 1:2]))
            assert np.max(Torus(1).distance(offset, np.array([0.3]))) < 1e-9

    def test_correspondence_commutes_with_quotient_action(self, rng):
        """correspondence(T x) = quotient_action(correspondence(x))."""
        space = HomogeneousSpace(Torus(1), np.array([[0.0], [0.5]]))
        comp = RelativeSquareComponent(self._extension(space), np.array([0.2]))
        x = comp.sample_points(rng, 16)
        lhs = comp.correspondence(comp.forward_points(x))
        rhs = comp.quotient_action(comp.correspondence(x))
        assert np.allclose(lhs[:, :1], rhs[:, :1], atol=1e-12)
        assert np.max(comp.stabilizer.quotient_distance(lhs[:, 1:2], rhs[:, 1:2])) < 1e-9

    def test_off_component_point_rejected(self):
        """A point with the wrong offset is not on the k0 component."""
        space = HomogeneousSpace(Torus(1), np.array([[0.0], [0.5]]))
        comp = RelativeSquareComponent(self._extension(space), np.array([0.2]))
        with pytest.raises(ComponentError):
            comp.correspondence(np.array([[0.1, 0.1, 0.05]]))

    def test_component_factory(self, rng):
        """relative_square_component builds the extension and the component in one call."""
        space = HomogeneousSpace(Torus(1))
        gamma = GridCocycle.constant(Torus(1), np.array([SQRT2]))
        comp = relative_square_component(Rotation(GOLDEN), space, gamma, np.array([0.3]))
        x = comp.sample_points(rng, 8)
        assert np.allclose(comp.backward_points(comp.forward_points(x))[:, :1], x[:, :1])

    def test_k0_must_be_an_element(self):
        """k0 outside the group coordinates is rejected."""
        with pytest.raises(ComponentError):
            RelativeSquareComponent(self._extension(), np.array([0.2, 0.3]))


class TestTupleSystem:
    """Skew products by (phi(y), phi(y k1), ...)."""

    def test_duplicate_translates_rejected(self):
        """The translates must be distinct."""
        system = SkewProductSystem(Rotation(GOLDEN), Torus(1), identity_coord())
        phi = GridCocycle.constant(Cyclic(2), np.array([1.0]), [(0.0, 1.0), (0.0, 1.0)])
        with pytest.raises(ComponentError):
            translated_tuple_system(system, [np.array([0.1]), np.array([0.1])], phi, Cyclic(2))

    def test_rotation_translates(self, rng):
        """Over a rotation the tuple entries are phi at translated base points."""
        phi = identity_coord()
        tuple_system = translated_tuple_system(Rotation(GOLDEN), [np.array([0.25])], phi, Torus(1))
        y = rng.random((8, 1))
        values = tuple_system.cocycle.evaluate(y)
        assert np.allclose(values[:, 0], y[:, 0])
        assert np.allclose(values[:, 1], np.mod(y[:, 0] + 0.25, 1.0))

    def test_base_without_group_structure_rejected(self):
        """Odometers are not presented as group extensions."""
        with pytest.raises(ComponentError):
            translated_tuple_system(Odometer(4), [np.array([0.5])], identity_coord(), Torus(1))


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
