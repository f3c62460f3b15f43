import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypdeconv.geometry import (HPoint, HPolar, SL2Element, SL2Polar, cayley,
                                cross_ratio_distance, disk_to_righthalf, from_polar,
                                geodesic_radius, halfplane_to_righthalf,
                                hyperbolic_distance, hyperbolic_distance_array,
                                inverse_cayley, mobius_apply, mobius_transform,
                                polar_points, righthalf_to_disk,
                                righthalf_to_halfplane, sl2_from_polar, sl2_to_polar,
                                to_polar)

angles = st.floats(0.0, 2.0 * math.pi, exclude_max=True)
radii = st.floats(0.0, 5.0)
points = st.builds(HPoint,
                   st.floats(-20.0, 20.0),
                   st.floats(1e-3, 1e3))


def sl2_strategy():
    return st.builds(lambda u, r, u2: sl2_from_polar(SL2Polar(u, r, u2)),
                     angles, radii, angles)


class TestHPoint:
    def test_rejects_lower_half_plane(self):
        with pytest.raises(ValueError):
            HPoint(0.0, -1.0)
        with pytest.raises(ValueError):
            HPoint(1.0, 0.0)

    def test_complex_round_trip(self):
        z = HPoint(2.0, 3.0)
        assert HPoint.from_complex(z.as_complex) == z


class TestMobius:
    def test_identity_fixes_points(self):
        z = HPoint(2.0, 3.0)
        assert mobius_apply(SL2Element.identity(), z) == z

    def test_scaling_moves_i_down(self):
        # R_r sends i to e^{-r} i
        r = 1.7
        w = mobius_apply(SL2Element.scaling(r), HPoint(0.0, 1.0))
        assert abs(w.re) < 1e-15
        assert w.im == pytest.approx(math.exp(-r), rel=1e-14)

    def test_unit_translation(self):
        g = SL2Element(1.0, 1.0, 0.0, 1.0)
        w = mobius_apply(g, HPoint(0.0, 1.0))
        assert (w.re, w.im) == pytest.approx((1.0, 1.0))

    def test_determinant_validated(self):
        with pytest.raises(ValueError):
            SL2Element(2.0, 0.0, 0.0, 1.0)

    @given(sl2_strategy(), sl2_strategy(), points)
    @settings(max_examples=100, deadline=None)
    def test_composition_homomorphism(self, g, h, z):
        lhs = mobius_apply(g.compose(h), z)
        rhs = mobius_apply(g, mobius_apply(h, z))
        assert abs(lhs.as_complex - rhs.as_complex) <= 1e-9 * (1.0 + abs(rhs.as_complex))

    def test_vectorised_action_matches_scalar(self):
        g = sl2_from_polar(SL2Polar(0.3, 1.2, 2.2))
        zs = np.array([1j, 2.0 + 0.5j, -3.0 + 4.0j])
        batch = mobius_transform(np.stack([g.as_array()] * 3), zs)
        for z, w in zip(zs, batch):
            assert w == pytest.approx(mobius_apply(g, HPoint.from_complex(z)).as_complex)


class TestDistance:
    def test_zero_at_coincident_points(self):
        assert hyperbolic_distance(1j, 1j) == 0.0

    def test_vertical_pair(self):
        # cosh d = 1 + |i - 2i|^2 / (2*1*2) = 1.25, d = log 2
        assert hyperbolic_distance(1j, 2j) == pytest.approx(math.log(2.0), abs=1e-12)

    def test_horizontal_pair(self):
        # cosh d = 1 + 4/2 = 3
        assert hyperbolic_distance(1 + 1j, -1 + 1j) == pytest.approx(
            math.acosh(3.0), abs=1e-12)

    @given(points, points)
    @settings(max_examples=100, deadline=None)
    def test_symmetry_and_positivity(self, z, w):
        d = hyperbolic_distance(z, w)
        assert d >= 0.0
        assert d == pytest.approx(hyperbolic_distance(w, z), rel=1e-12, abs=1e-300)

    @given(sl2_strategy(), points, points)
    @settings(max_examples=100, deadline=None)
    def test_isometry(self, g, z, w):
        d0 = hyperbolic_distance(z, w)
        d1 = hyperbolic_distance(mobius_apply(g, z), mobius_apply(g, w))
        assert abs(d1 - d0) <= 1e-9 * (1.0 + d0)

    def test_cross_ratio_form_agrees(self, rng):
        z = rng.uniform(-5, 5, 1000) + 1j * rng.uniform(0.05, 20, 1000)
        w = rng.uniform(-5, 5, 1000) + 1j * rng.uniform(0.05, 20, 1000)
        d_main = hyperbolic_distance_array(z, w)
        d_cross = np.array([cross_ratio_distance(a, b) for a, b in zip(z, w)])
        assert np.max(np.abs(d_main - d_cross)) < 1e-9

    def test_near_coincident_stability(self):
        # the arcosh form must not collapse to zero prematurely
        d = hyperbolic_distance(1j, 1e-9 + 1j)
        assert d == pytest.approx(1e-9, rel=1e-6)


class TestPolar:
    def test_pole(self):
        p = to_polar(HPoint(0.0, 1.0))
        assert (p.r, p.u) == (0.0, 0.0)

    def test_on_axis_below_i(self):
        p = to_polar(HPoint(0.0, math.exp(-1.0)))
        assert p.r == pytest.approx(1.0, abs=1e-12)
        assert p.u == pytest.approx(0.0, abs=1e-12)

    def test_from_polar_matches_rotation_action(self):
        expected = mobius_apply(SL2Element.rotation(0.7), HPoint(0.0, math.exp(-1.0)))
        got = from_polar(HPolar(1.0, 0.7))
        assert got.as_complex == pytest.approx(expected.as_complex, abs=1e-14)

    @given(points)
    @settings(max_examples=150, deadline=None)
    def test_round_trip(self, z):
        p = to_polar(z)
        back = from_polar(p)
        assert abs(back.as_complex - z.as_complex) <= 1e-9 * (1.0 + abs(z.as_complex))
        assert 0.0 <= p.u < math.pi or p.r == 0.0

    @given(points)
    @settings(max_examples=100, deadline=None)
    def test_radius_is_distance_to_i(self, z):
        p = to_polar(z)
        assert p.r == pytest.approx(hyperbolic_distance(z, 1j), abs=1e-9)

    def test_double_cover(self):
        # u and u + pi label the same point
        a = from_polar(HPolar(1.3, 0.4))
        b = from_polar(HPolar(1.3, 0.4 + math.pi))
        assert a.as_complex == pytest.approx(b.as_complex, abs=1e-14)

    def test_polar_points_vectorised(self):
        r = np.array([0.5, 1.0, 2.0])
        u = np.array([0.0, 1.0, 2.5])
        zs = polar_points(r, u)
        for ri, ui, z in zip(r, u, zs):
            assert z == pytest.approx(from_polar(HPolar(ri, ui)).as_complex)


class TestSL2Polar:
    def test_identity_canonical(self):
        p = sl2_to_polar(SL2Element.identity())
        assert (p.u, p.r, p.u2) == (0.0, 0.0, 0.0)

    def test_pure_scaling(self):
        p = sl2_to_polar(SL2Element.scaling(2.0))
        assert p.r == pytest.approx(2.0, abs=1e-12)
        assert p.u == pytest.approx(0.0, abs=1e-12)
        assert p.u2 == pytest.approx(0.0, abs=1e-12)

    def test_construct_then_decompose(self):
        g = sl2_from_polar(SL2Polar(0.3, 1.5, 0.8))
        p = sl2_to_polar(g)
        assert p.r == pytest.approx(1.5, abs=1e-12)
        # angles recovered modulo the simultaneous pi-shift
        assert (p.u, p.u2) == pytest.approx((0.3, 0.8), abs=1e-9)

    @given(angles, radii, angles)
    @settings(max_examples=150, deadline=None)
    def test_round_trip_matrix(self, u, r, u2):
        g = sl2_from_polar(SL2Polar(u, r, u2))
        back = sl2_from_polar(sl2_to_polar(g))
        assert np.max(np.abs(back.as_array() - g.as_array())) <= 1e-9


class TestGeodesicRadius:
    def test_aligned_minimum(self):
        assert geodesic_radius(1.2, 0.5, 0.0) == pytest.approx(0.7, abs=1e-12)

    def test_opposed_maximum(self):
        assert geodesic_radius(1.2, 0.5, math.pi / 2) == pytest.approx(1.7, abs=1e-12)

    def test_degenerate_s(self):
        for phi in (0.0, 0.3, 2.0):
            assert geodesic_radius(1.2, 0.0, phi) == pytest.approx(1.2, abs=1e-12)

    def test_triangle_bounds_bulk(self, rng):
        r = rng.uniform(0, 8, 10_000)
        s = rng.uniform(0, 8, 10_000)
        phi = rng.uniform(0, 2 * math.pi, 10_000)
        out = geodesic_radius(r, s, phi)
        assert np.all(out >= np.abs(r - s) - 1e-12)
        assert np.all(out <= r + s + 1e-12)

    def test_matches_point_construction(self, rng):
        # R(r,s,phi) is the radial coordinate of e^s k_{-phi}(e^{-r} i)
        for _ in range(50):
            r, s, phi = rng.uniform(0.1, 3, 3)
            z = math.exp(s) * complex(
                mobius_apply(SL2Element.rotation(-phi),
                             HPoint(0.0, math.exp(-r))).as_complex)
            assert geodesic_radius(r, s, phi) == pytest.approx(
                hyperbolic_distance(z, 1j), abs=1e-10)


class TestCayley:
    def test_centers(self):
        assert cayley(1j) == pytest.approx(0.0, abs=1e-15)
        assert inverse_cayley(0.0) == pytest.approx(1j, abs=1e-15)
        assert righthalf_to_disk(1.0) == pytest.approx(0.0, abs=1e-15)

    @given(points)
    @settings(max_examples=100, deadline=None)
    def test_disk_image_and_round_trip(self, z):
        w = cayley(z)
        assert abs(w) < 1.0
        assert inverse_cayley(w) == pytest.approx(z.as_complex, rel=1e-12, abs=1e-12)

    @given(points)
    @settings(max_examples=100, deadline=None)
    def test_righthalf_chain_consistency(self, z):
        zeta = halfplane_to_righthalf(z)
        assert zeta.real > 0
        assert righthalf_to_halfplane(zeta) == pytest.approx(z.as_complex, rel=1e-12)
        # two routes into the disk agree
        assert righthalf_to_disk(zeta) == pytest.approx(cayley(z), rel=1e-12, abs=1e-12)
        assert disk_to_righthalf(righthalf_to_disk(zeta)) == pytest.approx(
            zeta, rel=1e-12, abs=1e-12)

    def test_domain_violations(self):
        with pytest.raises(ValueError):
            cayley(1.0 - 1j)
        with pytest.raises(ValueError):
            inverse_cayley(2.0)
        with pytest.raises(ValueError):
            righthalf_to_disk(-1.0)
