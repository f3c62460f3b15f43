import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypdeconv.distributions import (apply_error, f0_radial_density, gaussian_radial,
                                     gaussian_radial_density, gaussian_spectral,
                                     sample_gaussian_h, sample_gaussian_sl2)
from hypdeconv.hft import (ConjugateSymmetryError, RadialDensity, Sample,
                           SpectralFunction, TailMassWarning,
                           calibrate_convolution_constant, convolve_radial_oracle,
                           empirical_transform, empirical_transform_grid,
                           empirical_transform_invariant, forward_radial,
                           inverse_radial, inverse_radial_callable, l2_norm_radial,
                           plancherel_norm)


class TestSpectralFunction:
    def test_requires_symmetric_grid(self):
        with pytest.raises(ValueError):
            SpectralFunction(np.array([0.0, 1.0]), np.array([1.0, 1.0 + 0j]))

    def test_symmetry_residual(self):
        t = np.linspace(-2, 2, 5)
        good = SpectralFunction(t, np.exp(-t * t) * np.exp(1j * t))
        assert good.conjugate_symmetry_residual() < 1e-15
        bad = SpectralFunction(t, np.exp(1j * (t + 1.0)))
        assert bad.conjugate_symmetry_residual() > 0.1

    def test_csv_round_trip(self, tmp_path):
        t = np.linspace(-3, 3, 7)
        F = SpectralFunction(t, np.exp(-t * t) + 0.25j * t)
        path = tmp_path / "spec.csv"
        F.to_csv(path)
        assert path.read_text().splitlines()[0] == "t,re,im"
        back = SpectralFunction.from_csv(path)
        assert np.array_equal(back.t_grid, F.t_grid)
        assert np.array_equal(back.values, F.values)


class TestRadialDensity:
    def test_validation(self):
        with pytest.raises(ValueError):
            RadialDensity(np.array([0.0, -1.0]), np.array([1.0, 1.0]))
        with pytest.raises(ValueError):
            RadialDensity(np.array([0.0, 1.0]), np.array([1.0, np.inf]))

    def test_weighted_profile(self, gauss_01):
        w = gauss_01.weighted()
        assert w.measure_weighted
        assert w.values[0] == 0.0
        assert w.total_mass() == pytest.approx(gauss_01.total_mass(), rel=1e-9)

    def test_interpolator_zero_outside(self, gauss_01):
        fn = gauss_01.interpolator()
        assert fn(np.array([gauss_01.r_grid[-1] + 1.0])) == 0.0

    def test_csv_round_trip(self, tmp_path, gauss_01):
        path = tmp_path / "radial.csv"
        gauss_01.to_csv(path)
        assert path.read_text().splitlines()[0] == "r,value"
        back = RadialDensity.from_csv(path)
        assert np.array_equal(back.values, gauss_01.values)


class TestSample:
    def test_validation(self):
        with pytest.raises(ValueError):
            Sample(np.array([], dtype=complex))
        with pytest.raises(ValueError):
            Sample(np.array([1.0 - 1j]))

    def test_csv_round_trip(self, tmp_path):
        s = Sample(np.array([1j, 2.5 + 0.5j]))
        path = tmp_path / "sample.csv"
        s.to_csv(path)
        assert path.read_text().splitlines()[0] == "re,im"
        back = Sample.from_csv(path)
        assert np.array_equal(back.points, s.points)


class TestForwardRadial:
    def test_gaussian_matches_spectral_form(self, gauss_01):
        t = np.linspace(-5, 5, 101)
        F = forward_radial(gauss_01, t)
        target = np.exp(-(t * t + 0.25) * 0.1)
        assert np.max(np.abs(F.values - target)) < 1e-3 * target.max()
        assert F.conjugate_symmetry_residual() < 1e-12

    def test_f0_transform_real_positive_at_zero(self):
        f0 = f0_radial_density(2.0)
        F = forward_radial(f0, np.array([0.0]))
        assert F.values[0].imag == 0.0
        assert F.values[0].real > 0.0

    def test_single_point_grid(self, gauss_01):
        F = forward_radial(gauss_01, [0.0])
        assert F.values.shape == (1,)
        assert F.values[0].real == pytest.approx(math.exp(-0.025), rel=1e-6)

    def test_tail_warning_on_short_grid(self):
        grid = np.linspace(0.0, 0.8, 60)
        cropped = RadialDensity(grid, gaussian_radial(0.1, grid))
        with pytest.warns(TailMassWarning):
            forward_radial(cropped, np.linspace(-2, 2, 21))


class TestInverseRadial:
    def test_gaussian_spectral_inverts_to_radial(self, gauss_01):
        t = np.linspace(-15, 15, 301)
        F = SpectralFunction(t, np.exp(-(t * t + 0.25) * 0.1) + 0j)
        out = inverse_radial(F, gauss_01.r_grid[::8])
        assert np.max(np.abs(out.values - gauss_01.values[::8])) < 1e-5

    def test_round_trip_f0(self):
        f0 = f0_radial_density(2.0, n=700)
        t = np.linspace(-20, 20, 401)
        F = forward_radial(f0, t)
        back = inverse_radial(F, f0.r_grid[::6])
        err = math.sqrt(2.0 * math.pi * np.trapezoid(
            (back.values - f0.values[::6]) ** 2 * np.sinh(back.r_grid), back.r_grid))
        assert err < 1e-3

    def test_compact_support_band_gives_smooth_real_output(self):
        t = np.linspace(-2, 2, 161)
        band = np.where((np.abs(t) >= 0.5) & (np.abs(t) <= 1.0),
                        np.cos(math.pi * (np.abs(t) - 0.75) / 0.5) ** 2, 0.0)
        F = SpectralFunction(t, band.astype(complex))
        out = inverse_radial(F, np.linspace(0, 4, 81))
        assert np.all(np.isfinite(out.values))
        assert np.max(np.abs(np.diff(out.values))) < 0.1 * max(1e-12, np.max(np.abs(out.values)))

    def test_asymmetric_values_rejected(self):
        t = np.linspace(-2, 2, 41)
        F = SpectralFunction(t, np.exp(1j * (t + 0.5)))
        with pytest.raises(ConjugateSymmetryError):
            inverse_radial(F, np.linspace(0, 2, 11))


class TestEmpiricalTransform:
    def test_point_mass_at_i(self):
        s = Sample(np.array([1j]))
        for t in (0.0, 1.0, -3.7):
            assert empirical_transform(s, t) == pytest.approx(1.0 + 0j, abs=1e-15)

    def test_single_scaled_point(self):
        r = 0.8
        s = Sample(np.array([math.exp(-r) * 1j]))
        t = 1.3
        expected = math.exp(-r / 2) * np.exp(1j * r * t)
        assert empirical_transform(s, t) == pytest.approx(expected, abs=1e-14)

    def test_pair_of_doubled_points(self):
        s = Sample(np.array([2j, 2j]))
        t = 0.9
        expected = 2.0 ** 0.5 * np.exp(-1j * t * math.log(2.0))
        assert empirical_transform(s, t) == pytest.approx(expected, abs=1e-14)

    def test_invariant_equals_zero_angle(self, rng):
        s = Sample(rng.uniform(-2, 2, 50) + 1j * rng.uniform(0.1, 5, 50))
        for t in (0.0, 0.7, 2.5):
            assert empirical_transform_invariant(s, t) == \
                empirical_transform(s, t, 0.0)

    @given(st.floats(-30, 30), st.integers(1, 30), st.integers(0, 2 ** 31))
    @settings(max_examples=60, deadline=None)
    def test_modulus_bound(self, t, n, seed):
        r = np.random.default_rng(seed)
        pts = r.uniform(-3, 3, n) + 1j * np.exp(r.uniform(-3, 3, n))
        s = Sample(pts)
        bound = np.mean(np.sqrt(pts.imag))
        assert abs(empirical_transform(s, t)) <= bound + 1e-12

    def test_monte_carlo_matches_quadrature(self, gauss_01):
        # E H_n(t) equals the transform of the sampling law
        t = 1.0
        target = gaussian_spectral(0.1, t)
        vals = empirical_transform_grid(sample_gaussian_h(0.1, 10_000, 5), [t])
        se = 1.0 / math.sqrt(10_000)  # |Im^{1/2-it}| <= sqrt(Im), crude scale
        assert abs(vals[0] - target) < 3 * se

    def test_unbiasedness_over_replications(self):
        t = 1.0
        target = gaussian_spectral(0.1, t)
        reps = np.array([empirical_transform(sample_gaussian_h(0.1, 500, 100 + k), t)
                         for k in range(200)])
        se = np.std(reps) / math.sqrt(200)
        assert abs(np.mean(reps) - target) < 4 * se


class TestNorms:
    def test_zero_spectral_function(self):
        t = np.linspace(-2, 2, 21)
        F = SpectralFunction(t, np.zeros(21, dtype=complex))
        assert plancherel_norm(F) == 0.0

    def test_plancherel_gaussian(self, gauss_01):
        t = np.linspace(-15, 15, 301)
        F = forward_radial(gauss_01, t)
        assert plancherel_norm(F) == pytest.approx(l2_norm_radial(gauss_01), rel=0.01)

    def test_plancherel_f0(self):
        f0 = f0_radial_density(2.0)
        F = forward_radial(f0, np.linspace(-20, 20, 401))
        assert plancherel_norm(F) == pytest.approx(l2_norm_radial(f0), rel=0.01)


class TestConvolutionOracle:
    def test_calibration_constant(self):
        c = calibrate_convolution_constant()
        assert c == pytest.approx(1.0 / (2.0 * math.pi), rel=1e-4)

    def test_approximate_identity(self, gauss_01):
        tight = gaussian_radial_density(1e-4)
        r_out = np.linspace(0.0, 3.5, 71)
        out = convolve_radial_oracle(tight, gauss_01, r_out)
        target = gauss_01.interpolator()(r_out)
        err = math.sqrt(2 * math.pi * np.trapezoid(
            (out.values - target) ** 2 * np.sinh(r_out), r_out))
        assert err < 1e-2

    def test_heat_semigroup(self, gauss_005, gauss_01, gauss_015):
        r_out = np.linspace(0.0, 4.0, 81)
        out = convolve_radial_oracle(gauss_005, gauss_01, r_out)
        target = gauss_015.interpolator()(r_out)
        err = math.sqrt(2 * math.pi * np.trapezoid(
            (out.values - target) ** 2 * np.sinh(r_out), r_out))
        norm = math.sqrt(2 * math.pi * np.trapezoid(
            target ** 2 * np.sinh(r_out), r_out))
        assert err < 1e-2 * norm

    def test_spectral_quotient_near_one(self, gauss_005, gauss_01):
        r_out = np.linspace(0.0, 4.5, 91)
        out = convolve_radial_oracle(gauss_005, gauss_01, r_out)
        t = np.linspace(-5, 5, 81)
        F = forward_radial(out, t)
        quotient = F.values.real / (gaussian_spectral(0.05, t) * gaussian_spectral(0.1, t))
        assert np.max(np.abs(quotient - 1.0)) < 1e-2

    def test_second_pair_spectral_product(self):
        # convolution theorem on an independent (error, signal) pair
        f_err = gaussian_radial_density(0.02)
        h = gaussian_radial_density(0.08)
        r_out = np.linspace(0.0, 4.0, 81)
        out = convolve_radial_oracle(f_err, h, r_out)
        t = np.linspace(-5, 5, 81)
        F = forward_radial(out, t)
        target = gaussian_spectral(0.1, t)
        num = np.sqrt(np.trapezoid(np.abs(F.values - target) ** 2, t))
        den = np.sqrt(np.trapezoid(target ** 2, t))
        assert num / den < 1e-2


class TestConjugateSymmetryInvariant:
    def test_every_real_radial_transform_is_symmetric(self, gauss_005):
        for density in (gauss_005, f0_radial_density(3.0)):
            F = forward_radial(density, np.linspace(-4, 4, 41))
            assert F.conjugate_symmetry_residual() < 1e-12

    def test_empirical_grid_symmetry(self):
        s = sample_gaussian_h(0.1, 200, 9)
        t = np.linspace(-3, 3, 13)
        vals = empirical_transform_grid(s, t)
        assert np.max(np.abs(vals[::-1] - np.conj(vals))) < 1e-14
