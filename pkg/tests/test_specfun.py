import math

import numpy as np
import pytest

from hypdeconv.specfun import (ConicalAccuracyError, ConicalEvalConfig, conical_p,
                               conical_p_cosine, conical_p_table, elliptic_k,
                               elliptic_k_quadrature)


class TestEllipticK:
    def test_value_at_zero(self):
        assert elliptic_k(0.0) == pytest.approx(math.pi / 2, abs=1e-15)

    def test_half_sqrt_two(self):
        # frozen from the AGM oracle pi / (2 AGM(1, sqrt(1 - m^2)))
        assert elliptic_k(1.0 / math.sqrt(2.0)) == pytest.approx(
            1.854074677301372, abs=1e-12)

    def test_agm_matches_defining_quadrature(self):
        for m in (0.1, 0.3, 0.5, 0.7, 0.9, 0.99):
            assert elliptic_k(m) == pytest.approx(elliptic_k_quadrature(m), rel=1e-12)

    def test_monotone_and_finite_near_one(self):
        ms = np.linspace(0.0, 0.99, 50)
        vals = [elliptic_k(m) for m in ms]
        assert np.all(np.diff(vals) > 0)
        assert math.isfinite(elliptic_k(0.99))
        assert elliptic_k(0.99) > elliptic_k(0.9)

    def test_domain(self):
        for bad in (1.0, 1.5, -0.1):
            with pytest.raises(ValueError):
                elliptic_k(bad)


def p_half_via_elliptic(r: float) -> float:
    # P_{-1/2}(cosh r) = (2 / (pi cosh(r/2))) K(tanh(r/2))
    return 2.0 / (math.pi * math.cosh(r / 2)) * elliptic_k(math.tanh(r / 2))


class TestConical:
    def test_unity_at_pole(self):
        for t in (0.0, 1.0, 17.3):
            assert conical_p(t, 0.0) == 1.0

    def test_elliptic_identity(self):
        for r in (0.1, 0.5, 1.0, 2.0, 5.0):
            assert conical_p(0.0, r) == pytest.approx(p_half_via_elliptic(r), abs=1e-8)

    def test_even_in_t(self):
        table = conical_p_table([-3.0, 3.0], [0.7, 2.1])
        assert np.array_equal(table[0], table[1])

    def test_frozen_reference_value(self):
        # independently computed with 30-digit arithmetic
        assert conical_p(3.0, 2.0) == pytest.approx(0.10710821917485, abs=1e-11)

    def test_cosine_representation_agrees(self):
        # the two integral representations are independent evaluation routes
        ts = np.linspace(0.0, 20.0, 9)
        rs = np.array([0.1, 0.5, 1.0, 2.0, 3.5, 5.0])
        table = conical_p_table(ts, rs)
        for i, t in enumerate(ts):
            for j, r in enumerate(rs):
                alt = conical_p_cosine(t, r)
                assert table[i, j] == pytest.approx(alt, rel=1e-6, abs=1e-10)

    def test_reality_and_bound_on_grid(self):
        ts = np.linspace(-10.0, 10.0, 25)
        rs = np.linspace(0.0, 20.0, 41)
        table = conical_p_table(ts, rs)
        assert table.shape == (25, 41)
        assert np.all(np.isfinite(table))
        # P_{-1/2}(cosh r) is bounded by its value 1 at r = 0
        p0 = conical_p_table([0.0], rs)[0]
        assert np.max(p0) == pytest.approx(1.0, abs=1e-12)
        assert np.all(p0 <= 1.0 + 1e-12)
        assert np.all(p0 > 0.0)

    def test_methods_agree_at_switch_radius(self):
        # adaptive switches representation at r = 8; both routes must match there
        for t in (0.0, 1.5, 6.0):
            periodic = conical_p(t, 7.99)
            alt = conical_p_cosine(t, 7.99)
            assert periodic == pytest.approx(alt, rel=1e-7, abs=1e-12)

    def test_large_radius_values(self):
        # frozen from 25-digit arithmetic on the defining representation
        assert conical_p(1.5, 12.0) == pytest.approx(-3.3982221292184e-4, rel=1e-8)
        assert conical_p(0.0, 15.0) == pytest.approx(5.7696870951243e-3, rel=1e-8)

    def test_fixed_method_unconverged_raises(self):
        cfg = ConicalEvalConfig(quadrature_nodes=16,
                                method="fixed_trapezoid_periodic")
        with pytest.raises(ConicalAccuracyError):
            conical_p_table([30.0], [6.0], cfg)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            ConicalEvalConfig(quadrature_nodes=8)
        with pytest.raises(ValueError):
            ConicalEvalConfig(method="simpson")

    def test_negative_radius_rejected(self):
        with pytest.raises(ValueError):
            conical_p(1.0, -0.5)
