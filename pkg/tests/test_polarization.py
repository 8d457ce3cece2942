import math

import numpy as np
import pytest

from trapsim.polarization import (
    H_LINEAR,
    JonesVector,
    WavePlateSetting,
    ancillary_overlap_vs_angle,
    left_circular,
    make_elliptical,
    overlap_factor,
    qwp_transform,
)


class TestMakeElliptical:
    def test_circular(self):
        v = make_elliptical(1.0, +1)
        assert v.ex == pytest.approx(1 / math.sqrt(2), rel=1e-12)
        assert v.ey == pytest.approx(1j / math.sqrt(2), rel=1e-12)

    def test_linear_either_handedness(self):
        for handed in (+1, -1):
            v = make_elliptical(0.0, handed)
            assert v.ex == pytest.approx(1.0)
            assert v.ey == 0.0

    def test_measured_ellipticity(self):
        # oracle: (1, 0.65i)/sqrt(1 + 0.65^2)
        v = make_elliptical(0.65, +1)
        assert v.ex.real == pytest.approx(0.838443616300637, rel=1e-12)
        assert v.ey == pytest.approx(0.5449883505954141j, rel=1e-12)

    def test_normalized(self):
        for eta in (0.0, 0.3, 0.65, 1.0):
            assert make_elliptical(eta).norm() == pytest.approx(1.0, rel=1e-12)

    @pytest.mark.parametrize("eta", [-0.1, 1.0001, 5.0])
    def test_out_of_range_rejected(self, eta):
        with pytest.raises(ValueError):
            make_elliptical(eta)


class TestQwpTransform:
    def test_aligned_fast_axis_leaves_horizontal(self):
        out = qwp_transform(H_LINEAR, WavePlateSetting(0.0))
        assert abs(out.ex) == pytest.approx(1.0, rel=1e-12)
        assert abs(out.ey) == pytest.approx(0.0, abs=1e-12)

    def test_45_degrees_makes_circular(self):
        out = qwp_transform(H_LINEAR, WavePlateSetting(45.0))
        assert abs(out.ex) == pytest.approx(1 / math.sqrt(2), rel=1e-12)
        assert abs(out.ey) == pytest.approx(1 / math.sqrt(2), rel=1e-12)
        rel_phase = np.angle(out.ey / out.ex)
        assert abs(rel_phase) == pytest.approx(math.pi / 2, rel=1e-12)

    def test_30_degrees_overlap_with_circular(self):
        # Jones-algebra oracle: overlap with the matched circular state is
        # |cos(theta - 45 deg)|
        out = qwp_transform(H_LINEAR, WavePlateSetting(30.0))
        kappa = overlap_factor(out, left_circular())
        assert kappa == pytest.approx(math.cos(math.radians(15.0)), rel=1e-12)
        assert kappa == pytest.approx(0.96593, abs=5e-6)

    def test_norm_preserved_for_random_inputs(self):
        rng = np.random.default_rng(42)
        for _ in range(10_000):
            raw = rng.normal(size=4)
            state = JonesVector(raw[0] + 1j * raw[1], raw[2] + 1j * raw[3]).normalized()
            theta = rng.uniform(0, 360)
            out = qwp_transform(state, WavePlateSetting(theta))
            assert abs(out.norm() - 1.0) < 1e-12

    def test_calibration_offset_shifts_angle(self):
        a = qwp_transform(H_LINEAR, WavePlateSetting(53.0, 8.0))
        b = qwp_transform(H_LINEAR, WavePlateSetting(45.0, 0.0))
        assert a.ex == pytest.approx(b.ex, rel=1e-12)
        assert a.ey == pytest.approx(b.ey, rel=1e-12)


class TestOverlapFactor:
    def test_identical_states(self):
        v = make_elliptical(0.7)
        assert overlap_factor(v, v) == pytest.approx(1.0, rel=1e-12)

    def test_orthogonal_circulars(self):
        a = make_elliptical(1.0, +1)
        b = make_elliptical(1.0, -1)
        assert overlap_factor(a, b) == pytest.approx(0.0, abs=1e-12)

    def test_linear_vs_circular(self):
        assert overlap_factor(H_LINEAR, make_elliptical(1.0, +1)) == pytest.approx(
            1 / math.sqrt(2), rel=1e-12
        )


class TestAncillaryOverlapVsAngle:
    def test_matched_circular(self):
        assert ancillary_overlap_vs_angle(45.0, 0.0, left_circular()) == pytest.approx(
            1.0, rel=1e-12
        )

    def test_opposite_circular(self):
        assert ancillary_overlap_vs_angle(135.0, 0.0, left_circular()) == pytest.approx(
            0.0, abs=1e-12
        )

    def test_calibrated_maximum_at_53_degrees(self):
        # measured interference maximum at theta = 53.0 deg with the 8 deg offset
        assert ancillary_overlap_vs_angle(53.0, 8.0, left_circular()) == pytest.approx(
            1.0, rel=1e-12
        )

    def test_exact_cosine_form_for_circular_primary(self):
        primary = left_circular()
        thetas = np.arange(0.0, 180.0, 1.0)
        for theta in thetas:
            expected = abs(math.cos(math.radians(theta - 45.0)))
            got = ancillary_overlap_vs_angle(theta, 0.0, primary)
            assert got == pytest.approx(expected, abs=1e-12)

    def test_periodic_in_180_degrees(self):
        primary = make_elliptical(0.65)
        for theta in (3.0, 40.0, 77.5, 121.0):
            a = ancillary_overlap_vs_angle(theta, 8.0, primary)
            b = ancillary_overlap_vs_angle(theta + 180.0, 8.0, primary)
            assert a == pytest.approx(b, abs=1e-12)

    def test_extrema_90_degrees_apart_for_circular(self):
        primary = left_circular()
        thetas = np.arange(0.0, 180.0, 0.1)
        kappa = np.array([ancillary_overlap_vs_angle(t, 8.0, primary) for t in thetas])
        t_max = thetas[np.argmax(kappa)]
        t_min = thetas[np.argmin(kappa)]
        assert abs(abs(t_max - t_min) - 90.0) < 0.05

    def test_elliptical_minimum_positive_and_decreasing_in_ellipticity(self):
        thetas = np.arange(0.0, 180.0, 0.1)
        minima = []
        for eta in (0.0, 0.25, 0.5, 0.75, 1.0):
            primary = make_elliptical(eta)
            kappa = [ancillary_overlap_vs_angle(t, 0.0, primary) for t in thetas]
            minima.append(min(kappa))
        assert all(m > 0 for m in minima[:-1])  # strictly positive below circular
        assert all(a > b for a, b in zip(minima, minima[1:]))
