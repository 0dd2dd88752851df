import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from risfaultsim import channelgeom as cg
from risfaultsim.errors import GeometryError, PathSetError

LAM = cg.wavelength_of(90e9)


def brute_force_steering(geom, angles):
    """Independent double-loop oracle for the panel response."""
    out = np.empty(geom.n_elements, dtype=np.complex128)
    for m in range(geom.n_elev):
        for n in range(geom.n_azim):
            phase = (
                -2.0
                * math.pi
                * geom.spacing
                * (m * math.cos(angles.elevation) + n * math.sin(angles.elevation) * math.cos(angles.azimuth))
                / geom.wavelength
            )
            out[m * geom.n_azim + n] = complex(math.cos(phase), math.sin(phase))
    return out


class TestSteeringVector:
    def test_broadside_all_ones(self):
        geom = cg.UpaGeometry(2, 2, LAM / 2, LAM)
        v = cg.steering_vector(geom, cg.PathAngles(math.pi / 2, math.pi / 2))
        np.testing.assert_allclose(v, np.ones(4), atol=1e-12)

    def test_quarter_turn_line_panel(self):
        # cos(pi/3) = 1/2 makes the phase step exactly -pi/2 for lambda/2 spacing
        geom = cg.UpaGeometry(4, 1, LAM / 2, LAM)
        v = cg.steering_vector(geom, cg.PathAngles(math.pi / 3, 0.7))
        np.testing.assert_allclose(v, [1, -1j, -1, 1j], atol=1e-12)

    def test_matches_double_loop_oracle(self):
        geom = cg.UpaGeometry(3, 3, LAM / 2, LAM)
        angles = cg.PathAngles(1.0, 0.7)
        got = cg.steering_vector(geom, angles)
        want = brute_force_steering(geom, angles)
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-15)

    def test_first_entry_exactly_one(self):
        geom = cg.UpaGeometry(5, 7, LAM / 2, LAM)
        v = cg.steering_vector(geom, cg.PathAngles(0.9, 2.1))
        assert v[0] == 1.0 + 0.0j

    def test_unit_modulus(self):
        geom = cg.UpaGeometry(6, 4, LAM / 3, LAM)
        v = cg.steering_vector(geom, cg.PathAngles(2.2, 0.4))
        np.testing.assert_allclose(np.abs(v), 1.0, atol=1e-12)

    def test_invalid_geometry_rejected(self):
        with pytest.raises(GeometryError):
            cg.UpaGeometry(0, 4, LAM / 2, LAM)
        with pytest.raises(GeometryError):
            cg.UpaGeometry(4, 4, -1.0, LAM)

    @settings(max_examples=50, deadline=None)
    @given(
        n_elev=st.integers(1, 8),
        n_azim=st.integers(1, 8),
        elevation=st.floats(1e-6, math.pi),
        azimuth=st.floats(1e-6, math.pi),
    )
    def test_kronecker_consistency(self, n_elev, n_azim, elevation, azimuth):
        geom = cg.UpaGeometry(n_elev, n_azim, LAM / 2, LAM)
        angles = cg.PathAngles(elevation, azimuth)
        v = cg.steering_vector(geom, angles)
        factors = np.kron(cg.elevation_factor(geom, angles), cg.azimuth_factor(geom, angles))
        np.testing.assert_allclose(v, factors, rtol=1e-12)
        np.testing.assert_allclose(np.abs(v), 1.0, atol=1e-12)


class TestChannelRealization:
    def test_holds_consistent_pair(self):
        rng = np.random.default_rng(0)
        ris = cg.UpaGeometry(3, 3, LAM / 2, LAM)
        bs = cg.UpaGeometry(2, 2, LAM / 2, LAM)
        g = cg.mu_ris_channel(cg.sample_path_set(rng, 4), ris)
        h = cg.ris_bs_channel(cg.sample_path_set(rng, 4, with_departure=True), bs, ris)
        ch = cg.ChannelRealization(g_ur=g, h_rb=h)
        assert ch.g_ur.shape == (9,) and ch.h_rb.shape == (4, 9)

    def test_rejects_mismatched_dimensions(self):
        with pytest.raises(cg.DimensionError):
            cg.ChannelRealization(
                g_ur=np.ones(5, complex), h_rb=np.ones((4, 9), complex)
            )

    def test_rejects_non_finite_entries(self):
        g = np.ones(9, complex)
        h = np.ones((4, 9), complex)
        h[0, 0] = np.inf
        with pytest.raises(ValueError):
            cg.ChannelRealization(g_ur=g, h_rb=h)


class TestAnglesBetween:
    def test_vertical_displacement_clamped(self):
        a = cg.angles_between(cg.Position3D(0, 0, 0), cg.Position3D(0, 0, 1))
        assert 0.0 < a.elevation < 1e-300

    def test_horizontal_displacement(self):
        a = cg.angles_between(cg.Position3D(0, 0, 0), cg.Position3D(1, 0, 0))
        assert a.elevation == pytest.approx(math.pi / 2, abs=1e-15)

    def test_panel_to_user_oracle(self):
        # standard placements: panel (15, 0, 2), user (30, 6, 0.5)
        a = cg.angles_between(cg.Position3D(15, 0, 2), cg.Position3D(30, 6, 0.5))
        d = np.array([15.0, 6.0, -1.5])
        dist = float(np.linalg.norm(d))
        assert a.elevation == pytest.approx(math.acos(d[2] / dist), abs=1e-14)
        assert a.azimuth == pytest.approx(abs(math.atan2(d[1], d[0])), abs=1e-14)

    def test_coincident_points_rejected(self):
        with pytest.raises(GeometryError):
            cg.angles_between(cg.Position3D(1, 2, 3), cg.Position3D(1, 2, 3))


class TestSamplePathSet:
    def test_path_count(self):
        ps = cg.sample_path_set(np.random.default_rng(0), 10)
        assert len(ps) == 10

    def test_single_anchored_path_angles_deterministic(self):
        p_u, p_r = cg.Position3D(30, 6, 0.5), cg.Position3D(15, 0, 2)
        ps = cg.sample_path_set(np.random.default_rng(1), 1, geometric_anchor=(p_u, p_r))
        assert ps.paths[0].arrival == cg.angles_between(p_r, p_u)

    def test_same_seed_identical(self):
        kw = dict(
            count=7,
            geometric_anchor=(cg.Position3D(30, 6, 0.5), cg.Position3D(15, 0, 2)),
            with_departure=True,
        )
        a = cg.sample_path_set(np.random.default_rng(42), **kw)
        b = cg.sample_path_set(np.random.default_rng(42), **kw)
        assert a == b

    def test_angles_inside_domain(self):
        ps = cg.sample_path_set(np.random.default_rng(3), 500)
        for p in ps.paths:
            assert 0.0 < p.arrival.elevation <= math.pi
            assert 0.0 < p.arrival.azimuth <= math.pi

    def test_departure_all_or_none(self):
        with pytest.raises(PathSetError):
            cg.PathSet(
                paths=(
                    cg.Path(1.0, cg.PathAngles(1.0, 1.0), cg.PathAngles(1.0, 1.0)),
                    cg.Path(1.0, cg.PathAngles(1.0, 1.0), None),
                )
            )


class TestChannels:
    def setup_method(self):
        self.ris = cg.UpaGeometry(3, 3, LAM / 2, LAM)
        self.bs = cg.UpaGeometry(2, 2, LAM / 2, LAM)

    def test_single_path_equals_steering(self):
        angles = cg.PathAngles(1.1, 0.4)
        ps = cg.PathSet(paths=(cg.Path(1.0 + 0j, angles),))
        np.testing.assert_allclose(
            cg.mu_ris_channel(ps, self.ris), cg.steering_vector(self.ris, angles)
        )

    def test_opposite_gains_cancel(self):
        angles = cg.PathAngles(1.1, 0.4)
        ps = cg.PathSet(paths=(cg.Path(2.0 - 1j, angles), cg.Path(-2.0 + 1j, angles)))
        np.testing.assert_allclose(cg.mu_ris_channel(ps, self.ris), 0.0, atol=1e-14)

    def test_mu_ris_accumulation_oracle(self):
        ps = cg.sample_path_set(np.random.default_rng(5), 10)
        got = cg.mu_ris_channel(ps, self.ris)
        want = np.zeros(self.ris.n_elements, dtype=np.complex128)
        for p in ps.paths:
            want = want + p.gain * brute_force_steering(self.ris, p.arrival)
        np.testing.assert_allclose(got, want, rtol=1e-12)

    def test_rank_one_single_path(self):
        angles_a, angles_d = cg.PathAngles(1.0, 0.5), cg.PathAngles(0.8, 1.5)
        ps = cg.PathSet(paths=(cg.Path(1.0 + 0j, angles_a, angles_d),))
        h = cg.ris_bs_channel(ps, self.bs, self.ris)
        want = np.outer(
            cg.steering_vector(self.bs, angles_a),
            cg.steering_vector(self.ris, angles_d).conj(),
        )
        np.testing.assert_allclose(h, want)
        assert np.linalg.matrix_rank(h) == 1

    def test_rank_bounded_by_path_count(self):
        ps = cg.sample_path_set(np.random.default_rng(6), 3, with_departure=True)
        h = cg.ris_bs_channel(ps, self.bs, self.ris)
        assert np.linalg.matrix_rank(h) <= 3

    def test_ris_bs_accumulation_oracle(self):
        ps = cg.sample_path_set(np.random.default_rng(7), 10, with_departure=True)
        got = cg.ris_bs_channel(ps, self.bs, self.ris)
        want = np.zeros((self.bs.n_elements, self.ris.n_elements), dtype=np.complex128)
        for p in ps.paths:
            a_rx = brute_force_steering(self.bs, p.arrival)
            a_tx = brute_force_steering(self.ris, p.departure)
            want = want + p.gain * np.outer(a_rx, a_tx.conj())
        np.testing.assert_allclose(got, want, rtol=1e-12)

    def test_missing_departure_rejected(self):
        ps = cg.sample_path_set(np.random.default_rng(8), 2)
        with pytest.raises(PathSetError):
            cg.ris_bs_channel(ps, self.bs, self.ris)

    def test_departure_present_rejected_for_vector_channel(self):
        ps = cg.sample_path_set(np.random.default_rng(9), 2, with_departure=True)
        with pytest.raises(PathSetError):
            cg.mu_ris_channel(ps, self.ris)

    def test_linearity_in_gains(self):
        ps = cg.sample_path_set(np.random.default_rng(10), 6, with_departure=True)
        c = 0.3 - 1.7j
        scaled = cg.PathSet(
            paths=tuple(
                cg.Path(p.gain * c, p.arrival, p.departure) for p in ps.paths
            )
        )
        np.testing.assert_allclose(
            cg.ris_bs_channel(scaled, self.bs, self.ris),
            c * cg.ris_bs_channel(ps, self.bs, self.ris),
            rtol=1e-12,
        )
        ps_v = cg.sample_path_set(np.random.default_rng(11), 6)
        scaled_v = cg.PathSet(paths=tuple(cg.Path(p.gain * c, p.arrival) for p in ps_v.paths))
        np.testing.assert_allclose(
            cg.mu_ris_channel(scaled_v, self.ris),
            c * cg.mu_ris_channel(ps_v, self.ris),
            rtol=1e-12,
        )

    def test_conjugation_symmetry(self):
        # conjugating gains and steering phases conjugates the channel
        ps = cg.sample_path_set(np.random.default_rng(12), 5)
        got = np.conj(cg.mu_ris_channel(ps, self.ris))
        want = np.zeros(self.ris.n_elements, dtype=np.complex128)
        for p in ps.paths:
            want = want + np.conj(p.gain) * np.conj(cg.steering_vector(self.ris, p.arrival))
        np.testing.assert_allclose(got, want, rtol=1e-12)
