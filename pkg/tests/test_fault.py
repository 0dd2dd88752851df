import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from risfaultsim import channelgeom as cg
from risfaultsim import fault
from risfaultsim.errors import DimensionError, PartitionError

LAM = cg.wavelength_of(90e9)


def geom(rows, cols):
    return cg.UpaGeometry(rows, cols, LAM / 2, LAM)


class TestClassifyElement:
    def test_zero_strength_is_faulty(self):
        assert fault.classify_element(0.0, fault.FaultModelParams(1e-12, 1e-3)) == 0

    def test_threshold_itself_is_faulty(self):
        params = fault.FaultModelParams(strength_threshold=1e-12)
        assert fault.classify_element(1e-12, params) == 0

    def test_above_threshold_is_functioning(self):
        params = fault.FaultModelParams(strength_threshold=1e-12)
        assert fault.classify_element(2e-12, params) == 1

    def test_negative_strength_rejected(self):
        with pytest.raises(ValueError):
            fault.classify_element(-1.0, fault.FaultModelParams())

    def test_threshold_must_sit_below_receive_power(self):
        with pytest.raises(ValueError):
            fault.FaultModelParams(strength_threshold=1.0, min_receive_power=1e-3)


class TestEffectiveProfile:
    def test_identity_mask(self):
        phases = np.exp(1j * np.linspace(0, 3, 8))
        out = fault.effective_profile(phases, np.ones(8, dtype=np.uint8))
        np.testing.assert_array_equal(out, phases)

    def test_single_zero(self):
        phases = np.exp(1j * np.linspace(0, 3, 8))
        statuses = np.ones(8, dtype=np.uint8)
        statuses[3] = 0
        out = fault.effective_profile(phases, statuses)
        assert out[3] == 0.0 + 0.0j
        np.testing.assert_array_equal(np.delete(out, 3), np.delete(phases, 3))

    def test_fifteen_faults_give_fifteen_zeros(self):
        rng = np.random.default_rng(0)
        phases = np.exp(1j * rng.uniform(0, 2 * np.pi, 81))
        statuses = np.ones(81, dtype=np.uint8)
        statuses[rng.choice(81, 15, replace=False)] = 0
        out = fault.effective_profile(phases, statuses)
        assert np.count_nonzero(out == 0) == 15

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            fault.effective_profile(np.ones(4, complex), np.ones(5, dtype=np.uint8))

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.sampled_from([0, 1]), min_size=1, max_size=64))
    def test_remasking_idempotent(self, statuses):
        statuses = np.asarray(statuses, dtype=np.uint8)
        rng = np.random.default_rng(len(statuses))
        phases = np.exp(1j * rng.uniform(0, 2 * np.pi, len(statuses)))
        once = fault.effective_profile(phases, statuses)
        twice = fault.effective_profile(once, statuses)
        np.testing.assert_array_equal(once, twice)


class TestSampleFaultScenario:
    def test_cap_zero_all_ones(self):
        out = fault.sample_fault_scenario(np.random.default_rng(1), 81, 0)
        np.testing.assert_array_equal(out, np.ones(81, dtype=np.uint8))

    def test_counts_uniform_chi_square(self):
        rng = np.random.default_rng(2)
        counts = np.zeros(16, dtype=np.int64)
        for _ in range(10_000):
            statuses = fault.sample_fault_scenario(rng, 81, 15)
            counts[81 - int(statuses.sum())] += 1
        expected = 10_000 / 16
        chi2 = float(np.sum((counts - expected) ** 2 / expected))
        # 1% critical value of chi-square with 15 degrees of freedom
        assert chi2 < 30.578

    def test_determinism(self):
        a = fault.sample_fault_scenario(np.random.default_rng(3), 81, 15)
        b = fault.sample_fault_scenario(np.random.default_rng(3), 81, 15)
        np.testing.assert_array_equal(a, b)

    def test_cap_respected(self):
        rng = np.random.default_rng(4)
        for _ in range(500):
            statuses = fault.sample_fault_scenario(rng, 30, 7)
            assert int((statuses == 0).sum()) <= 7


class TestSaPartition:
    def test_nine_by_nine_into_nine_tiles(self):
        part = fault.sa_partition(geom(9, 9), 9)
        assert part.k_count == 9 and part.sa_size == 9
        # top-left 3x3 tile is SA 0
        members = part.members(0)
        expected = [m * 9 + n for m in range(3) for n in range(3)]
        np.testing.assert_array_equal(members, expected)

    def test_single_sa(self):
        part = fault.sa_partition(geom(5, 4), 1)
        assert part.k_count == 1
        np.testing.assert_array_equal(part.members(0), np.arange(20))

    def test_six_by_six_into_four_tiles(self):
        part = fault.sa_partition(geom(6, 6), 4)
        # hand-enumerated 3x3 tile map: (0,0) and (2,2) both in SA 0,
        # (0,3) in SA 1, (3,0) in SA 2, (5,5) in SA 3
        assert part.element_to_sa[0 * 6 + 0] == 0
        assert part.element_to_sa[2 * 6 + 2] == 0
        assert part.element_to_sa[0 * 6 + 3] == 1
        assert part.element_to_sa[3 * 6 + 0] == 2
        assert part.element_to_sa[5 * 6 + 5] == 3

    def test_incompatible_k_rejected(self):
        with pytest.raises(PartitionError):
            fault.sa_partition(geom(9, 9), 7)

    def test_partition_is_exact(self):
        part = fault.sa_partition(geom(8, 4), 8)
        sizes = [len(part.members(k)) for k in range(8)]
        assert sum(sizes) == 32 and set(sizes) == {4}
        all_members = np.concatenate([part.members(k) for k in range(8)])
        assert len(np.unique(all_members)) == 32

    def test_non_tileable_falls_back_to_chunks(self):
        part = fault.sa_partition(geom(6, 1), 3)
        np.testing.assert_array_equal(part.element_to_sa, [0, 0, 1, 1, 2, 2])


class TestSaStatuses:
    def setup_method(self):
        self.part = fault.sa_partition(geom(9, 9), 9)

    def test_all_healthy(self):
        out = fault.sa_statuses(np.ones(81, dtype=np.uint8), self.part)
        np.testing.assert_array_equal(out, np.ones(9, dtype=np.uint8))

    def test_single_fault_flags_single_sa(self):
        statuses = np.ones(81, dtype=np.uint8)
        statuses[self.part.members(5)[2]] = 0
        out = fault.sa_statuses(statuses, self.part)
        assert out[5] == 0 and int(out.sum()) == 8

    def test_fifteen_faults_over_four_sas(self):
        rng = np.random.default_rng(5)
        target_sas = [0, 2, 5, 7]
        statuses = np.ones(81, dtype=np.uint8)
        planted = set()
        for i in range(15):
            sa = target_sas[i % 4]
            members = self.part.members(sa)
            choice = int(rng.choice(members))
            while choice in planted:
                choice = int(rng.choice(members))
            planted.add(choice)
            statuses[choice] = 0
        out = fault.sa_statuses(statuses, self.part)
        assert int((out == 0).sum()) == len(set(self.part.element_to_sa[statuses == 0])) == 4

    def test_monotone_under_flips(self):
        rng = np.random.default_rng(6)
        statuses = fault.sample_fault_scenario(rng, 81, 15)
        before = fault.sa_statuses(statuses, self.part)
        healthy = np.flatnonzero(statuses == 1)
        flip = int(rng.choice(healthy))
        statuses[flip] = 0
        after = fault.sa_statuses(statuses, self.part)
        assert np.all(after <= before)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            fault.sa_statuses(np.ones(80, dtype=np.uint8), self.part)


class TestSaIsolationMask:
    def setup_method(self):
        self.part = fault.sa_partition(geom(9, 9), 9)

    def test_healthy_target_keeps_nine_ones(self):
        out = fault.sa_isolation_mask(self.part, 0, np.ones(81, dtype=np.uint8))
        assert int(out.sum()) == 9
        np.testing.assert_array_equal(np.flatnonzero(out), self.part.members(0))

    def test_fully_faulty_target_gives_zeros(self):
        statuses = np.ones(81, dtype=np.uint8)
        statuses[self.part.members(4)] = 0
        out = fault.sa_isolation_mask(self.part, 4, statuses)
        np.testing.assert_array_equal(out, np.zeros(81, dtype=np.uint8))

    def test_masking_fixed_point(self):
        statuses = fault.sample_fault_scenario(np.random.default_rng(7), 81, 15)
        out = fault.sa_isolation_mask(self.part, 3, statuses)
        indicator = np.zeros(81, dtype=np.uint8)
        indicator[self.part.members(3)] = 1
        np.testing.assert_array_equal(out * indicator, out)

    def test_index_out_of_range(self):
        with pytest.raises(IndexError):
            fault.sa_isolation_mask(self.part, 9, np.ones(81, dtype=np.uint8))
