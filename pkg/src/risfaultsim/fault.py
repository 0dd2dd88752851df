"""Faulty-element model: status vectors, effective profiles, and sub-array labeling.

Element statuses are uint8 vectors with 1 = functioning and 0 = faulty.
Sub-array (SA) statuses are uint8 vectors with 1 = healthy and 0 = contains
at least one fault.  Both are plain numpy arrays; the helpers below validate
shape and content where it matters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channelgeom import UpaGeometry
from .errors import DimensionError, PartitionError


@dataclass(frozen=True)
class FaultModelParams:
    """Strength threshold below which an element counts as faulty.

    ``strength_threshold`` is assumed to sit far below ``min_receive_power``;
    both are linear powers in watts.
    """

    strength_threshold: float = 1e-12
    min_receive_power: float = 1e-3

    def __post_init__(self):
        if not (0.0 < self.strength_threshold < self.min_receive_power):
            raise ValueError(
                "need 0 < strength_threshold < min_receive_power, got "
                f"{self.strength_threshold} vs {self.min_receive_power}"
            )


def classify_element(strength: float, params: FaultModelParams) -> int:
    """Status of one element from its received signal strength (watts).

    At or below the threshold the element is declared faulty (0), above it
    functioning (1).
    """
    if strength < 0 or not math.isfinite(strength):
        raise ValueError(f"signal strength must be finite and non-negative, got {strength}")
    return 0 if strength <= params.strength_threshold else 1


def as_status_vector(statuses: np.ndarray | list) -> np.ndarray:
    """Validate and normalize a binary element/SA status vector to uint8."""
    arr = np.asarray(statuses)
    if arr.ndim != 1:
        raise DimensionError("status vector must be one-dimensional")
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError("status entries must be 0 or 1")
    return arr.astype(np.uint8)


def unity_profile(n_elements: int) -> np.ndarray:
    """The all-ones phase profile (no phase shifts applied)."""
    return np.ones(n_elements, dtype=np.complex128)


def effective_profile(phases: np.ndarray, statuses: np.ndarray) -> np.ndarray:
    """Elementwise product of the phase profile with the status vector.

    Faulty entries come out exactly zero; functioning entries keep their
    unit-modulus phase.
    """
    phases = np.asarray(phases, dtype=np.complex128)
    st = as_status_vector(statuses)
    if phases.shape != st.shape:
        raise DimensionError(
            f"profile length {phases.shape} does not match statuses {st.shape}"
        )
    return phases * st


def sample_fault_scenario(
    rng: np.random.Generator, n_elements: int, max_faulty: int
) -> np.ndarray:
    """Draw a status vector with a uniformly random number of faults.

    The fault count is uniform on {0, ..., max_faulty} and the faulty
    positions are a uniform subset of that size.
    """
    if max_faulty > n_elements or max_faulty < 0:
        raise ValueError(f"max_faulty must be in [0, {n_elements}], got {max_faulty}")
    statuses = np.ones(n_elements, dtype=np.uint8)
    n_faulty = int(rng.integers(0, max_faulty + 1))
    if n_faulty > 0:
        faulty = rng.choice(n_elements, size=n_faulty, replace=False)
        statuses[faulty] = 0
    return statuses


@dataclass(frozen=True)
class SaPartition:
    """Partition of a panel into K equally sized, contiguous sub-arrays."""

    k_count: int
    sa_size: int
    element_to_sa: np.ndarray

    def __post_init__(self):
        counts = np.bincount(self.element_to_sa, minlength=self.k_count)
        if len(counts) != self.k_count or not np.all(counts == self.sa_size):
            raise PartitionError("every SA must contain exactly sa_size elements")

    def members(self, sa_index: int) -> np.ndarray:
        """Flat element indices belonging to one SA, ascending."""
        if not (0 <= sa_index < self.k_count):
            raise IndexError(f"SA index {sa_index} out of range [0, {self.k_count})")
        return np.flatnonzero(self.element_to_sa == sa_index)


def sa_partition(ris_geom: UpaGeometry, k_count: int) -> SaPartition:
    """Split a panel into K sub-arrays of equal size.

    If K square tiles of side sqrt(N/K) fit the panel exactly, the SAs are
    those tiles in row-major tile order (e.g. a 9x9 panel with K=9 gives
    nine 3x3 tiles).  Otherwise the SAs are contiguous chunks of the
    elevation-major element order.  K must divide the element count.
    """
    n = ris_geom.n_elements
    if k_count < 1:
        raise PartitionError(f"SA count must be positive, got {k_count}")
    if n % k_count != 0:
        raise PartitionError(f"SA count {k_count} does not divide element count {n}")
    sa_size = n // k_count

    element_to_sa = np.empty(n, dtype=np.int64)
    side = math.isqrt(sa_size)
    tileable = (
        side * side == sa_size
        and ris_geom.n_elev % side == 0
        and ris_geom.n_azim % side == 0
        and (ris_geom.n_elev // side) * (ris_geom.n_azim // side) == k_count
    )
    if tileable:
        tiles_per_row = ris_geom.n_azim // side
        for m in range(ris_geom.n_elev):
            for nn in range(ris_geom.n_azim):
                tile = (m // side) * tiles_per_row + (nn // side)
                element_to_sa[m * ris_geom.n_azim + nn] = tile
    else:
        element_to_sa[:] = np.repeat(np.arange(k_count), sa_size)
    return SaPartition(k_count=k_count, sa_size=sa_size, element_to_sa=element_to_sa)


def sa_statuses(statuses: np.ndarray, partition: SaPartition) -> np.ndarray:
    """SA status vector: 0 wherever the SA contains at least one faulty element."""
    st = as_status_vector(statuses)
    if st.shape[0] != partition.element_to_sa.shape[0]:
        raise DimensionError(
            f"statuses length {st.shape[0]} does not match partition over "
            f"{partition.element_to_sa.shape[0]} elements"
        )
    healthy = np.ones(partition.k_count, dtype=np.uint8)
    faulty_sas = np.unique(partition.element_to_sa[st == 0])
    healthy[faulty_sas] = 0
    return healthy


def sa_isolation_mask(
    partition: SaPartition, target_sa: int, statuses: np.ndarray
) -> np.ndarray:
    """Status vector with every element outside ``target_sa`` switched off.

    Models the probing mode where a single SA is left active: elements inside
    the target keep their true status, all others read 0.
    """
    st = as_status_vector(statuses)
    if st.shape[0] != partition.element_to_sa.shape[0]:
        raise DimensionError("statuses length does not match partition")
    if not (0 <= target_sa < partition.k_count):
        raise IndexError(f"SA index {target_sa} out of range [0, {partition.k_count})")
    masked = np.zeros_like(st)
    inside = partition.element_to_sa == target_sa
    masked[inside] = st[inside]
    return masked
