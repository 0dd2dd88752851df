"""Received-signal synthesis at the panel and the base station.

The complete panel signal is ``y_r = g_ur * s``; the base-station signal is
``y = H_rb @ diag(profile) @ g_ur * s + n``.  SNR is defined per receive
antenna on the noiseless signal: noise variance per entry is
``mean(|y|^2) * 10^(-snr_db/10)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, SignalError

SNR_DB_CAP = 300.0
"""SNR values above this are treated as noiseless for numerical purposes."""


@dataclass(frozen=True)
class Pilot:
    """Pilot symbol transmitted by the user; must be non-zero."""

    symbol: complex = 1.0 + 0.0j

    def __post_init__(self):
        if abs(self.symbol) == 0.0 or not math.isfinite(abs(self.symbol)):
            raise ValueError("pilot symbol must be non-zero and finite")


@dataclass(frozen=True)
class NoiseSpec:
    """Additive white Gaussian noise level, parameterized by SNR in dB."""

    snr_db: float

    def __post_init__(self):
        if math.isnan(self.snr_db):
            raise ValueError("snr_db must not be NaN")


def ris_received(g_ur: np.ndarray, pilot: Pilot) -> np.ndarray:
    """Complete (fault-independent) signal at the panel: ``g_ur * s``.

    The physically observed, incomplete signal is this vector masked by the
    element statuses; apply :func:`risfaultsim.fault.effective_profile`
    machinery for that.
    """
    return np.asarray(g_ur, dtype=np.complex128) * pilot.symbol


def bs_received(
    h_rb: np.ndarray,
    profile: np.ndarray,
    g_ur: np.ndarray,
    pilot: Pilot,
    noise: tuple[NoiseSpec, np.random.Generator] | None = None,
) -> np.ndarray:
    """Base-station signal ``H_rb @ diag(profile) @ g_ur * s``, plus optional noise."""
    h_rb = np.asarray(h_rb, dtype=np.complex128)
    profile = np.asarray(profile, dtype=np.complex128)
    g_ur = np.asarray(g_ur, dtype=np.complex128)
    if h_rb.ndim != 2 or h_rb.shape[1] != profile.shape[0] or profile.shape != g_ur.shape:
        raise DimensionError(
            f"inconsistent shapes: h_rb {h_rb.shape}, profile {profile.shape}, g_ur {g_ur.shape}"
        )
    y = h_rb @ (profile * g_ur) * pilot.symbol
    if noise is not None:
        spec, rng = noise
        y = add_awgn(y, spec, rng)
    return y


def effective_bs_matrix(h_rb: np.ndarray, g_ur: np.ndarray, pilot: Pilot) -> np.ndarray:
    """Measurement operator A with ``A @ profile`` equal to the noiseless BS signal.

    ``A = H_rb @ diag(g_ur) * s``; classical detectors work on the linear
    model ``y = A @ profile + n``.
    """
    h_rb = np.asarray(h_rb, dtype=np.complex128)
    g_ur = np.asarray(g_ur, dtype=np.complex128)
    if h_rb.ndim != 2 or h_rb.shape[1] != g_ur.shape[0]:
        raise DimensionError(f"h_rb {h_rb.shape} incompatible with g_ur {g_ur.shape}")
    return h_rb * g_ur[np.newaxis, :] * pilot.symbol


def noise_std_per_component(signal: np.ndarray, snr_db: float) -> float:
    """Std of each real/imag noise component for the per-antenna SNR convention."""
    signal = np.asarray(signal)
    if signal.size == 0:
        raise SignalError("cannot attach noise to an empty signal")
    power = float(np.mean(np.abs(signal) ** 2))
    eff_snr = min(snr_db, SNR_DB_CAP)
    if power == 0.0:
        if math.isinf(eff_snr):
            return 0.0
        raise SignalError("SNR is undefined for an identically zero signal")
    variance = power * 10.0 ** (-eff_snr / 10.0)
    return math.sqrt(variance / 2.0)


def add_awgn(signal: np.ndarray, spec: NoiseSpec, rng: np.random.Generator) -> np.ndarray:
    """Add i.i.d. circularly-symmetric complex Gaussian noise at the given SNR."""
    signal = np.asarray(signal, dtype=np.complex128)
    std = noise_std_per_component(signal, spec.snr_db)
    noise = std * (rng.standard_normal(signal.shape) + 1j * rng.standard_normal(signal.shape))
    return signal + noise
