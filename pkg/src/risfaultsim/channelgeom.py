"""Panel geometry, array response vectors, and multipath channel synthesis.

Conventions used throughout the package:

* Panels are uniform planar arrays indexed elevation-major: element
  ``(m, n)`` (row ``m`` in the elevation plane, column ``n`` in the azimuth
  plane) sits at flat index ``m * n_azim + n``.
* Angles live in ``(0, pi]``.  Directions are folded into that domain by
  taking the absolute value of the horizontal bearing; the array response
  depends on the azimuth only through its cosine, so the fold is lossless.
  Values that come out exactly 0 are clamped to the smallest positive float.
* All sampling takes an explicit ``numpy.random.Generator``; identical
  generators produce bit-identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, GeometryError, PathSetError

SPEED_OF_LIGHT = 299_792_458.0
"""Propagation speed used to derive wavelengths from carrier frequency, m/s."""

_SMALLEST_ANGLE = math.ulp(0.0)

# Power weight of the geometric (anchored) first path relative to the
# scattered paths; keeps a dominant position-bearing component in sampled
# channels.
ANCHOR_POWER_WEIGHT = 10.0


def wavelength_of(carrier_hz: float) -> float:
    """Carrier wavelength in meters for a carrier frequency in Hz."""
    if carrier_hz <= 0:
        raise GeometryError(f"carrier frequency must be positive, got {carrier_hz}")
    return SPEED_OF_LIGHT / carrier_hz


def _fold_angle(value: float) -> float:
    """Map an angle into (0, pi], clamping exact zeros to the smallest positive float."""
    folded = abs(value)
    if folded > math.pi:
        folded = math.pi
    if folded == 0.0:
        return _SMALLEST_ANGLE
    return folded


@dataclass(frozen=True)
class Position3D:
    """A point in 3D space, meters."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"coordinate {name} must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)


@dataclass(frozen=True)
class UpaGeometry:
    """Uniform planar array: ``n_elev`` x ``n_azim`` elements, spacing in meters."""

    n_elev: int
    n_azim: int
    spacing: float
    wavelength: float

    def __post_init__(self):
        if self.n_elev < 1 or self.n_azim < 1:
            raise GeometryError(
                f"panel dimensions must be positive, got {self.n_elev}x{self.n_azim}"
            )
        if self.spacing <= 0:
            raise GeometryError(f"element spacing must be positive, got {self.spacing}")
        if self.wavelength <= 0:
            raise GeometryError(f"wavelength must be positive, got {self.wavelength}")

    @property
    def n_elements(self) -> int:
        return self.n_elev * self.n_azim

    @classmethod
    def half_wavelength(cls, n_elev: int, n_azim: int, carrier_hz: float) -> "UpaGeometry":
        """Panel with the customary half-wavelength element spacing."""
        lam = wavelength_of(carrier_hz)
        return cls(n_elev=n_elev, n_azim=n_azim, spacing=lam / 2.0, wavelength=lam)


@dataclass(frozen=True)
class PathAngles:
    """Elevation/azimuth pair, radians, each in (0, pi]."""

    elevation: float
    azimuth: float

    def __post_init__(self):
        for name in ("elevation", "azimuth"):
            v = getattr(self, name)
            if not (0.0 < v <= math.pi):
                raise ValueError(f"{name} must lie in (0, pi], got {v}")


@dataclass(frozen=True)
class Path:
    """One propagation path: complex gain plus arrival (and optionally departure) angles."""

    gain: complex
    arrival: PathAngles
    departure: PathAngles | None = None

    def __post_init__(self):
        if not (math.isfinite(self.gain.real) and math.isfinite(self.gain.imag)):
            raise ValueError("path gain must be finite")


@dataclass(frozen=True)
class PathSet:
    """Ordered collection of paths; departure angles are all present or all absent."""

    paths: tuple[Path, ...]

    def __post_init__(self):
        if len(self.paths) == 0:
            raise PathSetError("path set must be non-empty")
        has_dep = [p.departure is not None for p in self.paths]
        if any(has_dep) and not all(has_dep):
            raise PathSetError("departure angles must be present for all paths or none")

    def __len__(self) -> int:
        return len(self.paths)

    @property
    def has_departure(self) -> bool:
        return self.paths[0].departure is not None

    def gains(self) -> np.ndarray:
        return np.array([p.gain for p in self.paths], dtype=np.complex128)


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of the user->panel vector and panel->receiver matrix."""

    g_ur: np.ndarray
    h_rb: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.g_ur.ndim != 1 or self.h_rb.ndim != 2:
            raise DimensionError("g_ur must be a vector and h_rb a matrix")
        if self.h_rb.shape[1] != self.g_ur.shape[0]:
            raise DimensionError(
                f"h_rb has {self.h_rb.shape[1]} columns but g_ur has length {self.g_ur.shape[0]}"
            )
        if not (np.all(np.isfinite(self.g_ur)) and np.all(np.isfinite(self.h_rb))):
            raise ValueError("channel entries must be finite")


def elevation_factor(geom: UpaGeometry, angles: PathAngles) -> np.ndarray:
    """Elevation-plane response: entry m is exp(-j*2*pi*spacing*m*cos(el)/wavelength)."""
    m = np.arange(geom.n_elev)
    phase = -2.0 * np.pi * geom.spacing * m * np.cos(angles.elevation) / geom.wavelength
    return np.exp(1j * phase)


def azimuth_factor(geom: UpaGeometry, angles: PathAngles) -> np.ndarray:
    """Azimuth-plane response: entry n is exp(-j*2*pi*spacing*n*sin(el)*cos(az)/wavelength)."""
    n = np.arange(geom.n_azim)
    phase = (
        -2.0
        * np.pi
        * geom.spacing
        * n
        * np.sin(angles.elevation)
        * np.cos(angles.azimuth)
        / geom.wavelength
    )
    return np.exp(1j * phase)


def steering_vector(geom: UpaGeometry, angles: PathAngles) -> np.ndarray:
    """Array response vector of a planar panel for a plane wave from ``angles``.

    The Kronecker product of the elevation and azimuth factors, so element
    ``(m, n)`` carries phase ``-2*pi*spacing*(m*cos(el) + n*sin(el)*cos(az))
    / wavelength`` at flat index ``m * n_azim + n``.  Entry 0 is exactly 1
    and every entry has unit modulus.
    """
    return np.kron(elevation_factor(geom, angles), azimuth_factor(geom, angles))


def angles_between(origin: Position3D, target: Position3D) -> PathAngles:
    """Elevation/azimuth of the displacement from ``origin`` to ``target``.

    Elevation is the polar angle of the displacement (arccos of the vertical
    component over the distance); azimuth is the horizontal bearing folded
    into (0, pi].  Coincident points are rejected.
    """
    d = target.as_array() - origin.as_array()
    dist = float(np.linalg.norm(d))
    if dist == 0.0:
        raise GeometryError("cannot compute angles between coincident points")
    elevation = _fold_angle(math.acos(max(-1.0, min(1.0, d[2] / dist))))
    azimuth = _fold_angle(math.atan2(d[1], d[0]))
    return PathAngles(elevation=elevation, azimuth=azimuth)


ANCHOR_GAIN_MODES = ("random", "fixed", "geometric")


def sample_path_set(
    rng: np.random.Generator,
    count: int,
    geometric_anchor: tuple[Position3D, Position3D] | None = None,
    gain_scale: float = 1.0,
    with_departure: bool = False,
    anchor_gain: str = "random",
    anchor_ref_distance: float = 1.0,
) -> PathSet:
    """Draw a random multipath set.

    Scattered angles are uniform on (0, pi]^2 and gains are
    circularly-symmetric complex Gaussian with per-path variance
    ``gain_scale**2``.  When ``geometric_anchor = (source, panel)`` is given,
    path 1 takes its arrival angles from the panel looking toward the source
    (and, with ``with_departure``, departure angles from the source looking
    toward the panel) and carries ``ANCHOR_POWER_WEIGHT`` times the scattered
    per-path power.

    ``anchor_gain`` selects the anchor's gain model: ``"random"`` draws it
    like the scattered paths (scaled up), ``"fixed"`` pins it to the real
    value ``gain_scale * sqrt(ANCHOR_POWER_WEIGHT)``, and ``"geometric"``
    additionally applies free-space-style distance decay
    ``anchor_ref_distance / |source - panel|``.

    Draw order is fixed (arrival elevations, arrival azimuths, departure
    elevations, departure azimuths, gain reals, gain imags) so equal seeds
    give bit-identical path sets.
    """
    if count < 1:
        raise PathSetError(f"path count must be >= 1, got {count}")
    if anchor_gain not in ANCHOR_GAIN_MODES:
        raise ValueError(f"anchor_gain must be one of {ANCHOR_GAIN_MODES}, got {anchor_gain!r}")

    n_random = count - 1 if geometric_anchor is not None else count
    # 1 - random() lands in (0, 1], keeping angles inside the open-at-zero domain
    arr_elev = np.pi * (1.0 - rng.random(n_random))
    arr_azim = np.pi * (1.0 - rng.random(n_random))
    if with_departure:
        dep_elev = np.pi * (1.0 - rng.random(n_random))
        dep_azim = np.pi * (1.0 - rng.random(n_random))
    gains = gain_scale * (rng.standard_normal(count) + 1j * rng.standard_normal(count))
    gains /= math.sqrt(2.0)

    paths: list[Path] = []
    offset = 0
    if geometric_anchor is not None:
        source, panel = geometric_anchor
        arrival = angles_between(panel, source)
        departure = angles_between(source, panel) if with_departure else None
        weight = math.sqrt(ANCHOR_POWER_WEIGHT)
        if anchor_gain == "random":
            gain = complex(gains[0] * weight)
        elif anchor_gain == "fixed":
            gain = complex(gain_scale * weight)
        else:
            distance = float(np.linalg.norm(source.as_array() - panel.as_array()))
            gain = complex(gain_scale * weight * anchor_ref_distance / distance)
        paths.append(Path(gain=gain, arrival=arrival, departure=departure))
        offset = 1
    for i in range(n_random):
        arrival = PathAngles(elevation=float(arr_elev[i]), azimuth=float(arr_azim[i]))
        departure = (
            PathAngles(elevation=float(dep_elev[i]), azimuth=float(dep_azim[i]))
            if with_departure
            else None
        )
        paths.append(Path(gain=complex(gains[offset + i]), arrival=arrival, departure=departure))
    return PathSet(paths=tuple(paths))


def mu_ris_channel(paths: PathSet, ris_geom: UpaGeometry) -> np.ndarray:
    """User-to-panel channel vector: gain-weighted sum of arrival responses."""
    if paths.has_departure:
        raise PathSetError("user->panel paths must not carry departure angles")
    g = np.zeros(ris_geom.n_elements, dtype=np.complex128)
    for p in paths.paths:
        g += p.gain * steering_vector(ris_geom, p.arrival)
    return g


def ris_bs_channel(paths: PathSet, bs_geom: UpaGeometry, ris_geom: UpaGeometry) -> np.ndarray:
    """Panel-to-receiver channel matrix: sum of gain-weighted outer products.

    Each path contributes ``gain * a_rx(arrival) @ a_panel(departure)^H``;
    the result has shape (receiver elements, panel elements).
    """
    if not paths.has_departure:
        raise PathSetError("panel->receiver paths must carry departure angles")
    h = np.zeros((bs_geom.n_elements, ris_geom.n_elements), dtype=np.complex128)
    for p in paths.paths:
        a_rx = steering_vector(bs_geom, p.arrival)
        a_tx = steering_vector(ris_geom, p.departure)
        h += p.gain * np.outer(a_rx, a_tx.conj())
    return h
