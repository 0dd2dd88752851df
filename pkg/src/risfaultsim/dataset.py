"""Dataset generation, splitting, and bit-exact binary persistence.

A dataset is a pair of files: ``<name>.bin`` holding fixed-width binary
records and ``<name>.manifest.json`` describing how they were produced.  The
manifest plus master seed fully determine every byte of the binary file, so
datasets can be regenerated or produced in parallel with identical output.

Binary layout (all integers little-endian)::

    8 bytes   magic  b"RISFDSET"
    u32       format version
    u64       sample count
    records   fixed width, see below
    8 bytes   blake2b-64 digest of everything above

Detection record::

    bs_signal          M  complex64 (interleaved float32 re, im)
    element_statuses   N  uint8
    sa_statuses        K  uint8
    mu_position        3  float64
    snr_db             1  float64
    crc32              u32 over the bytes above

Localization record::

    bs_signal            M  complex64
    ris_signal_complete  N  complex64   (pre-mask panel signal)
    element_statuses     N  uint8
    mu_position          3  float64
    snr_db               1  float64
    crc32                u32

Signals are quantized to complex64 when the sample is created, so in-memory
samples round-trip through the file bit-exactly.
"""

from __future__ import annotations

import hashlib
import json
import struct
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import channelgeom as cg
from . import fault
from . import signal as sig
from .errors import (
    ChecksumError,
    DataFormatError,
    TruncatedFileError,
    VersionMismatchError,
)
from .seeding import STREAM_CHANNEL, STREAM_SPLIT, derived_rng, sample_rng

MAGIC = b"RISFDSET"
FORMAT_VERSION = 1

KIND_DETECTION = "detection"
KIND_LOCALIZATION = "localization"


@dataclass(frozen=True)
class GridSpec:
    """Union of horizontal square grids the user position is drawn from."""

    x0: float
    y0: float
    side: float
    heights: tuple[float, ...]

    def __post_init__(self):
        if self.side <= 0 or len(self.heights) == 0:
            raise ValueError("grid needs a positive side and at least one height")


@dataclass(frozen=True)
class DatasetManifest:
    """Everything needed to regenerate a dataset byte for byte."""

    kind: str
    sample_count: int
    split_ratio: float
    master_seed: int
    carrier_hz: float
    bs_shape: tuple[int, int]
    ris_shape: tuple[int, int]
    bs_spacing: float
    ris_spacing: float
    bs_position: cg.Position3D
    ris_position: cg.Position3D
    mu_position: cg.Position3D
    grid: GridSpec | None
    path_count_mu_ris: int
    path_count_ris_bs: int
    max_faulty: int
    sa_count: int
    snr_db_choices: tuple[float, ...]
    gain_scale: float = 1.0
    redraw_channels: bool = True
    isolation_mode: bool = False
    channel_seed: int | None = None
    fixed_ris_bs_link: bool = False
    anchor_gain: str = "random"
    anchor_ref_distance: float = 1.0
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        if self.kind not in (KIND_DETECTION, KIND_LOCALIZATION):
            raise ValueError(f"unknown dataset kind {self.kind!r}")
        if self.sample_count < 1:
            raise ValueError("sample_count must be positive")
        if not (0.0 < self.split_ratio < 1.0):
            raise ValueError("split_ratio must lie in (0, 1)")
        if self.kind == KIND_LOCALIZATION and self.grid is None:
            raise ValueError("localization datasets need a grid spec")
        if len(self.snr_db_choices) == 0:
            raise ValueError("snr_db_choices must be non-empty")
        n = self.ris_shape[0] * self.ris_shape[1]
        if self.max_faulty > n:
            raise ValueError("max_faulty exceeds the element count")
        if n % self.sa_count != 0:
            raise ValueError("sa_count must divide the element count")
        if not self.redraw_channels and self.kind != KIND_DETECTION:
            raise ValueError("fixed-channel mode is only supported for detection datasets")
        if self.fixed_ris_bs_link and self.kind != KIND_LOCALIZATION:
            raise ValueError("fixed_ris_bs_link applies to localization datasets only")
        if self.channel_seed is not None and self.redraw_channels and not self.fixed_ris_bs_link:
            raise ValueError("channel_seed only applies when a link is held fixed")
        if self.anchor_gain not in cg.ANCHOR_GAIN_MODES:
            raise ValueError(f"anchor_gain must be one of {cg.ANCHOR_GAIN_MODES}")
        if self.anchor_ref_distance <= 0:
            raise ValueError("anchor_ref_distance must be positive")

    @property
    def effective_channel_seed(self) -> int:
        """Seed of the shared channel draw in fixed-channel mode.

        Defaults to the master seed; setting it explicitly lets several
        datasets (e.g. full-panel and single-SA probing runs) share one
        physical channel while drawing independent scenarios.
        """
        return self.master_seed if self.channel_seed is None else self.channel_seed

    @property
    def bs_geometry(self) -> cg.UpaGeometry:
        lam = cg.wavelength_of(self.carrier_hz)
        return cg.UpaGeometry(self.bs_shape[0], self.bs_shape[1], self.bs_spacing, lam)

    @property
    def ris_geometry(self) -> cg.UpaGeometry:
        lam = cg.wavelength_of(self.carrier_hz)
        return cg.UpaGeometry(self.ris_shape[0], self.ris_shape[1], self.ris_spacing, lam)

    @property
    def m_antennas(self) -> int:
        return self.bs_shape[0] * self.bs_shape[1]

    @property
    def n_elements(self) -> int:
        return self.ris_shape[0] * self.ris_shape[1]

    def partition(self) -> fault.SaPartition:
        return fault.sa_partition(self.ris_geometry, self.sa_count)

    def to_json_dict(self) -> dict:
        d = {
            "format_version": self.format_version,
            "kind": self.kind,
            "sample_count": self.sample_count,
            "split_ratio": self.split_ratio,
            "master_seed": self.master_seed,
            "carrier_hz": self.carrier_hz,
            "bs_shape": list(self.bs_shape),
            "ris_shape": list(self.ris_shape),
            "bs_spacing": self.bs_spacing,
            "ris_spacing": self.ris_spacing,
            "bs_position": [self.bs_position.x, self.bs_position.y, self.bs_position.z],
            "ris_position": [self.ris_position.x, self.ris_position.y, self.ris_position.z],
            "mu_position": [self.mu_position.x, self.mu_position.y, self.mu_position.z],
            "grid": None,
            "path_count_mu_ris": self.path_count_mu_ris,
            "path_count_ris_bs": self.path_count_ris_bs,
            "max_faulty": self.max_faulty,
            "sa_count": self.sa_count,
            "snr_db_choices": list(self.snr_db_choices),
            "gain_scale": self.gain_scale,
            "redraw_channels": self.redraw_channels,
            "isolation_mode": self.isolation_mode,
            "channel_seed": self.channel_seed,
            "fixed_ris_bs_link": self.fixed_ris_bs_link,
            "anchor_gain": self.anchor_gain,
            "anchor_ref_distance": self.anchor_ref_distance,
        }
        if self.grid is not None:
            d["grid"] = {
                "x0": self.grid.x0,
                "y0": self.grid.y0,
                "side": self.grid.side,
                "heights": list(self.grid.heights),
            }
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "DatasetManifest":
        grid = None
        if d.get("grid") is not None:
            g = d["grid"]
            grid = GridSpec(x0=g["x0"], y0=g["y0"], side=g["side"], heights=tuple(g["heights"]))
        return cls(
            kind=d["kind"],
            sample_count=int(d["sample_count"]),
            split_ratio=float(d["split_ratio"]),
            master_seed=int(d["master_seed"]),
            carrier_hz=float(d["carrier_hz"]),
            bs_shape=tuple(d["bs_shape"]),
            ris_shape=tuple(d["ris_shape"]),
            bs_spacing=float(d["bs_spacing"]),
            ris_spacing=float(d["ris_spacing"]),
            bs_position=cg.Position3D(*d["bs_position"]),
            ris_position=cg.Position3D(*d["ris_position"]),
            mu_position=cg.Position3D(*d["mu_position"]),
            grid=grid,
            path_count_mu_ris=int(d["path_count_mu_ris"]),
            path_count_ris_bs=int(d["path_count_ris_bs"]),
            max_faulty=int(d["max_faulty"]),
            sa_count=int(d["sa_count"]),
            snr_db_choices=tuple(float(s) for s in d["snr_db_choices"]),
            gain_scale=float(d["gain_scale"]),
            redraw_channels=bool(d["redraw_channels"]),
            isolation_mode=bool(d["isolation_mode"]),
            channel_seed=(None if d.get("channel_seed") is None else int(d["channel_seed"])),
            fixed_ris_bs_link=bool(d.get("fixed_ris_bs_link", False)),
            anchor_gain=str(d.get("anchor_gain", "random")),
            anchor_ref_distance=float(d.get("anchor_ref_distance", 1.0)),
            format_version=int(d["format_version"]),
        )


@dataclass(frozen=True)
class DetectionSample:
    bs_signal: np.ndarray
    element_statuses: np.ndarray
    sa_statuses: np.ndarray
    mu_position: cg.Position3D
    snr_db: float


@dataclass(frozen=True)
class LocalizationSample:
    bs_signal: np.ndarray
    ris_signal_complete: np.ndarray
    element_statuses: np.ndarray
    mu_position: cg.Position3D
    snr_db: float


def default_detection_manifest(
    sample_count: int = 20_000, master_seed: int = 0, **overrides
) -> DatasetManifest:
    """Detection dataset with the standard simulation setup.

    90 GHz carrier, 9x9 panel at (15, 0, 2) m, 4x4 base station at
    (0, 10, 1.5) m, user fixed at (30, 6, 0.5) m, 10 paths per link, at most
    15 faults, 9 sub-arrays.
    """
    lam = cg.wavelength_of(90e9)
    base = dict(
        kind=KIND_DETECTION,
        sample_count=sample_count,
        split_ratio=0.8,
        master_seed=master_seed,
        carrier_hz=90e9,
        bs_shape=(4, 4),
        ris_shape=(9, 9),
        bs_spacing=lam / 2.0,
        ris_spacing=lam / 2.0,
        bs_position=cg.Position3D(0.0, 10.0, 1.5),
        ris_position=cg.Position3D(15.0, 0.0, 2.0),
        mu_position=cg.Position3D(30.0, 6.0, 0.5),
        grid=None,
        path_count_mu_ris=10,
        path_count_ris_bs=10,
        max_faulty=15,
        sa_count=9,
        snr_db_choices=(30.0,),
        gain_scale=1.0,
    )
    base.update(overrides)
    return DatasetManifest(**base)


def default_localization_manifest(
    sample_count: int = 60_000, master_seed: int = 0, **overrides
) -> DatasetManifest:
    """Localization dataset: user uniform over three 10 m x 10 m grids.

    The grids sit at heights 0.5, 1.5 and 2 m and are centered on the
    detection-time user position.
    """
    base = dict(
        kind=KIND_LOCALIZATION,
        grid=GridSpec(x0=25.0, y0=1.0, side=10.0, heights=(0.5, 1.5, 2.0)),
    )
    base.update(overrides)
    return default_detection_manifest(sample_count, master_seed, **base)


def _fixed_channels(manifest: DatasetManifest) -> tuple[np.ndarray, np.ndarray]:
    """One shared channel draw for fixed-channel detection datasets."""
    rng = derived_rng(manifest.effective_channel_seed, STREAM_CHANNEL)
    paths_ur = cg.sample_path_set(
        rng,
        manifest.path_count_mu_ris,
        geometric_anchor=(manifest.mu_position, manifest.ris_position),
        gain_scale=manifest.gain_scale,
    )
    paths_rb = cg.sample_path_set(
        rng,
        manifest.path_count_ris_bs,
        geometric_anchor=(manifest.ris_position, manifest.bs_position),
        gain_scale=manifest.gain_scale,
        with_departure=True,
    )
    g_ur = cg.mu_ris_channel(paths_ur, manifest.ris_geometry)
    h_rb = cg.ris_bs_channel(paths_rb, manifest.bs_geometry, manifest.ris_geometry)
    return g_ur, h_rb


def _draw_ur(manifest: DatasetManifest, rng: np.random.Generator, mu: cg.Position3D) -> np.ndarray:
    paths_ur = cg.sample_path_set(
        rng,
        manifest.path_count_mu_ris,
        geometric_anchor=(mu, manifest.ris_position),
        gain_scale=manifest.gain_scale,
        anchor_gain=manifest.anchor_gain,
        anchor_ref_distance=manifest.anchor_ref_distance,
    )
    return cg.mu_ris_channel(paths_ur, manifest.ris_geometry)


def _draw_rb(manifest: DatasetManifest, rng: np.random.Generator) -> np.ndarray:
    paths_rb = cg.sample_path_set(
        rng,
        manifest.path_count_ris_bs,
        geometric_anchor=(manifest.ris_position, manifest.bs_position),
        gain_scale=manifest.gain_scale,
        with_departure=True,
        anchor_gain=manifest.anchor_gain,
        anchor_ref_distance=manifest.anchor_ref_distance,
    )
    return cg.ris_bs_channel(paths_rb, manifest.bs_geometry, manifest.ris_geometry)


def _draw_channels(
    manifest: DatasetManifest, rng: np.random.Generator, mu: cg.Position3D
) -> tuple[np.ndarray, np.ndarray]:
    g_ur = _draw_ur(manifest, rng, mu)
    h_rb = _draw_rb(manifest, rng)
    return g_ur, h_rb


def _fixed_rb_channel(manifest: DatasetManifest) -> np.ndarray:
    """The shared panel->receiver matrix when that link is held fixed."""
    rng = derived_rng(manifest.effective_channel_seed, STREAM_CHANNEL)
    return _draw_rb(manifest, rng)


def channels_for_sample(
    manifest: DatasetManifest, index: int
) -> tuple[np.ndarray, np.ndarray]:
    """Re-derive the channel pair behind sample ``index``.

    Consumes the per-sample stream exactly like generation does, so solvers
    working on stored records can rebuild the measurement operator.
    """
    if not manifest.redraw_channels:
        return _fixed_channels(manifest)
    rng = sample_rng(manifest.master_seed, index)
    if manifest.kind == KIND_DETECTION:
        return _draw_channels(manifest, rng, manifest.mu_position)
    grid = manifest.grid
    plane = int(rng.integers(len(grid.heights)))
    mu = cg.Position3D(
        grid.x0 + grid.side * rng.random(),
        grid.y0 + grid.side * rng.random(),
        grid.heights[plane],
    )
    if manifest.fixed_ris_bs_link:
        return _draw_ur(manifest, rng, mu), _fixed_rb_channel(manifest)
    return _draw_channels(manifest, rng, mu)


def generate_detection_sample(
    manifest: DatasetManifest,
    index: int,
    fixed: tuple[np.ndarray, np.ndarray] | None = None,
) -> DetectionSample:
    """Sample ``index`` of a detection dataset; depends only on (manifest, index)."""
    rng = sample_rng(manifest.master_seed, index)
    partition = manifest.partition()
    if manifest.redraw_channels:
        g_ur, h_rb = _draw_channels(manifest, rng, manifest.mu_position)
    else:
        g_ur, h_rb = fixed if fixed is not None else _fixed_channels(manifest)
    statuses = fault.sample_fault_scenario(rng, manifest.n_elements, manifest.max_faulty)
    if manifest.isolation_mode:
        statuses = fault.sa_isolation_mask(partition, index % manifest.sa_count, statuses)
    snr_db = float(manifest.snr_db_choices[rng.integers(len(manifest.snr_db_choices))])
    pilot = sig.Pilot()
    profile = fault.effective_profile(fault.unity_profile(manifest.n_elements), statuses)
    y = sig.bs_received(h_rb, profile, g_ur, pilot, noise=(sig.NoiseSpec(snr_db), rng))
    return DetectionSample(
        bs_signal=y.astype(np.complex64),
        element_statuses=statuses,
        sa_statuses=fault.sa_statuses(statuses, partition),
        mu_position=manifest.mu_position,
        snr_db=snr_db,
    )


def generate_localization_sample(
    manifest: DatasetManifest, index: int, fixed_rb: np.ndarray | None = None
) -> LocalizationSample:
    """Sample ``index`` of a localization dataset; depends only on (manifest, index)."""
    rng = sample_rng(manifest.master_seed, index)
    grid = manifest.grid
    plane = int(rng.integers(len(grid.heights)))
    mu = cg.Position3D(
        grid.x0 + grid.side * rng.random(),
        grid.y0 + grid.side * rng.random(),
        grid.heights[plane],
    )
    if manifest.fixed_ris_bs_link:
        g_ur = _draw_ur(manifest, rng, mu)
        h_rb = fixed_rb if fixed_rb is not None else _fixed_rb_channel(manifest)
    else:
        g_ur, h_rb = _draw_channels(manifest, rng, mu)
    statuses = fault.sample_fault_scenario(rng, manifest.n_elements, manifest.max_faulty)
    snr_db = float(manifest.snr_db_choices[rng.integers(len(manifest.snr_db_choices))])
    pilot = sig.Pilot()
    y_r = sig.ris_received(g_ur, pilot)
    profile = fault.effective_profile(fault.unity_profile(manifest.n_elements), statuses)
    y = sig.bs_received(h_rb, profile, g_ur, pilot, noise=(sig.NoiseSpec(snr_db), rng))
    return LocalizationSample(
        bs_signal=y.astype(np.complex64),
        ris_signal_complete=y_r.astype(np.complex64),
        element_statuses=statuses,
        mu_position=mu,
        snr_db=snr_db,
    )


def _detection_chunk(args) -> list:
    manifest_dict, indices = args
    manifest = DatasetManifest.from_json_dict(manifest_dict)
    fixed = None if manifest.redraw_channels else _fixed_channels(manifest)
    return [generate_detection_sample(manifest, i, fixed) for i in indices]


def _localization_chunk(args) -> list:
    manifest_dict, indices = args
    manifest = DatasetManifest.from_json_dict(manifest_dict)
    fixed_rb = _fixed_rb_channel(manifest) if manifest.fixed_ris_bs_link else None
    return [generate_localization_sample(manifest, i, fixed_rb) for i in indices]


def generate_samples(manifest: DatasetManifest, threads: int = 1) -> Iterator:
    """Yield all samples in index order; output is identical for any thread count."""
    n = manifest.sample_count
    if threads <= 1:
        if manifest.kind == KIND_DETECTION:
            fixed = None if manifest.redraw_channels else _fixed_channels(manifest)
            for i in range(n):
                yield generate_detection_sample(manifest, i, fixed)
        else:
            fixed_rb = _fixed_rb_channel(manifest) if manifest.fixed_ris_bs_link else None
            for i in range(n):
                yield generate_localization_sample(manifest, i, fixed_rb)
        return

    chunk_size = max(64, n // (threads * 8))
    chunks = [
        (manifest.to_json_dict(), list(range(start, min(start + chunk_size, n))))
        for start in range(0, n, chunk_size)
    ]
    worker = _detection_chunk if manifest.kind == KIND_DETECTION else _localization_chunk
    with ProcessPoolExecutor(max_workers=threads) as pool:
        for chunk in pool.map(worker, chunks):
            yield from chunk


def gen_detection_dataset(manifest: DatasetManifest, threads: int = 1) -> Iterator[DetectionSample]:
    if manifest.kind != KIND_DETECTION:
        raise ValueError("manifest is not a detection manifest")
    return generate_samples(manifest, threads)


def gen_localization_dataset(
    manifest: DatasetManifest, threads: int = 1
) -> Iterator[LocalizationSample]:
    if manifest.kind != KIND_LOCALIZATION:
        raise ValueError("manifest is not a localization manifest")
    return generate_samples(manifest, threads)


def split_indices(n: int, ratio: float, master_seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Canonical train/test index split: seeded permutation, then sorted indices."""
    if n < 1:
        raise ValueError("cannot split an empty dataset")
    if not (0.0 < ratio < 1.0):
        raise ValueError("split ratio must lie in (0, 1)")
    rng = derived_rng(master_seed, STREAM_SPLIT)
    perm = rng.permutation(n)
    n_train = int(round(n * ratio))
    train = np.sort(perm[:n_train])
    test = np.sort(perm[n_train:])
    return train, test


def split(samples: Sequence, ratio: float, master_seed: int) -> tuple[list, list]:
    """Deterministic shuffled split of a sample list into (train, test)."""
    train_idx, test_idx = split_indices(len(samples), ratio, master_seed)
    return [samples[i] for i in train_idx], [samples[i] for i in test_idx]


# --- binary persistence ----------------------------------------------------


def manifest_path_for(path: str | Path) -> Path:
    p = Path(path)
    stem = p.stem if p.suffix == ".bin" else p.name
    return p.with_name(stem + ".manifest.json")


def _encode_detection(s: DetectionSample) -> bytes:
    payload = (
        np.ascontiguousarray(s.bs_signal, dtype="<c8").tobytes()
        + s.element_statuses.astype(np.uint8).tobytes()
        + s.sa_statuses.astype(np.uint8).tobytes()
        + struct.pack("<3d", s.mu_position.x, s.mu_position.y, s.mu_position.z)
        + struct.pack("<d", s.snr_db)
    )
    return payload + struct.pack("<I", zlib.crc32(payload))


def _encode_localization(s: LocalizationSample) -> bytes:
    payload = (
        np.ascontiguousarray(s.bs_signal, dtype="<c8").tobytes()
        + np.ascontiguousarray(s.ris_signal_complete, dtype="<c8").tobytes()
        + s.element_statuses.astype(np.uint8).tobytes()
        + struct.pack("<3d", s.mu_position.x, s.mu_position.y, s.mu_position.z)
        + struct.pack("<d", s.snr_db)
    )
    return payload + struct.pack("<I", zlib.crc32(payload))


def record_size(manifest: DatasetManifest) -> int:
    m, n, k = manifest.m_antennas, manifest.n_elements, manifest.sa_count
    if manifest.kind == KIND_DETECTION:
        return 8 * m + n + k + 24 + 8 + 4
    return 8 * m + 8 * n + n + 24 + 8 + 4


def _decode_detection(manifest: DatasetManifest, raw: bytes) -> DetectionSample:
    m, n, k = manifest.m_antennas, manifest.n_elements, manifest.sa_count
    payload, (crc,) = raw[:-4], struct.unpack("<I", raw[-4:])
    if zlib.crc32(payload) != crc:
        raise ChecksumError("record checksum mismatch")
    off = 0
    y = np.frombuffer(payload, dtype="<c8", count=m, offset=off).copy()
    off += 8 * m
    statuses = np.frombuffer(payload, dtype=np.uint8, count=n, offset=off).copy()
    off += n
    sas = np.frombuffer(payload, dtype=np.uint8, count=k, offset=off).copy()
    off += k
    x, yy, z = struct.unpack_from("<3d", payload, off)
    off += 24
    (snr,) = struct.unpack_from("<d", payload, off)
    return DetectionSample(y, statuses, sas, cg.Position3D(x, yy, z), snr)


def _decode_localization(manifest: DatasetManifest, raw: bytes) -> LocalizationSample:
    m, n = manifest.m_antennas, manifest.n_elements
    payload, (crc,) = raw[:-4], struct.unpack("<I", raw[-4:])
    if zlib.crc32(payload) != crc:
        raise ChecksumError("record checksum mismatch")
    off = 0
    y = np.frombuffer(payload, dtype="<c8", count=m, offset=off).copy()
    off += 8 * m
    y_r = np.frombuffer(payload, dtype="<c8", count=n, offset=off).copy()
    off += 8 * n
    statuses = np.frombuffer(payload, dtype=np.uint8, count=n, offset=off).copy()
    off += n
    x, yy, z = struct.unpack_from("<3d", payload, off)
    off += 24
    (snr,) = struct.unpack_from("<d", payload, off)
    return LocalizationSample(y, y_r, statuses, cg.Position3D(x, yy, z), snr)


def write_dataset(path: str | Path, manifest: DatasetManifest, samples: Iterable) -> str:
    """Write the binary file and its manifest; returns the dataset checksum (hex)."""
    path = Path(path)
    encode = _encode_detection if manifest.kind == KIND_DETECTION else _encode_localization
    hasher = hashlib.blake2b(digest_size=8)
    count = 0
    with open(path, "wb") as f:
        header = MAGIC + struct.pack("<I", manifest.format_version)
        header += struct.pack("<Q", manifest.sample_count)
        f.write(header)
        hasher.update(header)
        for s in samples:
            rec = encode(s)
            f.write(rec)
            hasher.update(rec)
            count += 1
        if count != manifest.sample_count:
            raise ValueError(
                f"manifest declares {manifest.sample_count} samples but got {count}"
            )
        digest = hasher.digest()
        f.write(digest)
    manifest_path_for(path).write_text(json.dumps(manifest.to_json_dict(), indent=2))
    return digest.hex()


def read_manifest(path: str | Path) -> DatasetManifest:
    mp = manifest_path_for(path)
    if not mp.exists():
        raise DataFormatError(f"manifest file {mp} not found")
    return DatasetManifest.from_json_dict(json.loads(mp.read_text()))


def dataset_checksum(path: str | Path) -> str:
    """Hex of the file-level checksum trailer (no integrity verification)."""
    with open(path, "rb") as f:
        f.seek(0, 2)
        size = f.tell()
        if size < len(MAGIC) + 12 + 8:
            raise TruncatedFileError("file too short to hold a trailer")
        f.seek(size - 8)
        return f.read(8).hex()


def read_dataset(path: str | Path) -> tuple[DatasetManifest, list]:
    """Read and fully verify a dataset; raises on any integrity problem."""
    path = Path(path)
    manifest = read_manifest(path)
    decode = _decode_detection if manifest.kind == KIND_DETECTION else _decode_localization
    rec_size = record_size(manifest)
    hasher = hashlib.blake2b(digest_size=8)
    samples = []
    with open(path, "rb") as f:
        header = f.read(len(MAGIC) + 12)
        if len(header) < len(MAGIC) + 12:
            raise TruncatedFileError("file too short to hold a header")
        if header[: len(MAGIC)] != MAGIC:
            raise DataFormatError("not a dataset file (bad magic)")
        (version,) = struct.unpack_from("<I", header, len(MAGIC))
        if version != FORMAT_VERSION:
            raise VersionMismatchError(
                f"unsupported format version {version}, expected {FORMAT_VERSION}"
            )
        (count,) = struct.unpack_from("<Q", header, len(MAGIC) + 4)
        if count != manifest.sample_count:
            raise DataFormatError(
                f"file declares {count} samples, manifest says {manifest.sample_count}"
            )
        hasher.update(header)
        for _ in range(count):
            raw = f.read(rec_size)
            if len(raw) < rec_size:
                raise TruncatedFileError("file ends inside a record")
            hasher.update(raw)
            samples.append(decode(manifest, raw))
        trailer = f.read(8)
        if len(trailer) < 8:
            raise TruncatedFileError("file ends before the checksum trailer")
        if trailer != hasher.digest():
            raise ChecksumError("file checksum trailer does not match content")
        if f.read(1):
            raise DataFormatError("unexpected bytes after the checksum trailer")
    return manifest, samples
