"""Reader for the simulator's dataset files.

This is an independent implementation of the published file contract; the
simulator package is deliberately not imported.  Layout (little-endian):

    8 bytes   magic b"RISFDSET"
    u32       format version (1)
    u64       sample count
    records   fixed width (below)
    8 bytes   blake2b-64 digest of everything above

Detection record: M complex64 receiver signal, N uint8 element statuses,
K uint8 sub-array statuses, 3 float64 user position, float64 snr_db, u32
CRC32 of the preceding record bytes.  Localization records carry an extra
N complex64 complete panel signal between the receiver signal and the
statuses (and no sub-array statuses).

The train/test split rule is part of the manifest contract: a permutation
drawn from ``numpy.random.SeedSequence(master_seed, spawn_key=(1,))``,
``round(n * split_ratio)`` train entries, both index sets sorted ascending.

Sub-array layout: K square tiles in row-major tile order when a square tile
of side sqrt(N/K) fits the panel exactly, otherwise contiguous chunks of the
elevation-major element order.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"RISFDSET"
FORMAT_VERSION = 1


class DatasetError(Exception):
    """Malformed or corrupt dataset file."""


@dataclass(frozen=True)
class Manifest:
    kind: str
    sample_count: int
    split_ratio: float
    master_seed: int
    bs_shape: tuple[int, int]
    ris_shape: tuple[int, int]
    sa_count: int
    max_faulty: int
    isolation_mode: bool
    raw: dict

    @property
    def m_antennas(self) -> int:
        return self.bs_shape[0] * self.bs_shape[1]

    @property
    def n_elements(self) -> int:
        return self.ris_shape[0] * self.ris_shape[1]

    @property
    def sa_size(self) -> int:
        return self.n_elements // self.sa_count


@dataclass(frozen=True)
class DetectionRecord:
    bs_signal: np.ndarray
    element_statuses: np.ndarray
    sa_statuses: np.ndarray
    mu_position: np.ndarray
    snr_db: float


@dataclass(frozen=True)
class LocalizationRecord:
    bs_signal: np.ndarray
    ris_signal_complete: np.ndarray
    element_statuses: np.ndarray
    mu_position: np.ndarray
    snr_db: float


def manifest_path_for(path: str | Path) -> Path:
    p = Path(path)
    stem = p.stem if p.suffix == ".bin" else p.name
    return p.with_name(stem + ".manifest.json")


def load_manifest(path: str | Path) -> Manifest:
    raw = json.loads(manifest_path_for(path).read_text())
    return Manifest(
        kind=raw["kind"],
        sample_count=int(raw["sample_count"]),
        split_ratio=float(raw["split_ratio"]),
        master_seed=int(raw["master_seed"]),
        bs_shape=tuple(raw["bs_shape"]),
        ris_shape=tuple(raw["ris_shape"]),
        sa_count=int(raw["sa_count"]),
        max_faulty=int(raw["max_faulty"]),
        isolation_mode=bool(raw["isolation_mode"]),
        raw=raw,
    )


def dataset_checksum(path: str | Path) -> str:
    """Hex of the 8-byte file trailer, used as the provenance id."""
    data = Path(path).read_bytes()
    if len(data) < len(MAGIC) + 12 + 8:
        raise DatasetError("file too short")
    return data[-8:].hex()


def _record_size(manifest: Manifest) -> int:
    m, n, k = manifest.m_antennas, manifest.n_elements, manifest.sa_count
    if manifest.kind == "detection":
        return 8 * m + n + k + 24 + 8 + 4
    return 8 * m + 8 * n + n + 24 + 8 + 4


def read_dataset(path: str | Path) -> tuple[Manifest, list]:
    """Read and verify a dataset file; returns (manifest, records)."""
    manifest = load_manifest(path)
    data = Path(path).read_bytes()
    if data[: len(MAGIC)] != MAGIC:
        raise DatasetError("bad magic")
    (version,) = struct.unpack_from("<I", data, len(MAGIC))
    if version != FORMAT_VERSION:
        raise DatasetError(f"unsupported format version {version}")
    (count,) = struct.unpack_from("<Q", data, len(MAGIC) + 4)
    if count != manifest.sample_count:
        raise DatasetError("sample count disagrees with manifest")
    rec_size = _record_size(manifest)
    body_end = len(MAGIC) + 12 + rec_size * count
    if len(data) < body_end + 8:
        raise DatasetError("file truncated")
    if hashlib.blake2b(data[:body_end], digest_size=8).digest() != data[body_end : body_end + 8]:
        raise DatasetError("file checksum mismatch")

    m, n, k = manifest.m_antennas, manifest.n_elements, manifest.sa_count
    records = []
    off = len(MAGIC) + 12
    for _ in range(count):
        raw = data[off : off + rec_size]
        off += rec_size
        payload, (crc,) = raw[:-4], struct.unpack("<I", raw[-4:])
        if zlib.crc32(payload) != crc:
            raise DatasetError("record checksum mismatch")
        pos = 0
        y = np.frombuffer(payload, dtype="<c8", count=m, offset=pos).copy()
        pos += 8 * m
        if manifest.kind == "detection":
            statuses = np.frombuffer(payload, dtype=np.uint8, count=n, offset=pos).copy()
            pos += n
            sas = np.frombuffer(payload, dtype=np.uint8, count=k, offset=pos).copy()
            pos += k
            x, yy, z = struct.unpack_from("<3d", payload, pos)
            pos += 24
            (snr,) = struct.unpack_from("<d", payload, pos)
            records.append(
                DetectionRecord(y, statuses, sas, np.array([x, yy, z]), snr)
            )
        else:
            y_r = np.frombuffer(payload, dtype="<c8", count=n, offset=pos).copy()
            pos += 8 * n
            statuses = np.frombuffer(payload, dtype=np.uint8, count=n, offset=pos).copy()
            pos += n
            x, yy, z = struct.unpack_from("<3d", payload, pos)
            pos += 24
            (snr,) = struct.unpack_from("<d", payload, pos)
            records.append(
                LocalizationRecord(y, y_r, statuses, np.array([x, yy, z]), snr)
            )
    return manifest, records


def split_indices(manifest: Manifest) -> tuple[np.ndarray, np.ndarray]:
    """Canonical (train, test) index split from the manifest fields."""
    rng = np.random.default_rng(
        np.random.SeedSequence(manifest.master_seed, spawn_key=(1,))
    )
    perm = rng.permutation(manifest.sample_count)
    n_train = int(round(manifest.sample_count * manifest.split_ratio))
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def sa_members(ris_shape: tuple[int, int], sa_count: int, sa_index: int) -> np.ndarray:
    """Flat element indices of one sub-array under the documented layout."""
    rows, cols = ris_shape
    n = rows * cols
    sa_size = n // sa_count
    side = math.isqrt(sa_size)
    tileable = (
        side * side == sa_size
        and rows % side == 0
        and cols % side == 0
        and (rows // side) * (cols // side) == sa_count
    )
    if tileable:
        tiles_per_row = cols // side
        tile_r, tile_c = divmod(sa_index, tiles_per_row)
        members = [
            (tile_r * side + r) * cols + (tile_c * side + c)
            for r in range(side)
            for c in range(side)
        ]
        return np.array(members, dtype=np.int64)
    return np.arange(sa_index * sa_size, (sa_index + 1) * sa_size, dtype=np.int64)


def isolation_target(manifest: Manifest, record_index: int) -> int:
    """Target sub-array probed by record ``record_index`` of an isolation dataset."""
    if not manifest.isolation_mode:
        raise ValueError("dataset was not generated in isolation mode")
    return record_index % manifest.sa_count
