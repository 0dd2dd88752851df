"""Classical model-based solvers: fault detection, signal recovery, fingerprinting.

These are the oracles and baselines the learned pipelines are compared
against.  All solvers work on the linearized measurement model
``y = A @ (phases * statuses) + n`` with ``A`` from
:func:`risfaultsim.signal.effective_bs_matrix`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channelgeom import Position3D
from .errors import DegenerateNormalizationError, DimensionError, SolverError
from .fault import as_status_vector

MAX_EXHAUSTIVE_N = 22
"""Enumeration guard: the exhaustive detector refuses larger panels."""

_CHUNK = 1 << 16


@dataclass(frozen=True)
class DetectionResult:
    """Estimated element statuses plus the residual of the implied signal fit."""

    estimated_statuses: np.ndarray
    residual_norm: float
    ambiguous: bool = False
    converged: bool = True


@dataclass(frozen=True)
class LocalizationResult:
    estimate: Position3D


@dataclass(frozen=True)
class FingerprintDatabase:
    """Stored (signal fingerprint, position) pairs for nearest-neighbor lookup."""

    fingerprints: np.ndarray
    positions: np.ndarray
    kind: str

    def __post_init__(self):
        if self.fingerprints.ndim != 2 or self.fingerprints.shape[0] == 0:
            raise ValueError("fingerprint database must be non-empty and rectangular")
        if self.positions.shape != (self.fingerprints.shape[0], 3):
            raise DimensionError("positions must be (n_entries, 3)")

    def __len__(self) -> int:
        return self.fingerprints.shape[0]


def _mask_key(mask_int: int, n: int) -> tuple[int, tuple[int, ...]]:
    """Tie-break key: (fault count, lexicographic faulty index tuple)."""
    faulty = tuple(i for i in range(n) if not (mask_int >> i) & 1)
    return (len(faulty), faulty)


def detect_faults_exhaustive(
    y: np.ndarray, a: np.ndarray, phases: np.ndarray
) -> DetectionResult:
    """Global minimizer of ``|y - A (phases * statuses)|`` over all 2^N statuses.

    Ties are broken toward fewer faults, then lexicographically on the faulty
    index set.  ``ambiguous`` is set when more than one status vector attains
    a residual at the zero floor (rank-deficient measurement).
    """
    y = np.asarray(y, dtype=np.complex128)
    a = np.asarray(a, dtype=np.complex128)
    phases = np.asarray(phases, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != y.shape[0] or a.shape[1] != phases.shape[0]:
        raise DimensionError(f"incompatible shapes: y {y.shape}, a {a.shape}, phases {phases.shape}")
    n = a.shape[1]
    if n > MAX_EXHAUSTIVE_N:
        raise SolverError(
            f"exhaustive enumeration refused for N={n} > {MAX_EXHAUSTIVE_N} elements"
        )

    aw = a * phases[np.newaxis, :]
    zero_tol = 1e-10 * max(1.0, float(np.linalg.norm(y)))
    zero_tol2 = zero_tol * zero_tol

    best_norm2 = math.inf
    best_key: tuple[int, tuple[int, ...]] | None = None
    best_mask = 0
    n_zero_masks = 0

    total = 1 << n
    shifts = np.arange(n, dtype=np.uint64)
    for start in range(0, total, _CHUNK):
        masks = np.arange(start, min(start + _CHUNK, total), dtype=np.uint64)
        bits = ((masks[:, np.newaxis] >> shifts) & 1).astype(np.float64)
        resid = y[np.newaxis, :] - bits @ aw.T
        norms2 = np.einsum("ij,ij->i", resid.real, resid.real) + np.einsum(
            "ij,ij->i", resid.imag, resid.imag
        )
        n_zero_masks += int(np.count_nonzero(norms2 <= zero_tol2))
        chunk_min = float(norms2.min())
        if chunk_min > best_norm2:
            continue
        tied = masks[norms2 == chunk_min]
        chunk_key, chunk_mask = min((_mask_key(int(m), n), int(m)) for m in tied)
        if chunk_min < best_norm2:
            best_norm2, best_key, best_mask = chunk_min, chunk_key, chunk_mask
        elif best_key is None or chunk_key < best_key:
            best_key, best_mask = chunk_key, chunk_mask
    statuses = ((best_mask >> np.arange(n)) & 1).astype(np.uint8)
    residual = float(np.linalg.norm(y - aw @ statuses))
    return DetectionResult(
        estimated_statuses=statuses,
        residual_norm=residual,
        ambiguous=n_zero_masks > 1,
    )


NOISE_FLOOR_MARGIN = 1.25
"""Headroom over the expected noise norm in the default stopping tolerance."""

GREEDY_BEAM_WIDTH = 4
"""Candidate supports kept per depth; width 1 is plain single-path pursuit."""


def default_greedy_tol(y: np.ndarray, snr_db: float) -> float:
    """Stopping tolerance slightly above the expected noise floor.

    The expected noise norm under the per-antenna SNR convention is
    ``|y| * 10^(-snr_db/20)``; the margin absorbs noise-norm fluctuation.
    """
    y = np.asarray(y)
    return float(np.linalg.norm(y)) * 10.0 ** (-snr_db / 20.0) * NOISE_FLOOR_MARGIN


def detect_faults_greedy(
    y: np.ndarray,
    a: np.ndarray,
    phases: np.ndarray,
    max_faulty: int,
    tol: float,
    beam: int = GREEDY_BEAM_WIDTH,
) -> DetectionResult:
    """Greedy sparse recovery of the fault indicator ``x = 1 - statuses``.

    Works on ``b = A @ phases - y ~ A diag(phases) x``.  Because the
    indicator is binary, each column is scored by the residual drop from
    switching it fully on, ``2 Re<d_n, r> - |d_n|^2``, which is the
    correlation rule matched to unit coefficients.  A small beam of the
    best-scoring supports is kept per depth (steering dictionaries are too
    coherent for a single-path pursuit), the search stops when the residual
    falls to ``tol`` or ``max_faulty`` is reached, and least squares on the
    winning support with {0, 1} rounding produces the status vector.
    Non-convergence returns the best support found, flagged.
    """
    y = np.asarray(y, dtype=np.complex128)
    a = np.asarray(a, dtype=np.complex128)
    phases = np.asarray(phases, dtype=np.complex128)
    n = a.shape[1]
    if max_faulty > n:
        raise ValueError(f"max_faulty {max_faulty} exceeds element count {n}")
    if beam < 1:
        raise ValueError("beam width must be at least 1")

    d = a * phases[np.newaxis, :]
    col_energy = np.sum(np.abs(d) ** 2, axis=0)
    b = d.sum(axis=1) - y

    frontier: list[tuple[tuple[int, ...], np.ndarray]] = [((), b)]
    best_support: tuple[int, ...] = ()
    best_norm = float(np.linalg.norm(b))
    visited: set[tuple[int, ...]] = set()
    for _ in range(max_faulty):
        if best_norm <= tol:
            break
        grown: list[tuple[tuple[int, ...], np.ndarray]] = []
        for support, r in frontier:
            scores = 2.0 * np.real(d.conj().T @ r) - col_energy
            for idx in support:
                scores[idx] = -np.inf
            for pick in np.argsort(-scores)[:beam]:
                candidate = tuple(sorted(support + (int(pick),)))
                if candidate in visited:
                    continue
                visited.add(candidate)
                grown.append((candidate, r - d[:, pick]))
        if not grown:
            break
        grown.sort(key=lambda item: float(np.linalg.norm(item[1])))
        frontier = grown[:beam]
        for support, r in frontier:
            norm = float(np.linalg.norm(r))
            if norm < best_norm:
                best_support, best_norm = support, norm

    statuses = np.ones(n, dtype=np.uint8)
    if best_support:
        coeffs, *_ = np.linalg.lstsq(d[:, list(best_support)], b, rcond=None)
        for idx, c in zip(best_support, coeffs):
            if c.real > 0.5:
                statuses[idx] = 0
    residual = float(np.linalg.norm(y - d @ statuses))
    return DetectionResult(
        estimated_statuses=statuses,
        residual_norm=residual,
        converged=best_norm <= tol,
    )


def reconstruct_ris_ls(
    y: np.ndarray,
    h_rb: np.ndarray,
    phases: np.ndarray,
    statuses: np.ndarray,
    ridge: float = 0.0,
) -> np.ndarray:
    """Least-squares recovery of the panel signal on the functioning elements.

    Solves ``min_v |y - H_active v|^2 + ridge |v|^2`` over the columns of
    ``H_rb diag(phases)`` at functioning indices and scatters the solution
    into a full-length vector with zeros at faulty indices.  This recovers
    the incomplete panel signal; faulty entries carry no information for a
    linear solver and stay zero.
    """
    y = np.asarray(y, dtype=np.complex128)
    h_rb = np.asarray(h_rb, dtype=np.complex128)
    phases = np.asarray(phases, dtype=np.complex128)
    st = as_status_vector(statuses)
    if h_rb.shape != (y.shape[0], st.shape[0]) or phases.shape != st.shape:
        raise DimensionError("inconsistent shapes for panel-signal recovery")
    if ridge < 0:
        raise ValueError("ridge must be non-negative")
    active = np.flatnonzero(st == 1)
    if active.size == 0:
        raise SolverError("no active elements: nothing to recover")
    h_a = h_rb[:, active] * phases[active][np.newaxis, :]
    if ridge == 0.0:
        v, *_ = np.linalg.lstsq(h_a, y, rcond=None)
    else:
        gram = h_a.conj().T @ h_a + ridge * np.eye(active.size)
        v = np.linalg.solve(gram, h_a.conj().T @ y)
    out = np.zeros(st.shape[0], dtype=np.complex128)
    out[active] = v
    return out


def build_fingerprint_db(samples, kind: str) -> FingerprintDatabase:
    """Fingerprint store from localization samples.

    ``kind`` selects the feature: ``"bs"`` uses the base-station signal,
    ``"ris"`` the complete panel signal.
    """
    if kind not in ("bs", "ris"):
        raise ValueError(f"fingerprint kind must be 'bs' or 'ris', got {kind!r}")
    samples = list(samples)
    if not samples:
        raise ValueError("cannot build a fingerprint database from zero samples")
    vecs = [
        np.asarray(s.bs_signal if kind == "bs" else s.ris_signal_complete) for s in samples
    ]
    length = vecs[0].shape[0]
    if any(v.shape != (length,) for v in vecs):
        raise DimensionError("all fingerprints must have the same length")
    fingerprints = np.stack(vecs).astype(np.complex128)
    positions = np.stack([s.mu_position.as_array() for s in samples])
    return FingerprintDatabase(fingerprints=fingerprints, positions=positions, kind=kind)


def fingerprint_localize_nn(
    db: FingerprintDatabase, query: np.ndarray, k: int
) -> LocalizationResult:
    """Mean position of the k nearest stored fingerprints (ties by entry index)."""
    query = np.asarray(query, dtype=np.complex128)
    if query.shape != (db.fingerprints.shape[1],):
        raise DimensionError(
            f"query length {query.shape} does not match database ({db.fingerprints.shape[1]},)"
        )
    if not (1 <= k <= len(db)):
        raise ValueError(f"k must lie in [1, {len(db)}], got {k}")
    dist = np.linalg.norm(db.fingerprints - query[np.newaxis, :], axis=1)
    order = np.argsort(dist, kind="stable")[:k]
    est = db.positions[order].mean(axis=0)
    return LocalizationResult(estimate=Position3D(float(est[0]), float(est[1]), float(est[2])))


def nmse(estimates, truths) -> float:
    """Normalized mean squared position error.

    Sum of squared estimate errors over the sum of squared deviations of the
    true positions from their mean; 0 for perfect estimates, 1 for always
    predicting the mean.
    """
    est = np.asarray(
        [p.as_array() if isinstance(p, Position3D) else np.asarray(p) for p in estimates],
        dtype=np.float64,
    )
    tru = np.asarray(
        [p.as_array() if isinstance(p, Position3D) else np.asarray(p) for p in truths],
        dtype=np.float64,
    )
    if est.shape != tru.shape or est.ndim != 2 or est.shape[0] == 0:
        raise DimensionError("estimates and truths must be equal-length position lists")
    center = tru.mean(axis=0)
    denom = float(np.sum((tru - center) ** 2))
    if denom == 0.0:
        raise DegenerateNormalizationError(
            "all true positions are identical: normalization undefined"
        )
    return float(np.sum((est - tru) ** 2) / denom)
