"""Metrics, SNR sweeps, and result-file import/export.

All accuracy and error numbers are computed here and only here; prediction
files produced by the learned component are re-scored by this module against
the originating dataset.  Result files carry the dataset checksum so a
prediction file can never be scored against the wrong data.

Results schema (JSON), the write-side contract for prediction producers::

    {
      "schema_version": 1,
      "dataset_checksum": "<hex of the dataset file trailer>",
      "algorithm": "<free-form id>",
      "prediction_kind": "element_statuses" | "positions",
      "record_indices": [int, ...],      # indices into the dataset file
      "predictions": [[...], ...]        # 0/1 rows of length N, or [x, y, z]
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import channelgeom as cg
from . import fault
from . import signal as sig
from .dataset import (
    KIND_DETECTION,
    dataset_checksum,
    read_dataset,
    split_indices,
)
from .errors import DimensionError, SchemaError
from .estimators import (
    DetectionResult,
    default_greedy_tol,
    detect_faults_exhaustive,
    detect_faults_greedy,
    nmse,
)
from .seeding import STREAM_SWEEP, derived_rng

METRIC_VERSION = 1


@dataclass(frozen=True)
class DetectionReport:
    """Scenario/elementwise accuracy plus the CDF of per-trial accuracies."""

    scenario_accuracy: float
    elementwise_accuracy: float
    accuracy_cdf: tuple[tuple[float, float], ...]
    trials: int


@dataclass(frozen=True)
class LocalizationReport:
    nmse: float
    trials: int
    curve: tuple[tuple[float, float], ...] = ()


def detection_accuracy(estimates, truths) -> DetectionReport:
    """Score estimated status vectors against the truth.

    Scenario accuracy counts trials matched exactly; elementwise accuracy
    pools matching entries over all trials; the CDF is over per-trial
    elementwise accuracies.
    """
    estimates = [fault.as_status_vector(e) for e in estimates]
    truths = [fault.as_status_vector(t) for t in truths]
    if len(estimates) != len(truths) or len(truths) == 0:
        raise DimensionError("estimates and truths must be equal-length, non-empty lists")
    per_trial = []
    exact = 0
    matched = 0
    total = 0
    for est, tru in zip(estimates, truths):
        if est.shape != tru.shape:
            raise DimensionError("status vectors must share a length")
        hits = int(np.count_nonzero(est == tru))
        per_trial.append(hits / est.shape[0])
        matched += hits
        total += est.shape[0]
        if hits == est.shape[0]:
            exact += 1
    trials = len(truths)
    scenario = exact / trials
    # exact-match fraction and P(per-trial accuracy == 1) are the same number
    assert scenario == sum(1 for a in per_trial if a == 1.0) / trials
    values, counts = np.unique(np.asarray(per_trial), return_counts=True)
    cum = np.cumsum(counts) / trials
    cdf = tuple((float(v), float(c)) for v, c in zip(values, cum))
    return DetectionReport(
        scenario_accuracy=scenario,
        elementwise_accuracy=matched / total,
        accuracy_cdf=cdf,
        trials=trials,
    )


@dataclass(frozen=True)
class SweepConfig:
    """Scenario generator settings for synthetic detection sweeps."""

    bs_shape: tuple[int, int] = (4, 4)
    ris_shape: tuple[int, int] = (4, 4)
    carrier_hz: float = 90e9
    bs_position: cg.Position3D = field(default_factory=lambda: cg.Position3D(0.0, 10.0, 1.5))
    ris_position: cg.Position3D = field(default_factory=lambda: cg.Position3D(15.0, 0.0, 2.0))
    mu_position: cg.Position3D = field(default_factory=lambda: cg.Position3D(30.0, 6.0, 0.5))
    path_count_mu_ris: int = 10
    path_count_ris_bs: int = 10
    max_faulty: int = 2
    gain_scale: float = 1.0

    @property
    def bs_geometry(self) -> cg.UpaGeometry:
        return cg.UpaGeometry.half_wavelength(*self.bs_shape, self.carrier_hz)

    @property
    def ris_geometry(self) -> cg.UpaGeometry:
        return cg.UpaGeometry.half_wavelength(*self.ris_shape, self.carrier_hz)


def _solve(solver, y, a, phases, snr_db, max_faulty) -> DetectionResult:
    if callable(solver):
        return solver(y, a, phases, snr_db)
    if solver == "greedy":
        tol = default_greedy_tol(y, snr_db)
        return detect_faults_greedy(y, a, phases, max_faulty=max_faulty, tol=tol)
    if solver == "exhaustive":
        return detect_faults_exhaustive(y, a, phases)
    raise ValueError(f"unknown solver {solver!r}")


def snr_sweep(
    config: SweepConfig,
    snr_points_db,
    solver,
    trials: int,
    master_seed: int,
) -> list[tuple[float, DetectionReport]]:
    """Detection accuracy at each SNR point over freshly drawn scenarios.

    Trials are paired across SNR points: trial t uses the same channels,
    fault pattern, and noise direction everywhere, with only the noise
    amplitude following the SNR.  Every trial derives its own seed, so the
    sweep is reproducible and parallelizable.
    """
    snr_points_db = list(snr_points_db)
    if not snr_points_db:
        raise ValueError("need at least one SNR point")
    if trials < 1:
        raise ValueError("trials must be positive")

    n = config.ris_geometry.n_elements
    pilot = sig.Pilot()
    phases = fault.unity_profile(n)
    estimates: dict[float, list] = {s: [] for s in snr_points_db}
    truths: list[np.ndarray] = []
    for t in range(trials):
        rng = derived_rng(master_seed, STREAM_SWEEP, t)
        paths_ur = cg.sample_path_set(
            rng,
            config.path_count_mu_ris,
            geometric_anchor=(config.mu_position, config.ris_position),
            gain_scale=config.gain_scale,
        )
        paths_rb = cg.sample_path_set(
            rng,
            config.path_count_ris_bs,
            geometric_anchor=(config.ris_position, config.bs_position),
            gain_scale=config.gain_scale,
            with_departure=True,
        )
        g_ur = cg.mu_ris_channel(paths_ur, config.ris_geometry)
        h_rb = cg.ris_bs_channel(paths_rb, config.bs_geometry, config.ris_geometry)
        statuses = fault.sample_fault_scenario(rng, n, config.max_faulty)
        truths.append(statuses)
        a = sig.effective_bs_matrix(h_rb, g_ur, pilot)
        y0 = a @ fault.effective_profile(phases, statuses)
        direction = rng.standard_normal(y0.shape) + 1j * rng.standard_normal(y0.shape)
        for snr_db in snr_points_db:
            y = y0 + sig.noise_std_per_component(y0, snr_db) * direction
            result = _solve(solver, y, a, phases, snr_db, config.max_faulty)
            estimates[snr_db].append(result.estimated_statuses)
    return [(snr, detection_accuracy(estimates[snr], truths)) for snr in snr_points_db]


# --- report files ----------------------------------------------------------


def _report_to_dict(report) -> dict:
    if isinstance(report, DetectionReport):
        return {
            "metric_version": METRIC_VERSION,
            "type": "detection",
            "scenario_accuracy": report.scenario_accuracy,
            "elementwise_accuracy": report.elementwise_accuracy,
            "trials": report.trials,
            "accuracy_cdf": [[a, c] for a, c in report.accuracy_cdf],
        }
    if isinstance(report, LocalizationReport):
        return {
            "metric_version": METRIC_VERSION,
            "type": "localization",
            "nmse": report.nmse,
            "trials": report.trials,
            "curve": [[x, v] for x, v in report.curve],
        }
    if isinstance(report, list):
        return {
            "metric_version": METRIC_VERSION,
            "type": "detection_sweep",
            "points": [
                {"snr_db": snr, **_report_to_dict(rep)} for snr, rep in report
            ],
        }
    raise TypeError(f"cannot serialize report of type {type(report)!r}")


def _report_to_csv(report) -> str:
    if isinstance(report, DetectionReport):
        lines = ["accuracy,cum_prob"]
        lines += [f"{a!r},{c!r}" for a, c in report.accuracy_cdf]
        return "\n".join(lines) + "\n"
    if isinstance(report, LocalizationReport):
        if report.curve:
            lines = ["x,value"]
            lines += [f"{x!r},{v!r}" for x, v in report.curve]
            return "\n".join(lines) + "\n"
        return f"nmse,trials\n{report.nmse!r},{report.trials}\n"
    if isinstance(report, list):
        lines = ["snr_db,scenario_accuracy,elementwise_accuracy,trials"]
        lines += [
            f"{snr!r},{rep.scenario_accuracy!r},{rep.elementwise_accuracy!r},{rep.trials}"
            for snr, rep in report
        ]
        return "\n".join(lines) + "\n"
    raise TypeError(f"cannot serialize report of type {type(report)!r}")


def emit_results(report, path: str | Path, format: str = "json") -> Path:
    """Write a report as JSON or CSV; numbers survive a read-back exactly."""
    path = Path(path)
    if format == "json":
        path.write_text(json.dumps(_report_to_dict(report), indent=2) + "\n")
    elif format == "csv":
        path.write_text(_report_to_csv(report))
    else:
        raise ValueError(f"unknown format {format!r}")
    return path


def load_results(path: str | Path):
    """Read back a JSON report written by :func:`emit_results`."""
    d = json.loads(Path(path).read_text())
    if d["type"] == "detection":
        return DetectionReport(
            scenario_accuracy=d["scenario_accuracy"],
            elementwise_accuracy=d["elementwise_accuracy"],
            accuracy_cdf=tuple((a, c) for a, c in d["accuracy_cdf"]),
            trials=d["trials"],
        )
    if d["type"] == "localization":
        return LocalizationReport(
            nmse=d["nmse"], trials=d["trials"], curve=tuple((x, v) for x, v in d["curve"])
        )
    if d["type"] == "detection_sweep":
        return [
            (
                p["snr_db"],
                DetectionReport(
                    scenario_accuracy=p["scenario_accuracy"],
                    elementwise_accuracy=p["elementwise_accuracy"],
                    accuracy_cdf=tuple((a, c) for a, c in p["accuracy_cdf"]),
                    trials=p["trials"],
                ),
            )
            for p in d["points"]
        ]
    raise SchemaError(f"unknown report type {d['type']!r}")


# --- predictions from the learned component --------------------------------

PREDICTIONS_SCHEMA_VERSION = 1


def import_neural_results(path: str | Path, dataset_path: str | Path):
    """Re-score a predictions file against its dataset.

    Validates the schema (reporting the first offending record), checks the
    dataset checksum and the record count against the manifest's test split,
    then recomputes the metrics here.  Returns a
    :class:`DetectionReport` or :class:`LocalizationReport`.
    """
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise SchemaError(f"predictions file is not valid JSON: {e}") from e
    for key in (
        "schema_version",
        "dataset_checksum",
        "algorithm",
        "prediction_kind",
        "record_indices",
        "predictions",
    ):
        if key not in d:
            raise SchemaError(f"predictions file missing required field {key!r}")
    if d["schema_version"] != PREDICTIONS_SCHEMA_VERSION:
        raise SchemaError(f"unsupported predictions schema version {d['schema_version']}")
    kind = d["prediction_kind"]
    if kind not in ("element_statuses", "positions"):
        raise SchemaError(f"unknown prediction_kind {kind!r}")

    checksum = dataset_checksum(dataset_path)
    if d["dataset_checksum"] != checksum:
        raise SchemaError(
            f"dataset checksum mismatch: file claims {d['dataset_checksum']}, "
            f"dataset is {checksum}"
        )
    manifest, samples = read_dataset(dataset_path)
    _, test_idx = split_indices(
        manifest.sample_count, manifest.split_ratio, manifest.master_seed
    )
    indices = d["record_indices"]
    preds = d["predictions"]
    if len(indices) != len(preds):
        raise SchemaError("record_indices and predictions differ in length")
    if len(indices) != len(test_idx):
        raise SchemaError(
            f"record count mismatch: {len(indices)} predictions, "
            f"manifest test split holds {len(test_idx)}"
        )
    if len(set(indices)) != len(indices):
        raise SchemaError("record_indices contains duplicates")

    n = manifest.n_elements
    for row, (idx, pred) in enumerate(zip(indices, preds)):
        if not (0 <= idx < manifest.sample_count):
            raise SchemaError(f"record {row}: index {idx} out of range")
        if kind == "element_statuses":
            if len(pred) != n or any(v not in (0, 1) for v in pred):
                raise SchemaError(f"record {row}: expected {n} binary statuses")
        else:
            if len(pred) != 3 or not all(np.isfinite(v) for v in pred):
                raise SchemaError(f"record {row}: expected 3 finite coordinates")

    if kind == "element_statuses":
        if manifest.kind != KIND_DETECTION:
            raise SchemaError("status predictions require a detection dataset")
        estimates = [np.asarray(p, dtype=np.uint8) for p in preds]
        truths = [samples[i].element_statuses for i in indices]
        return detection_accuracy(estimates, truths)
    estimates = [np.asarray(p, dtype=np.float64) for p in preds]
    truths = [samples[i].mu_position for i in indices]
    return LocalizationReport(nmse=nmse(estimates, truths), trials=len(indices))
