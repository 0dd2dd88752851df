"""Prediction-file writer: the boundary back to the simulator's scorer.

Schema (JSON)::

    {
      "schema_version": 1,
      "dataset_checksum": "<hex of the dataset file trailer>",
      "algorithm": "<id>",
      "prediction_kind": "element_statuses" | "positions",
      "record_indices": [int, ...],
      "predictions": [[...], ...]
    }

Accuracy and error metrics are computed exclusively by the simulator's
evaluation module re-scoring these files; nothing here self-reports quality.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1


def export_predictions(
    path: str | Path,
    dataset_checksum: str,
    algorithm: str,
    prediction_kind: str,
    record_indices,
    predictions,
) -> Path:
    if prediction_kind not in ("element_statuses", "positions"):
        raise ValueError(f"unknown prediction kind {prediction_kind!r}")
    rows = []
    for pred in predictions:
        arr = np.asarray(pred)
        if prediction_kind == "element_statuses":
            rows.append([int(v) for v in arr])
        else:
            rows.append([float(v) for v in arr])
    payload = {
        "schema_version": SCHEMA_VERSION,
        "dataset_checksum": dataset_checksum,
        "algorithm": algorithm,
        "prediction_kind": prediction_kind,
        "record_indices": [int(i) for i in record_indices],
        "predictions": rows,
    }
    path = Path(path)
    path.write_text(json.dumps(payload) + "\n")
    return path
