import json

import numpy as np
import pytest

from risfaultsim import dataset as ds
from risfaultsim import evaluation as ev
from risfaultsim.errors import DimensionError, SchemaError


class TestDetectionAccuracy:
    def test_all_exact(self):
        truth = [np.ones(81, dtype=np.uint8) for _ in range(5)]
        rep = ev.detection_accuracy(truth, truth)
        assert rep.scenario_accuracy == 1.0 and rep.elementwise_accuracy == 1.0

    def test_single_wrong_element(self):
        truths = [np.ones(81, dtype=np.uint8), np.ones(81, dtype=np.uint8)]
        estimates = [t.copy() for t in truths]
        estimates[1][13] = 0
        rep = ev.detection_accuracy(estimates, truths)
        assert rep.scenario_accuracy == 0.5
        assert rep.elementwise_accuracy == pytest.approx(161 / 162)

    def test_cdf_matches_sorted_distribution(self):
        rng = np.random.default_rng(0)
        truths, estimates, per_trial = [], [], []
        for _ in range(40):
            t = np.ones(10, dtype=np.uint8)
            e = t.copy()
            wrong = rng.integers(0, 5)
            if wrong:
                e[rng.choice(10, wrong, replace=False)] ^= 1
            truths.append(t)
            estimates.append(e)
            per_trial.append(float(np.mean(e == t)))
        rep = ev.detection_accuracy(estimates, truths)
        # sort-based oracle
        values = sorted(set(per_trial))
        cdf = [(v, sum(1 for a in per_trial if a <= v) / len(per_trial)) for v in values]
        assert list(rep.accuracy_cdf) == [(pytest.approx(v), pytest.approx(c)) for v, c in cdf]
        assert rep.accuracy_cdf[-1][1] == 1.0
        probs = [c for _, c in rep.accuracy_cdf]
        assert probs == sorted(probs)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            ev.detection_accuracy([np.ones(3, dtype=np.uint8)], [])


class TestSnrSweep:
    def test_single_point(self):
        config = ev.SweepConfig(ris_shape=(2, 2), bs_shape=(2, 2), max_faulty=1)
        out = ev.snr_sweep(config, [20.0], "greedy", trials=10, master_seed=0)
        assert len(out) == 1 and out[0][0] == 20.0
        assert out[0][1].trials == 10

    def test_zero_trials_rejected(self):
        config = ev.SweepConfig()
        with pytest.raises(ValueError):
            ev.snr_sweep(config, [10.0], "greedy", trials=0, master_seed=0)

    def test_empty_points_rejected(self):
        with pytest.raises(ValueError):
            ev.snr_sweep(ev.SweepConfig(), [], "greedy", trials=5, master_seed=0)

    def test_deterministic(self):
        config = ev.SweepConfig(ris_shape=(2, 2), bs_shape=(2, 2), max_faulty=1)
        a = ev.snr_sweep(config, [0.0, 20.0], "greedy", trials=15, master_seed=3)
        b = ev.snr_sweep(config, [0.0, 20.0], "greedy", trials=15, master_seed=3)
        assert a == b


class TestEmitResults:
    def small_report(self):
        truths = [np.ones(4, dtype=np.uint8) for _ in range(3)]
        estimates = [t.copy() for t in truths]
        estimates[0][2] = 0
        return ev.detection_accuracy(estimates, truths)

    def test_json_round_trip_and_metric_version(self, tmp_path):
        rep = self.small_report()
        path = ev.emit_results(rep, tmp_path / "r.json", "json")
        loaded = json.loads(path.read_text())
        assert loaded["metric_version"] == ev.METRIC_VERSION
        assert ev.load_results(path) == rep

    def test_csv_round_trip(self, tmp_path):
        rep = self.small_report()
        path = ev.emit_results(rep, tmp_path / "r.csv", "csv")
        lines = path.read_text().strip().split("\n")
        assert lines[0] == "accuracy,cum_prob"
        parsed = [tuple(float(x) for x in line.split(",")) for line in lines[1:]]
        assert tuple(parsed) == rep.accuracy_cdf
        accs = [a for a, _ in parsed]
        assert accs == sorted(accs)

    def test_localization_report_round_trip(self, tmp_path):
        rep = ev.LocalizationReport(nmse=0.1234, trials=50, curve=((0.0, 0.5), (10.0, 0.2)))
        path = ev.emit_results(rep, tmp_path / "l.json", "json")
        assert ev.load_results(path) == rep
        csv_path = ev.emit_results(rep, tmp_path / "l.csv", "csv")
        lines = csv_path.read_text().strip().split("\n")
        assert lines[0] == "x,value"
        parsed = tuple(tuple(float(v) for v in line.split(",")) for line in lines[1:])
        assert parsed == rep.curve

    def test_sweep_csv_schema(self, tmp_path):
        config = ev.SweepConfig(ris_shape=(2, 2), bs_shape=(2, 2), max_faulty=1)
        sweep = ev.snr_sweep(config, [0.0, 10.0], "greedy", trials=5, master_seed=1)
        path = ev.emit_results(sweep, tmp_path / "s.csv", "csv")
        lines = path.read_text().strip().split("\n")
        assert lines[0] == "snr_db,scenario_accuracy,elementwise_accuracy,trials"
        assert len(lines) == 3
        loaded = ev.load_results(ev.emit_results(sweep, tmp_path / "s.json", "json"))
        assert loaded == sweep


def write_predictions(path, dataset_path, indices, predictions, kind, checksum=None):
    payload = {
        "schema_version": 1,
        "dataset_checksum": checksum or ds.dataset_checksum(dataset_path),
        "algorithm": "test",
        "prediction_kind": kind,
        "record_indices": [int(i) for i in indices],
        "predictions": predictions,
    }
    path.write_text(json.dumps(payload))
    return path


@pytest.fixture(scope="module")
def detection_file(tmp_path_factory):
    td = tmp_path_factory.mktemp("ds")
    manifest = ds.default_detection_manifest(
        20, 17, ris_shape=(2, 2), bs_shape=(2, 2), sa_count=1, max_faulty=2,
        path_count_mu_ris=2, path_count_ris_bs=2,
    )
    path = td / "d.bin"
    ds.write_dataset(path, manifest, ds.gen_detection_dataset(manifest))
    return path


class TestImportNeuralResults:
    def test_scores_exact_predictions(self, detection_file, tmp_path):
        manifest, samples = ds.read_dataset(detection_file)
        _, test_idx = ds.split_indices(
            manifest.sample_count, manifest.split_ratio, manifest.master_seed
        )
        preds = [[int(v) for v in samples[i].element_statuses] for i in test_idx]
        p = write_predictions(
            tmp_path / "p.json", detection_file, test_idx, preds, "element_statuses"
        )
        rep = ev.import_neural_results(p, detection_file)
        assert rep.scenario_accuracy == 1.0
        assert rep.trials == len(test_idx)

    def test_record_count_mismatch(self, detection_file, tmp_path):
        p = write_predictions(
            tmp_path / "p.json", detection_file, [0], [[1, 1, 1, 1]], "element_statuses"
        )
        with pytest.raises(SchemaError, match="record count"):
            ev.import_neural_results(p, detection_file)

    def test_wrong_checksum_rejected(self, detection_file, tmp_path):
        manifest, _ = ds.read_dataset(detection_file)
        _, test_idx = ds.split_indices(
            manifest.sample_count, manifest.split_ratio, manifest.master_seed
        )
        preds = [[1, 1, 1, 1] for _ in test_idx]
        p = write_predictions(
            tmp_path / "p.json",
            detection_file,
            test_idx,
            preds,
            "element_statuses",
            checksum="00" * 8,
        )
        with pytest.raises(SchemaError, match="checksum"):
            ev.import_neural_results(p, detection_file)

    def test_offending_record_located(self, detection_file, tmp_path):
        manifest, _ = ds.read_dataset(detection_file)
        _, test_idx = ds.split_indices(
            manifest.sample_count, manifest.split_ratio, manifest.master_seed
        )
        preds = [[1, 1, 1, 1] for _ in test_idx]
        preds[2] = [1, 1, 7, 1]
        p = write_predictions(
            tmp_path / "p.json", detection_file, test_idx, preds, "element_statuses"
        )
        with pytest.raises(SchemaError, match="record 2"):
            ev.import_neural_results(p, detection_file)

    def test_missing_field_rejected(self, detection_file, tmp_path):
        payload = {"schema_version": 1}
        p = tmp_path / "p.json"
        p.write_text(json.dumps(payload))
        with pytest.raises(SchemaError, match="missing required field"):
            ev.import_neural_results(p, detection_file)

    def test_rescoring_deterministic(self, detection_file, tmp_path):
        manifest, samples = ds.read_dataset(detection_file)
        _, test_idx = ds.split_indices(
            manifest.sample_count, manifest.split_ratio, manifest.master_seed
        )
        preds = [[int(v) for v in samples[i].element_statuses] for i in test_idx]
        preds[0] = [1 - v for v in preds[0]]
        p = write_predictions(
            tmp_path / "p.json", detection_file, test_idx, preds, "element_statuses"
        )
        assert ev.import_neural_results(p, detection_file) == ev.import_neural_results(
            p, detection_file
        )
