import numpy as np
import pytest
import torch

from risneural import data, detector


@pytest.fixture(scope="module")
def sa_setup(sa_detection_file):
    manifest, records = data.read_dataset(sa_detection_file)
    t_y, element, sas = detector.detection_tensors(manifest, records)
    return manifest, records, t_y, element, sas


class TestPanelStatusNet:
    def test_untrained_outputs_are_probabilities(self, sa_setup):
        manifest, _, t_y, _, _ = sa_setup
        torch.manual_seed(0)
        net = detector.PanelStatusNet(manifest.sa_count)
        probs = net.fault_probs(t_y[:8])
        assert probs.shape == (8, manifest.sa_count)
        assert torch.all((probs > 0) & (probs < 1))

    def test_threshold_moves_only_borderline_records(self, sa_setup):
        manifest, _, t_y, _, _ = sa_setup
        torch.manual_seed(1)
        net = detector.PanelStatusNet(manifest.sa_count)
        eps = 0.02
        base = detector.predict_statuses(net, t_y[:64], threshold=0.5)
        moved = detector.predict_statuses(net, t_y[:64], threshold=0.5 + eps)
        probs = net.fault_probs(t_y[:64]).numpy()
        changed = base != moved
        assert np.all(np.abs(probs[changed] - 0.5) <= eps + 1e-6)

    def test_transfer_copies_feature_extractor_not_head(self, sa_setup):
        manifest, _, t_y, _, _ = sa_setup
        torch.manual_seed(2)
        source = detector.PanelStatusNet(manifest.sa_count)
        target = detector.transfer_to_new_head(source, 9)
        for p_src, p_dst in zip(source.backbone.parameters(), target.backbone.parameters()):
            assert torch.equal(p_src, p_dst)
        for p_src, p_dst in zip(source.input_stage.parameters(), target.input_stage.parameters()):
            assert torch.equal(p_src, p_dst)
        assert target.head.out_features == 9

    def test_freeze_schedule_pins_backbone(self, sa_setup):
        manifest, _, t_y, _, sas = sa_setup
        torch.manual_seed(3)
        net = detector.PanelStatusNet(manifest.sa_count)
        net.fit_input_scaler(t_y[:256])
        before = [p.detach().clone() for p in net.backbone.parameters()]
        head_before = net.head.weight.detach().clone()
        config = detector.DetectorConfig(
            epochs=2, batch_size=64, freeze=detector.FreezeSchedule(10), seed=3
        )
        detector.train_status_net(net, t_y[:256], torch.from_numpy(sas[:256]), config)
        for old, new in zip(before, net.backbone.parameters()):
            assert torch.equal(old, new)
        assert not torch.equal(head_before, net.head.weight)


class TestAssembly:
    def test_flagged_sa_takes_phase2_verdict(self, sa_setup):
        manifest = sa_setup[0]
        sub = np.ones(manifest.sa_size, dtype=np.uint8)
        sub[0] = 0
        full = detector.assemble_full_statuses(manifest, [2], {2: sub})
        members = data.sa_members(manifest.ris_shape, manifest.sa_count, 2)
        outside = np.setdiff1d(np.arange(manifest.n_elements), members)
        assert np.all(full[outside] == 1)
        np.testing.assert_array_equal(full[members], sub)

    def test_no_flags_means_all_healthy(self, sa_setup):
        manifest = sa_setup[0]
        full = detector.assemble_full_statuses(manifest, [], {})
        np.testing.assert_array_equal(full, np.ones(manifest.n_elements, dtype=np.uint8))


class TestIsolationLabels:
    def test_labels_slice_target_members(self, isolation_file):
        manifest, records = data.read_dataset(isolation_file)
        labels = detector.isolation_labels(manifest, records, [5, 6])
        for row, idx in enumerate([5, 6]):
            target = data.isolation_target(manifest, idx)
            members = data.sa_members(manifest.ris_shape, manifest.sa_count, target)
            np.testing.assert_array_equal(labels[row], records[idx].element_statuses[members])
