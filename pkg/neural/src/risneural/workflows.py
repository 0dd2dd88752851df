"""End-to-end training workflows over dataset files.

These wire the building blocks into the three deployable pipelines and
return predictions for the canonical test split, ready for export and
re-scoring by the simulator's evaluation tooling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from . import detector as det
from . import localizer as loc
from . import reconstruction as rec
from .data import Manifest, split_indices
from .preprocess import tensorize_batch


@dataclass
class DualStageConfig:
    """Cross-fitted dual-stage localizer settings.

    The reconstruction model memorizes its training records, so the
    regressor never trains on reconstructions of records the reconstruction
    model fit: two fold models produce out-of-fit reconstructions for the
    regressor, and a final model trained on everything serves at inference.
    """

    reconstruction: rec.ReconstructionConfig = field(
        default_factory=lambda: rec.ReconstructionConfig(
            cnn_width=128, epochs=300, complete_target=True, kl_weight=0.1, seed=1
        )
    )
    regressor: loc.LocalizerConfig = field(
        default_factory=lambda: loc.LocalizerConfig(epochs=20, lr=1e-3, seed=0)
    )
    cross_fit: bool = True


def train_direct_localizer(
    manifest: Manifest, records, train_idx, config: loc.LocalizerConfig
) -> tuple[loc.CoordinateRegressor, list[float]]:
    """Coordinate regression straight from the receiver signal."""
    t_y = tensorize_batch(np.stack([records[i].bs_signal for i in train_idx]), *manifest.bs_shape)
    positions = np.stack([records[i].mu_position for i in train_idx])
    torch.manual_seed(config.seed)  # pins weight init, not only the train loop
    net = loc.CoordinateRegressor(config.backbone)
    losses = loc.train_regressor(net, t_y, positions, config)
    return net, losses


def predict_direct(manifest: Manifest, records, indices, net: loc.CoordinateRegressor) -> np.ndarray:
    t_y = tensorize_batch(np.stack([records[i].bs_signal for i in indices]), *manifest.bs_shape)
    return net.predict(t_y)


@dataclass
class DualStageModel:
    reconstructor: rec.SignalReconstructor
    regressor: loc.CoordinateRegressor


def train_dual_stage_localizer(
    manifest: Manifest, records, train_idx, config: DualStageConfig
) -> DualStageModel:
    """Stage 1 (reconstruction) plus stage 2 (regression on reconstructions)."""
    train_idx = np.asarray(train_idx)
    t_y_all = tensorize_batch(np.stack([r.bs_signal for r in records]), *manifest.bs_shape)
    panel = np.stack([r.ris_signal_complete for r in records])
    statuses = np.stack([r.element_statuses for r in records])
    positions = np.stack([r.mu_position for r in records])

    def fit_reconstructor(idx, seed_shift=0):
        cfg_dict = vars(config.reconstruction).copy()
        cfg_dict["seed"] = config.reconstruction.seed + seed_shift
        cfg = rec.ReconstructionConfig(**cfg_dict)
        torch.manual_seed(cfg.seed)
        model = rec.SignalReconstructor(manifest, cfg)
        rec.train_reconstructor(model, t_y_all[idx], panel[idx], statuses[idx], cfg)
        return model

    if config.cross_fit:
        half = len(train_idx) // 2
        folds = [train_idx[:half], train_idx[half:]]
        rest_train = np.empty((len(train_idx), manifest.n_elements), dtype=complex)
        for i, held_out in enumerate(folds):
            model_i = fit_reconstructor(folds[1 - i], seed_shift=i)
            sel = np.flatnonzero(np.isin(train_idx, held_out))
            rest_train[sel] = model_i.reconstruct(t_y_all[held_out], statuses[held_out])
        final = fit_reconstructor(train_idx)
    else:
        half = len(train_idx) // 2
        fit_idx, reg_idx = train_idx[:half], train_idx[half:]
        final = fit_reconstructor(fit_idx)
        rest_train = final.reconstruct(t_y_all[reg_idx], statuses[reg_idx])
        train_idx = reg_idx

    torch.manual_seed(config.regressor.seed)
    regressor = loc.CoordinateRegressor(config.regressor.backbone)
    loc.train_regressor(
        regressor,
        tensorize_batch(rest_train, *manifest.ris_shape),
        positions[train_idx],
        config.regressor,
    )
    return DualStageModel(reconstructor=final, regressor=regressor)


def predict_dual_stage(manifest: Manifest, records, indices, model: DualStageModel) -> np.ndarray:
    t_y = tensorize_batch(np.stack([records[i].bs_signal for i in indices]), *manifest.bs_shape)
    statuses = np.stack([records[i].element_statuses for i in indices])
    restored = model.reconstructor.reconstruct(t_y, statuses)
    return model.regressor.predict(tensorize_batch(restored, *manifest.ris_shape))


def train_phase1(
    manifest: Manifest, records, train_idx, config: det.DetectorConfig
) -> tuple[det.PanelStatusNet, list[float]]:
    """Sub-array screening model on a full-panel detection dataset."""
    t_y, _, sas = det.detection_tensors(manifest, records)
    torch.manual_seed(config.seed)
    net = det.PanelStatusNet(manifest.sa_count, config.backbone)
    net.fit_input_scaler(t_y[train_idx])
    losses = det.train_status_net(net, t_y[train_idx], torch.from_numpy(sas[train_idx]), config)
    return net, losses


def train_phase2(
    manifest: Manifest,
    records,
    train_idx,
    config: det.DetectorConfig,
    base: det.PanelStatusNet | None = None,
) -> tuple[det.PanelStatusNet, list[float]]:
    """Per-element model on a single-SA probing dataset.

    With ``base`` the input stage and backbone are transferred from the
    phase-1 model (its input scaling is refit on the probing signals);
    without it the model trains from scratch with no freeze schedule.
    """
    t_y, _, _ = det.detection_tensors(manifest, records)
    labels = det.isolation_labels(manifest, records, train_idx)
    torch.manual_seed(config.seed)
    if base is not None:
        net = det.transfer_to_new_head(base, manifest.sa_size, config.backbone)
        net.fit_input_scaler(t_y[train_idx])
        losses = det.train_status_net(
            net, t_y[train_idx], torch.from_numpy(labels), config, apply_freeze=True
        )
    else:
        net = det.PanelStatusNet(manifest.sa_size, config.backbone)
        net.fit_input_scaler(t_y[train_idx])
        losses = det.train_status_net(
            net, t_y[train_idx], torch.from_numpy(labels), config, apply_freeze=False
        )
    return net, losses


def epochs_to_reach(losses, threshold: float) -> int:
    """1-based epoch at which the loss first reaches ``threshold``.

    Returns ``len(losses) + 1`` when it never does, so comparisons stay
    meaningful for non-converging runs.
    """
    for i, value in enumerate(losses):
        if value <= threshold:
            return i + 1
    return len(losses) + 1


def canonical_split(manifest: Manifest):
    return split_indices(manifest)
