"""Two-phase fault detector.

Phase 1 screens the panel at sub-array granularity from the receiver signal;
phase 2 reuses phase 1's input stage and backbone (transfer) to classify the
individual elements inside a flagged sub-array, trained on single-SA probing
records.  Full-panel estimates are assembled by marking everything outside
flagged sub-arrays healthy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from .backbone import FreezeSchedule, set_frozen
from .data import Manifest, isolation_target, sa_members
from .losses import msml_loss
from .pipeline import BackboneNet, transfer_with_new_head
from .preprocess import tensorize_batch


@dataclass
class DetectorConfig:
    backbone: str = "reduced"
    epochs: int = 8
    batch_size: int = 64
    lr: float = 1e-3
    freeze: FreezeSchedule = field(default_factory=lambda: FreezeSchedule(2))
    seed: int = 0


class PanelStatusNet(BackboneNet):
    """Backbone classifier emitting per-label fault probabilities.

    The head produces one logit per label; sigmoid gives the probability
    that the label is faulty (status 0).
    """

    @torch.no_grad()
    def fault_probs(self, t_y: torch.Tensor, batch_size: int = 512) -> torch.Tensor:
        self.eval()
        chunks = [
            torch.sigmoid(self(t_y[i : i + batch_size]))
            for i in range(0, len(t_y), batch_size)
        ]
        return torch.cat(chunks)


def transfer_to_new_head(source: PanelStatusNet, out_dim: int, backbone: str = "reduced") -> PanelStatusNet:
    """New detector with a fresh head, inheriting input stage + backbone weights."""
    return transfer_with_new_head(source, PanelStatusNet(out_dim, backbone))


def train_status_net(
    net: PanelStatusNet,
    t_y: torch.Tensor,
    statuses: torch.Tensor,
    config: DetectorConfig,
    apply_freeze: bool = True,
) -> list[float]:
    """Fit the net to {0,1} status labels (1 = healthy); returns per-epoch losses.

    The loss is the multi-label soft margin loss on the predicted
    probabilities of the healthy class.  While the freeze schedule holds,
    backbone parameters take no gradient steps; the input stage and head
    train from the start.
    """
    torch.manual_seed(config.seed)
    generator = torch.Generator().manual_seed(config.seed)
    optimizer = torch.optim.Adam(net.parameters(), lr=config.lr)
    statuses = statuses.float()
    losses = []
    n = len(t_y)
    for epoch in range(config.epochs):
        if apply_freeze:
            set_frozen(net.backbone, config.freeze.backbone_frozen(epoch))
        net.train()
        order = torch.randperm(n, generator=generator)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            optimizer.zero_grad()
            logits = net(t_y[idx])
            healthy_probs = 1.0 - torch.sigmoid(logits)
            loss = msml_loss(healthy_probs, statuses[idx])
            loss.backward()
            optimizer.step()
            total += loss.item() * len(idx)
        losses.append(total / n)
    set_frozen(net.backbone, False)
    return losses


@torch.no_grad()
def predict_statuses(net: PanelStatusNet, t_y: torch.Tensor, threshold: float = 0.5) -> np.ndarray:
    """Binary statuses from fault probabilities: 0 (faulty) at p >= threshold."""
    probs = net.fault_probs(t_y)
    return (probs < threshold).to(torch.uint8).cpu().numpy()


def detection_tensors(manifest: Manifest, records) -> tuple[torch.Tensor, np.ndarray, np.ndarray]:
    """Receiver-signal tensors plus element/SA status labels for detection records."""
    ys = np.stack([r.bs_signal for r in records])
    t_y = tensorize_batch(ys, *manifest.bs_shape)
    element = np.stack([r.element_statuses for r in records])
    sas = np.stack([r.sa_statuses for r in records])
    return t_y, element, sas


def isolation_labels(manifest: Manifest, records, indices) -> np.ndarray:
    """Per-record element statuses inside the probed sub-array."""
    labels = np.empty((len(indices), manifest.sa_size), dtype=np.uint8)
    for row, idx in enumerate(indices):
        members = sa_members(manifest.ris_shape, manifest.sa_count, isolation_target(manifest, idx))
        labels[row] = records[idx].element_statuses[members]
    return labels


def assemble_full_statuses(
    manifest: Manifest,
    flagged_sas,
    sub_statuses: dict[int, np.ndarray],
) -> np.ndarray:
    """Full-panel status estimate from flagged SAs and their element verdicts.

    Everything outside a flagged sub-array is declared healthy; inside, the
    phase-2 verdict applies.
    """
    full = np.ones(manifest.n_elements, dtype=np.uint8)
    for sa in flagged_sas:
        members = sa_members(manifest.ris_shape, manifest.sa_count, int(sa))
        full[members] = sub_statuses[int(sa)]
    return full
