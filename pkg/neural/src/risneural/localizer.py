"""Coordinate regression on signal fingerprints (stage 2 and the direct path).

The same backbone regressor serves both localizers: the dual-stage pipeline
feeds it the reconstructed panel signal shaped to the panel grid, the direct
pipeline feeds it the raw receiver signal shaped to the receiver grid.  The
head has three outputs, one per coordinate; training minimizes mean squared
error on standardized coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from .backbone import FreezeSchedule, set_frozen
from .pipeline import BackboneNet


@dataclass
class LocalizerConfig:
    backbone: str = "reduced"
    epochs: int = 20
    batch_size: int = 64
    lr: float = 1e-3
    freeze: FreezeSchedule = field(default_factory=lambda: FreezeSchedule(2))
    seed: int = 0


class CoordinateRegressor(BackboneNet):
    """Backbone regressor with a three-output head for (x, y, z)."""

    def __init__(self, backbone: str = "reduced"):
        super().__init__(out_dim=3, backbone=backbone)
        self.register_buffer("target_mean", torch.zeros(3))
        self.register_buffer("target_std", torch.ones(3))

    def fit_scalers(self, t_y: torch.Tensor, positions: np.ndarray):
        self.fit_input_scaler(t_y)
        pos = torch.from_numpy(np.asarray(positions, dtype=np.float32))
        self.target_mean.copy_(pos.mean(dim=0))
        self.target_std.copy_(pos.std(dim=0).clamp_min(1e-6))

    @torch.no_grad()
    def predict(self, t_y: torch.Tensor, batch_size: int = 512) -> np.ndarray:
        """Denormalized coordinate estimates, shape (B, 3)."""
        self.eval()
        outs = []
        for i in range(0, len(t_y), batch_size):
            normed = self(t_y[i : i + batch_size])
            outs.append(normed * self.target_std + self.target_mean)
        return torch.cat(outs).cpu().numpy().astype(np.float64)


def train_regressor(
    net: CoordinateRegressor,
    t_y: torch.Tensor,
    positions: np.ndarray,
    config: LocalizerConfig,
    apply_freeze: bool = True,
) -> list[float]:
    """MSE training on standardized coordinates; returns per-epoch losses."""
    torch.manual_seed(config.seed)
    generator = torch.Generator().manual_seed(config.seed)
    net.fit_scalers(t_y, positions)
    targets = (
        torch.from_numpy(np.asarray(positions, dtype=np.float32)) - net.target_mean
    ) / net.target_std
    optimizer = torch.optim.Adam(net.parameters(), lr=config.lr)
    criterion = nn.MSELoss()
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
            loss = criterion(net(t_y[idx]), targets[idx])
            loss.backward()
            optimizer.step()
            total += loss.item() * len(idx)
        losses.append(total / n)
    set_frozen(net.backbone, False)
    return losses
