"""Shared input-stage + backbone + head assembly.

On the reduced backbone the forward pass uses a fused fast path: the channel
lift runs at the raw signal resolution (1x1 convs commute with per-channel
upsampling) and the upsample-then-average-pool pair collapses into one
precomputed linear resample.  The fused path computes the same function as
``backbone(input_stage(x))``; tests assert the equality.
"""

from __future__ import annotations

import torch
from torch import nn

from .backbone import ReducedDenseBackbone, build_backbone
from .preprocess import FusedResample, InputStage


class BackboneNet(nn.Module):
    """Normalized input -> input stage -> backbone -> linear head."""

    def __init__(self, out_dim: int, backbone: str = "reduced"):
        super().__init__()
        self.input_stage = InputStage()
        self.backbone = build_backbone(backbone)
        self.head = nn.Linear(self.backbone.feature_dim, out_dim)
        self.register_buffer("input_mean", torch.zeros(1))
        self.register_buffer("input_std", torch.ones(1))
        self.__dict__["_fused_cache"] = {}

    def fit_input_scaler(self, t_y: torch.Tensor):
        self.input_mean.fill_(t_y.mean().item())
        self.input_std.fill_(max(t_y.std().item(), 1e-12))

    def _fused_for(self, m1: int, m2: int) -> FusedResample:
        cache = self.__dict__["_fused_cache"]
        if (m1, m2) not in cache:
            cache[(m1, m2)] = FusedResample(m1, m2)
        return cache[(m1, m2)]

    def features(self, t_y: torch.Tensor, fused: bool = True) -> torch.Tensor:
        x = (t_y - self.input_mean) / self.input_std
        if fused and isinstance(self.backbone, ReducedDenseBackbone):
            small = self.input_stage.lift(x)
            pooled = self._fused_for(x.shape[-2], x.shape[-1])(small)
            return self.backbone.forward_pooled(pooled)
        return self.backbone(self.input_stage(x))

    def forward(self, t_y: torch.Tensor, fused: bool = True) -> torch.Tensor:
        return self.head(self.features(t_y, fused=fused))


def transfer_with_new_head(source: BackboneNet, target: BackboneNet):
    """Copy input stage, backbone, and input scaling; the head stays fresh."""
    target.input_stage.load_state_dict(source.input_stage.state_dict())
    target.backbone.load_state_dict(source.backbone.state_dict())
    target.input_mean.copy_(source.input_mean)
    target.input_std.copy_(source.input_std)
    return target
