"""Feature-extraction backbones and the transfer freeze schedule.

The default backbone is a reduced densely-connected CNN sized for laptop
training; a full torchvision DenseNet-121 can be swapped in by name for
full-scale runs (its ImageNet weights must be available locally, this
environment trains it from scratch otherwise).  Both expose ``feature_dim``
and map (B, 3, 256, 256) images to (B, feature_dim) features, so heads are
interchangeable.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn


@dataclass(frozen=True)
class FreezeSchedule:
    """Backbone parameters stay frozen for the first ``frozen_epochs`` epochs.

    The frozen set never grows once released, so the frozen-parameter set is
    non-increasing over training.
    """

    frozen_epochs: int = 2

    def backbone_frozen(self, epoch: int) -> bool:
        return epoch < self.frozen_epochs


class _DenseLayer(nn.Module):
    def __init__(self, in_channels: int, growth: int):
        super().__init__()
        self.body = nn.Sequential(
            nn.BatchNorm2d(in_channels),
            nn.ReLU(inplace=True),
            nn.Conv2d(in_channels, growth, kernel_size=3, padding=1, bias=False),
        )

    def forward(self, x):
        return torch.cat([x, self.body(x)], dim=1)


class _DenseBlock(nn.Sequential):
    def __init__(self, in_channels: int, layers: int, growth: int):
        super().__init__(
            *[_DenseLayer(in_channels + i * growth, growth) for i in range(layers)]
        )
        self.out_channels = in_channels + layers * growth


class ReducedDenseBackbone(nn.Module):
    """Small densely-connected feature extractor for desk-scale training.

    The stem average-pools the 256x256 input down to 32x32 before any
    convolution; :meth:`forward_pooled` enters after that pooling, letting
    callers fuse the pooling with the preprocessing upsample (the two are
    adjacent fixed linear maps).
    """

    def __init__(self, growth: int = 12, block_layers: tuple[int, int] = (3, 3)):
        super().__init__()
        stem_out = 16
        self.pool = nn.AvgPool2d(8)
        self.stem = nn.Sequential(
            nn.Conv2d(3, stem_out, kernel_size=3, padding=1, bias=False),
            nn.BatchNorm2d(stem_out),
            nn.ReLU(inplace=True),
            nn.MaxPool2d(2),
        )
        self.block1 = _DenseBlock(stem_out, block_layers[0], growth)
        trans_out = self.block1.out_channels // 2
        self.transition = nn.Sequential(
            nn.BatchNorm2d(self.block1.out_channels),
            nn.ReLU(inplace=True),
            nn.Conv2d(self.block1.out_channels, trans_out, kernel_size=1, bias=False),
            nn.AvgPool2d(2),
        )
        self.block2 = _DenseBlock(trans_out, block_layers[1], growth)
        self.head = nn.Sequential(
            nn.BatchNorm2d(self.block2.out_channels),
            nn.ReLU(inplace=True),
            nn.AdaptiveAvgPool2d(1),
            nn.Flatten(),
        )
        self.feature_dim = self.block2.out_channels

    def forward_pooled(self, x: torch.Tensor) -> torch.Tensor:
        """Feature extraction from the already-pooled 32x32 representation."""
        return self.head(self.block2(self.transition(self.block1(self.stem(x)))))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.forward_pooled(self.pool(x))


class _DenseNet121Features(nn.Module):
    def __init__(self, weights=None):
        super().__init__()
        from torchvision.models import densenet121

        net = densenet121(weights=weights)
        self.features = net.features
        self.feature_dim = net.classifier.in_features

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        f = torch.relu(self.features(x))
        return torch.flatten(torch.nn.functional.adaptive_avg_pool2d(f, 1), 1)


def build_backbone(name: str = "reduced") -> nn.Module:
    if name == "reduced":
        return ReducedDenseBackbone()
    if name == "densenet121":
        return _DenseNet121Features()
    raise ValueError(f"unknown backbone {name!r}")


def set_frozen(module: nn.Module, frozen: bool):
    for p in module.parameters():
        p.requires_grad = not frozen
