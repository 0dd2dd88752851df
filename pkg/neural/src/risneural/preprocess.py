"""Signal-to-tensor preprocessing for the backbone models.

A complex length-``m1*m2`` signal becomes a two-plane image (real part in
channel 0, imaginary part in channel 1) laid out elevation-major, exactly
inverting the dataset record layout.  The image is bilinearly upsampled to
256x256 and a learned 1x1 convolution lifts the two channels to the three
the backbone expects.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from torch import nn
from torch.nn import functional as F

BACKBONE_SIDE = 256


def tensorize(y: np.ndarray, m1: int, m2: int) -> torch.Tensor:
    """(m1*m2,) complex -> (2, m1, m2) float32, channel 0 real / 1 imag."""
    y = np.asarray(y)
    if y.shape != (m1 * m2,):
        raise ValueError(f"signal length {y.shape} does not match {m1}x{m2}")
    planes = np.stack([y.real.reshape(m1, m2), y.imag.reshape(m1, m2)])
    return torch.from_numpy(planes.astype(np.float32))


def tensorize_batch(ys: np.ndarray, m1: int, m2: int) -> torch.Tensor:
    """(B, m1*m2) complex -> (B, 2, m1, m2) float32."""
    ys = np.asarray(ys)
    planes = np.stack(
        [ys.real.reshape(-1, m1, m2), ys.imag.reshape(-1, m1, m2)], axis=1
    )
    return torch.from_numpy(planes.astype(np.float32))


def upsample(t: torch.Tensor, side: int = BACKBONE_SIDE) -> torch.Tensor:
    """Bilinear resize of (..., 2, m1, m2) to (..., 2, side, side)."""
    squeeze = t.dim() == 3
    if squeeze:
        t = t.unsqueeze(0)
    out = F.interpolate(t, size=(side, side), mode="bilinear", align_corners=False)
    return out.squeeze(0) if squeeze else out


class InputStage(nn.Module):
    """Upsample to the backbone side and lift two channels to three.

    The lift is a 1x1 convolution (a per-pixel channel map), so it commutes
    exactly with the per-channel bilinear upsample; ``forward`` applies it at
    the small resolution first, which is the cheap order on CPU.
    """

    def __init__(self, side: int = BACKBONE_SIDE):
        super().__init__()
        self.side = side
        self.lift = nn.Conv2d(2, 3, kernel_size=1)

    def forward(self, t_y: torch.Tensor) -> torch.Tensor:
        return upsample(self.lift(t_y), self.side)


class FusedResample(nn.Module):
    """Bilinear upsample to 256 followed by 8x8 average pooling, as one map.

    Both steps are fixed linear operators per channel, so their composition
    is a single (m1*m2 -> 32*32) matrix, precomputed from basis images.  Used
    as the training fast path; equality with the unfused pipeline is covered
    by tests.
    """

    def __init__(self, m1: int, m2: int, side: int = BACKBONE_SIDE, pool: int = 8):
        super().__init__()
        self.out_side = side // pool
        with torch.no_grad():
            basis = torch.eye(m1 * m2).reshape(m1 * m2, 1, m1, m2)
            big = F.interpolate(basis, size=(side, side), mode="bilinear", align_corners=False)
            pooled = F.avg_pool2d(big, pool)
        self.register_buffer("matrix", pooled.reshape(m1 * m2, -1))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        b, c = x.shape[0], x.shape[1]
        flat = x.reshape(b, c, -1) @ self.matrix
        return flat.reshape(b, c, self.out_side, self.out_side)


@dataclass(frozen=True)
class InputTensor:
    """The three preprocessing stages for one signal."""

    t_y: torch.Tensor
    t_up: torch.Tensor
    t_backbone: torch.Tensor


def preprocess(y: np.ndarray, m1: int, m2: int, stage: InputStage | None = None) -> InputTensor:
    """Full preprocessing of one complex signal; ``stage`` holds the lift conv."""
    if stage is None:
        stage = InputStage()
    t_y = tensorize(y, m1, m2)
    t_up = upsample(t_y)
    with torch.no_grad():
        t_backbone = stage.lift(t_up.unsqueeze(0)).squeeze(0)
    return InputTensor(t_y=t_y, t_up=t_up, t_backbone=t_backbone)
