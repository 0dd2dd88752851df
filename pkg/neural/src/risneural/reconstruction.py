"""Panel-signal reconstruction from the receiver signal (stage 1).

A small CNN maps the receiver image to the panel signal; its output is
masked by the element statuses to reproduce the incomplete signal actually
observed.  A VAE then re-synthesizes the full-length signal from the masked
estimate, restoring plausible values at the masked slots from learned
cross-element structure.  Joint objective:

    |y_panel - cnn_masked|^2 + |cnn_masked - vae_out|^2 + KL(latent || N(0,1))

with an optional switch to supervise the VAE with the complete panel signal
instead of the masked estimate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from .data import Manifest
from .losses import gaussian_kl
from .preprocess import tensorize_batch


@dataclass
class ReconstructionConfig:
    cnn_width: int = 64
    hidden: int = 256
    latent: int = 32
    epochs: int = 150
    batch_size: int = 128
    lr: float = 1e-3
    seed: int = 0
    complete_target: bool = False
    kl_weight: float = 1.0


def _status_tensor(statuses) -> torch.Tensor:
    if isinstance(statuses, torch.Tensor):
        return statuses
    return torch.from_numpy(np.ascontiguousarray(statuses, dtype=np.float32))


class _RecoveryCnn(nn.Module):
    """Two convolution modules then a linear output sized to the panel.

    The output module sees the element statuses next to the convolutional
    features: the recovery operation receives the detector's status estimate
    anyway (its output is masked by it), and conditioning on it lets the net
    undo the mask's effect on the receiver signal.  Pooling is skipped once
    the spatial side would fall below 2, so the net accepts receiver grids
    as small as 1x1.
    """

    def __init__(self, in_side: tuple[int, int], n_elements: int, width: int = 64):
        super().__init__()
        h, w = in_side
        layers: list[nn.Module] = [nn.Conv2d(2, width, kernel_size=3, padding=1), nn.ReLU(inplace=True)]
        if min(h, w) >= 2:
            layers.append(nn.MaxPool2d(2))
            h, w = h // 2, w // 2
        layers += [nn.Conv2d(width, 2 * width, kernel_size=3, padding=1), nn.ReLU(inplace=True)]
        if min(h, w) >= 2:
            layers.append(nn.MaxPool2d(2))
            h, w = h // 2, w // 2
        self.conv = nn.Sequential(*layers)
        self.out = nn.Sequential(
            nn.Linear(2 * width * h * w + n_elements, 4 * n_elements),
            nn.ReLU(inplace=True),
            nn.Linear(4 * n_elements, 2 * n_elements),
        )

    def forward(self, x: torch.Tensor, statuses: torch.Tensor) -> torch.Tensor:
        return self.out(torch.cat([self.conv(x).flatten(1), statuses], dim=1))


class _SignalVae(nn.Module):
    def __init__(self, n_values: int, hidden: int, latent: int):
        super().__init__()
        self.encoder = nn.Sequential(nn.Linear(n_values, hidden), nn.ReLU(inplace=True))
        self.mu = nn.Linear(hidden, latent)
        self.log_var = nn.Linear(hidden, latent)
        self.decoder = nn.Sequential(
            nn.Linear(latent, hidden), nn.ReLU(inplace=True), nn.Linear(hidden, n_values)
        )

    def forward(self, x: torch.Tensor):
        h = self.encoder(x)
        mu, log_var = self.mu(h), self.log_var(h)
        if self.training:
            z = mu + torch.exp(0.5 * log_var) * torch.randn_like(mu)
        else:
            z = mu
        return self.decoder(z), mu, log_var


class SignalReconstructor(nn.Module):
    """Masked CNN recovery followed by VAE restoration."""

    def __init__(self, manifest: Manifest, config: ReconstructionConfig | None = None):
        super().__init__()
        config = config or ReconstructionConfig()
        self.m_shape = manifest.bs_shape
        self.n_elements = manifest.n_elements
        self.cnn = _RecoveryCnn(manifest.bs_shape, manifest.n_elements, config.cnn_width)
        self.vae = _SignalVae(2 * manifest.n_elements, config.hidden, config.latent)
        self.register_buffer("input_scale", torch.ones(1))
        self.register_buffer("target_scale", torch.ones(1))

    def fit_scalers(self, t_y: torch.Tensor, target_planes: torch.Tensor):
        self.input_scale.fill_(max(t_y.std().item(), 1e-12))
        self.target_scale.fill_(max(target_planes.std().item(), 1e-12))

    def forward(self, t_y: torch.Tensor, statuses):
        """Returns (masked CNN estimate, VAE output, mu, log_var), plane layout (B, 2N)."""
        status_t = _status_tensor(statuses).float()
        raw = self.cnn(t_y / self.input_scale, status_t)
        recovered = raw * status_t.to(raw.dtype).repeat(1, 2)
        restored, mu, log_var = self.vae(recovered)
        return recovered, restored, mu, log_var

    @torch.no_grad()
    def reconstruct(self, t_y: torch.Tensor, statuses) -> np.ndarray:
        """Complex panel-signal estimate (B, N) from the VAE branch."""
        self.eval()
        _, restored, _, _ = self(t_y, statuses)
        planes = (restored * self.target_scale).cpu().numpy()
        return planes[:, : self.n_elements] + 1j * planes[:, self.n_elements :]

    @torch.no_grad()
    def recover_masked(self, t_y: torch.Tensor, statuses) -> np.ndarray:
        """Complex masked CNN estimate (B, N): the zero-fill stage output."""
        self.eval()
        recovered, _, _, _ = self(t_y, statuses)
        planes = (recovered * self.target_scale).cpu().numpy()
        return planes[:, : self.n_elements] + 1j * planes[:, self.n_elements :]


def signal_planes(ys: np.ndarray) -> torch.Tensor:
    """(B, N) complex -> (B, 2N) float32 with real planes then imaginary planes."""
    ys = np.asarray(ys)
    return torch.from_numpy(
        np.concatenate([ys.real, ys.imag], axis=1).astype(np.float32)
    )


def train_reconstructor(
    model: SignalReconstructor,
    t_y: torch.Tensor,
    panel_signals: np.ndarray,
    statuses: np.ndarray,
    config: ReconstructionConfig,
) -> list[float]:
    """Joint CNN+VAE training; returns per-epoch losses."""
    torch.manual_seed(config.seed)
    generator = torch.Generator().manual_seed(config.seed)
    targets = signal_planes(panel_signals)
    model.fit_scalers(t_y, targets)
    targets = targets / model.target_scale
    status_t = torch.from_numpy(np.asarray(statuses, dtype=np.float32))
    optimizer = torch.optim.Adam(model.parameters(), lr=config.lr)
    losses = []
    n = len(t_y)
    for _ in range(config.epochs):
        model.train()
        order = torch.randperm(n, generator=generator)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            optimizer.zero_grad()
            recovered, restored, mu, log_var = model(t_y[idx], status_t[idx])
            cnn_term = (targets[idx] - recovered).pow(2).sum(dim=1).mean()
            vae_target = targets[idx] if config.complete_target else recovered
            vae_term = (vae_target - restored).pow(2).sum(dim=1).mean()
            loss = cnn_term + vae_term + config.kl_weight * gaussian_kl(mu, log_var)
            loss.backward()
            optimizer.step()
            total += loss.item() * len(idx)
        losses.append(total / n)
    return losses


def localization_tensors(manifest: Manifest, records) -> tuple[torch.Tensor, np.ndarray, np.ndarray, np.ndarray]:
    """Receiver tensors, complete panel signals, statuses, and positions."""
    ys = np.stack([r.bs_signal for r in records])
    t_y = tensorize_batch(ys, *manifest.bs_shape)
    panel = np.stack([r.ris_signal_complete for r in records])
    statuses = np.stack([r.element_statuses for r in records])
    positions = np.stack([r.mu_position for r in records])
    return t_y, panel, statuses, positions
