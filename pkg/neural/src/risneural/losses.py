"""Loss functions shared by the learned pipelines."""

from __future__ import annotations

import torch

PROB_CLIP = 1e-7


def msml_loss(probs: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Multi-label soft margin loss.

    ``probs`` are per-label probabilities of the positive class (clipped to
    [PROB_CLIP, 1 - PROB_CLIP]); ``labels`` are the {0, 1} targets.  Returns
    ``-mean(c * log(p) + (1 - c) * log(1 - p))`` over labels (and batch).
    """
    if probs.shape != labels.shape:
        raise ValueError(f"probs {tuple(probs.shape)} vs labels {tuple(labels.shape)}")
    p = probs.clamp(PROB_CLIP, 1.0 - PROB_CLIP)
    c = labels.to(p.dtype)
    return -(c * torch.log(p) + (1.0 - c) * torch.log(1.0 - p)).mean()


def gaussian_kl(mu: torch.Tensor, log_var: torch.Tensor) -> torch.Tensor:
    """KL divergence of N(mu, exp(log_var)) from the standard normal prior.

    Summed over latent dimensions, averaged over any leading batch dimension:
    ``-0.5 * sum(1 + log_var - mu^2 - exp(log_var))``.
    """
    if mu.shape != log_var.shape:
        raise ValueError("mu and log_var must share a shape")
    per = -0.5 * (1.0 + log_var - mu.pow(2) - log_var.exp())
    if per.dim() <= 1:
        return per.sum()
    return per.sum(dim=-1).mean()
