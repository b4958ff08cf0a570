"""Training losses: squared reconstruction error and the adversarial game."""

from __future__ import annotations

import torch

EPS = 1e-7


def l2_loss(prediction, target):
    """Sum of squared differences per sample, averaged over the batch."""
    if prediction.shape != target.shape:
        raise ValueError(f"shape mismatch: {tuple(prediction.shape)} vs {tuple(target.shape)}")
    return ((prediction - target) ** 2).reshape(prediction.shape[0], -1).sum(dim=1).mean()


def adversarial_value(discriminator, real, fake):
    """E[log D(real) + log(1 - D(fake))], the value the discriminator maximizes.

    Probabilities are clamped away from {0, 1} so saturated discriminators
    cannot produce infinities.
    """
    d_real = discriminator(real).clamp(EPS, 1 - EPS)
    d_fake = discriminator(fake).clamp(EPS, 1 - EPS)
    return (torch.log(d_real) + torch.log(1 - d_fake)).mean()


def generator_adversarial_loss(discriminator, fake):
    """Non-saturating generator objective: -E[log D(fake)]."""
    d_fake = discriminator(fake).clamp(EPS, 1 - EPS)
    return -torch.log(d_fake).mean()


def discriminator_accuracy(discriminator, real, fake):
    with torch.no_grad():
        hits = (discriminator(real) > 0.5).float().sum() + \
            (discriminator(fake) <= 0.5).float().sum()
    return float(hits) / (real.shape[0] + fake.shape[0])
