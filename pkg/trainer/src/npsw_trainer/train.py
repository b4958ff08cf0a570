"""Training loop for the content network.

The generator minimizes lambda * L_l2 + (1 - lambda) * L_adv with the
discriminator updated in alternation; lambda defaults to 0.999, and
lambda = 1 reduces to pure regression with the adversarial branch inert.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

import torch
from torch.utils.data import DataLoader

from .data import HoleDataset, make_toy_images
from .losses import (adversarial_value, discriminator_accuracy, generator_adversarial_loss,
                     l2_loss)
from .model import ContentNet, Discriminator, TOY_BOTTLENECK, TOY_WIDTHS


@dataclass
class TrainingConfig:
    data: object = "toy"          # directory path or "toy"
    lam: float = 0.999            # weight of the l2 term
    epochs: int = 20
    batch_size: int = 8
    lr: float = 1e-3
    d_lr: float = 4e-4
    lr_decay_epoch: int | None = None   # step the generator lr down once
    lr_decay_factor: float = 0.1
    n_toy_images: int = 200
    val_fraction: float = 0.1
    widths: tuple = TOY_WIDTHS
    bottleneck: int = TOY_BOTTLENECK
    seed: int = 0
    export_path: str | None = None

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lambda must lie in [0, 1]")


@dataclass
class History:
    epochs: list = field(default_factory=list)
    baseline_val_l2: float = float("nan")  # untrained model, before epoch 0

    def log(self, **kw):
        self.epochs.append(kw)

    def series(self, key):
        return [e[key] for e in self.epochs]


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss; the last good model is attached."""

    def __init__(self, message, model):
        super().__init__(message)
        self.model = model


def _load_images(config):
    if isinstance(config.data, str) and config.data != "toy":
        from .data import load_directory

        return load_directory(config.data)
    return make_toy_images(config.n_toy_images, seed=config.seed)


def train_content_net(config: TrainingConfig):
    """Returns (model, history); raises DivergenceError on NaN losses."""
    torch.manual_seed(config.seed)
    images = _load_images(config)
    if len(images) == 1:
        # Single-image overfit runs train and validate on the same sample.
        train_images = val_images = images
    else:
        n_val = max(1, int(len(images) * config.val_fraction))
        train_images, val_images = images[:-n_val], images[-n_val:]
    train_set = HoleDataset(train_images)
    val_set = HoleDataset(val_images)
    loader = DataLoader(train_set, batch_size=config.batch_size, shuffle=True,
                        generator=torch.Generator().manual_seed(config.seed))

    model = ContentNet(widths=config.widths, bottleneck=config.bottleneck)
    opt_g = torch.optim.Adam(model.parameters(), lr=config.lr, betas=(0.5, 0.999))
    use_adv = config.lam < 1.0
    disc = Discriminator() if use_adv else None
    opt_d = torch.optim.Adam(disc.parameters(), lr=config.d_lr, betas=(0.5, 0.999)) \
        if use_adv else None

    history = History()
    history.baseline_val_l2 = evaluate_l2(model, val_set)
    last_good = copy.deepcopy(model.state_dict())
    for epoch in range(config.epochs):
        model.train()
        epoch_l2 = epoch_adv = 0.0
        epoch_acc = []
        for x, target in loader:
            pred = model(x)
            if use_adv:
                # Discriminator sees real centers vs detached predictions.
                opt_d.zero_grad()
                d_value = adversarial_value(disc, target, pred.detach())
                (-d_value).backward()
                opt_d.step()
                epoch_acc.append(discriminator_accuracy(disc, target, pred.detach()))

            opt_g.zero_grad()
            rec = l2_loss(pred, target)
            adv = generator_adversarial_loss(disc, pred) if use_adv else torch.zeros(())
            loss = config.lam * rec + (1.0 - config.lam) * adv
            loss.backward()
            opt_g.step()

            loss_val = float(loss.detach())
            if not math.isfinite(loss_val):
                model.load_state_dict(last_good)
                raise DivergenceError(f"non-finite loss at epoch {epoch}", model)
            epoch_l2 += float(rec.detach()) * len(x)
            epoch_adv += float(adv.detach()) * len(x)

        if config.lr_decay_epoch is not None and epoch + 1 == config.lr_decay_epoch:
            for group in opt_g.param_groups:
                group["lr"] *= config.lr_decay_factor
        last_good = copy.deepcopy(model.state_dict())
        val_l2 = evaluate_l2(model, val_set)
        history.log(
            epoch=epoch,
            train_l2=epoch_l2 / len(train_set),
            train_adv=epoch_adv / len(train_set),
            val_l2=val_l2,
            d_accuracy=(sum(epoch_acc) / len(epoch_acc)) if epoch_acc else None,
        )
    return model, history


def evaluate_l2(model, dataset):
    model.eval()
    total = 0.0
    with torch.no_grad():
        for i in range(len(dataset)):
            x, target = dataset[i]
            total += float(l2_loss(model(x[None]), target[None]))
    return total / len(dataset)
