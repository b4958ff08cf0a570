"""Toy-scale trainer for the content prediction network, plus NPSW exporters."""

from .model import ContentNet, Discriminator, predict01
from .train import TrainingConfig, train_content_net

__all__ = ["ContentNet", "Discriminator", "TrainingConfig", "predict01", "train_content_net"]
