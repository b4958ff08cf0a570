"""NPSW export: the trained content network and a VGG-19 texture subgraph.

Layer names follow the engine's reserved families
(``contentnet.<layer>.weight|bias``, ``vgg19.<layer>.weight|bias``,
``vgg19.mean``); any model tensor that cannot be mapped raises
:class:`MappingError` instead of silently writing a partial file.
"""

from __future__ import annotations

import numpy as np
import torch

from . import npsw
from .model import ContentNet


class MappingError(KeyError):
    """Model parameters do not line up with the reserved tensor names."""


_CONTENT_LAYERS = (
    [(f"enc{i+1}", f"encoder.{i}") for i in range(5)]
    + [("fc1", "fc1"), ("fc2", "fc2")]
    + [(f"dec{i+1}", f"decoder.{i}") for i in range(4)]
)


def content_net_tensors(model: ContentNet):
    state = model.state_dict()
    out = {}
    for public, internal in _CONTENT_LAYERS:
        for part in ("weight", "bias"):
            key = f"{internal}.{part}"
            if key not in state:
                raise MappingError(f"model lacks tensor {key} for contentnet.{public}.{part}")
            out[f"contentnet.{public}.{part}"] = state[key].detach().numpy()
    return out


def export_content_net(model, path):
    npsw.write(path, content_net_tensors(model))


# VGG-19 features() indices of the nine convs up to relu4_1.
_VGG_CONVS = [
    ("conv1_1", 0), ("conv1_2", 2),
    ("conv2_1", 5), ("conv2_2", 7),
    ("conv3_1", 10), ("conv3_2", 12), ("conv3_3", 14), ("conv3_4", 16),
    ("conv4_1", 19),
]
RELU3_1_INDEX = 11
RELU4_1_INDEX = 20

# Dataset means on the 0..255 scale, stored with the weights so the engine
# normalizes inputs exactly the way the exporter expects.
VGG_MEAN = np.array([123.68, 116.779, 103.939], dtype=np.float32)


def build_vgg19(pretrained=False, seed=0):
    """torchvision VGG-19 feature stack through relu4_1.

    Without pretrained weights the convs keep their Kaiming init except that
    the first layer is scaled down to tame the 0..255 input range, keeping
    activations O(1) through the stack.
    """
    from torchvision import models

    weights = models.VGG19_Weights.IMAGENET1K_V1 if pretrained else None
    torch.manual_seed(seed)
    vgg = models.vgg19(weights=weights)
    features = vgg.features[: RELU4_1_INDEX + 1].eval()
    if not pretrained:
        with torch.no_grad():
            features[0].weight *= 1.0 / 70.0
    for p in features.parameters():
        p.requires_grad_(False)
    return features


def vgg_tensors(features):
    out = {"vgg19.mean": VGG_MEAN}
    for name, idx in _VGG_CONVS:
        layer = features[idx]
        if layer.bias is None:
            raise MappingError(f"vgg layer {name} has no bias tensor")
        out[f"vgg19.{name}.weight"] = layer.weight.detach().numpy()
        out[f"vgg19.{name}.bias"] = layer.bias.detach().numpy()
    return out


def export_vgg(path, pretrained=False, seed=0):
    features = build_vgg19(pretrained=pretrained, seed=seed)
    npsw.write(path, vgg_tensors(features))
    return features


def vgg_features(features, image01):
    """relu3_1 / relu4_1 activations for a [0,1] image, engine conventions."""
    x = torch.as_tensor(np.asarray(image01, dtype=np.float32)) * 255.0
    x = x - torch.as_tensor(VGG_MEAN)[None, :, None, None]
    taps = {}
    with torch.no_grad():
        for i, layer in enumerate(features):
            x = layer(x)
            if i == RELU3_1_INDEX:
                taps["relu3_1"] = x.numpy().copy()
            elif i == RELU4_1_INDEX:
                taps["relu4_1"] = x.numpy().copy()
    return taps
