"""Content prediction network and its adversarial discriminator.

The generator maps a 128x128 image (center hole filled with the mean color,
values in [-1, 1]) to the 64x64 center content through a five-stage stride-2
encoder, a fully-connected bottleneck, and a four-stage transposed-conv
decoder.  All hidden activations are ELU; the output is tanh.  Layer names
and shapes line up one-to-one with the inpainting engine's loader.
"""

from __future__ import annotations

import torch
from torch import nn

# Encoder channel widths.  FULL_WIDTHS is the production setting; the slim
# default keeps toy-scale CPU training quick.
FULL_WIDTHS = (64, 128, 256, 512, 512)
TOY_WIDTHS = (16, 32, 64, 128, 128)
FULL_BOTTLENECK = 4096
TOY_BOTTLENECK = 512


class ContentNet(nn.Module):
    def __init__(self, widths=TOY_WIDTHS, bottleneck=TOY_BOTTLENECK):
        super().__init__()
        self.widths = tuple(widths)
        self.bottleneck = bottleneck
        chans = [3, *widths]
        self.encoder = nn.ModuleList(
            nn.Conv2d(chans[i], chans[i + 1], 4, stride=2, padding=1) for i in range(5)
        )
        flat = widths[-1] * 4 * 4
        self.fc1 = nn.Linear(flat, bottleneck)
        self.fc2 = nn.Linear(bottleneck, flat)
        dec = [widths[-1], widths[-2], widths[-3], widths[-4], 3]
        self.decoder = nn.ModuleList(
            nn.ConvTranspose2d(dec[i], dec[i + 1], 4, stride=2, padding=1) for i in range(4)
        )
        self.act = nn.ELU()

    def forward(self, x):
        """[-1, 1] input of shape (n, 3, 128, 128) -> tanh output (n, 3, 64, 64)."""
        for conv in self.encoder:
            x = self.act(conv(x))
        n = x.shape[0]
        x = self.act(self.fc1(x.reshape(n, -1)))
        x = self.act(self.fc2(x))
        x = x.reshape(n, self.widths[-1], 4, 4)
        for i, deconv in enumerate(self.decoder):
            x = deconv(x)
            x = torch.tanh(x) if i == 3 else self.act(x)
        return x


def predict01(model, image01):
    """Convenience wrapper matching the engine's convention ([0,1] in/out)."""
    with torch.no_grad():
        out = model(image01 * 2.0 - 1.0)
    return (out + 1.0) * 0.5


class Discriminator(nn.Module):
    """Four stride-2 4x4 convs over the 64x64 prediction, then a sigmoid."""

    def __init__(self, base=32):
        super().__init__()
        chans = [3, base, base * 2, base * 4, base * 8]
        self.convs = nn.ModuleList(
            nn.Conv2d(chans[i], chans[i + 1], 4, stride=2, padding=1) for i in range(4)
        )
        self.head = nn.Linear(chans[-1] * 4 * 4, 1)
        self.act = nn.LeakyReLU(0.2)

    def forward(self, x):
        for conv in self.convs:
            x = self.act(conv(x))
        return torch.sigmoid(self.head(x.reshape(x.shape[0], -1)))
