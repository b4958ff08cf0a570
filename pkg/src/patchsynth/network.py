"""Layer graphs over the raw kernels: the frozen texture network used for
patch features and the content network used to seed the coarsest scale.

A :class:`NetworkGraph` is an ordered list of layers plus an immutable weight
table.  Forward passes return the requested tap activations together with a
:class:`ForwardCache`; the cache is what makes the input-gradient backward
pass possible without a general autodiff engine.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import npsw
from .kernels import (
    ConvSpec,
    ShapeMismatchError,
    activation_backward,
    activation_forward,
    conv2d_backward_input,
    conv2d_forward,
    conv_transpose2d_forward,
    maxpool2x2_backward,
    maxpool2x2_forward,
)

load_weights = npsw.load_weights
write_weights = npsw.write_weights


class MissingWeightsError(KeyError):
    """The weight table lacks tensors the graph declares."""


class StaleCacheError(ValueError):
    """A backward pass was handed a cache from a different forward pass."""


@dataclass(frozen=True)
class LayerSpec:
    """One layer of a feed-forward graph.

    kind is one of conv | deconv | relu | elu | tanh | maxpool | fc.
    Conv kinds carry a ConvSpec; fc carries (in_features, out_features) and
    the CHW shape its output should be viewed as.
    """

    name: str
    kind: str
    conv: ConvSpec | None = None
    fc_features: tuple | None = None
    out_shape: tuple | None = None


@dataclass
class ForwardCache:
    """Per-layer outputs and pooling index maps for one forward pass."""

    graph_id: int
    input_shape: tuple
    outputs: list = field(default_factory=list)
    pool_indices: dict = field(default_factory=dict)


class NetworkGraph:
    """Ordered layers plus a frozen weight table keyed by layer name."""

    def __init__(self, name, layers, weights, prefix):
        self.name = name
        self.layers = list(layers)
        self.prefix = prefix
        self._weights = {}
        for layer in self.layers:
            if layer.kind in ("conv", "deconv", "fc"):
                wkey = f"{prefix}.{layer.name}.weight"
                bkey = f"{prefix}.{layer.name}.bias"
                if wkey not in weights or bkey not in weights:
                    raise MissingWeightsError(f"missing tensors for layer {layer.name!r}")
                w = np.asarray(weights[wkey])
                b = np.asarray(weights[bkey])
                self._check_layer_weights(layer, w, b)
                self._weights[layer.name] = (w, b)
        self._validate_chain()

    @staticmethod
    def _check_layer_weights(layer, w, b):
        if layer.kind == "conv":
            s = layer.conv
            want = (s.out_channels, s.in_channels, s.kernel_h, s.kernel_w)
            if w.shape != want:
                raise npsw.DimMismatchError(
                    f"{layer.name}: weight shape {w.shape}, graph declares {want}"
                )
            if b.shape != (s.out_channels,):
                raise npsw.DimMismatchError(f"{layer.name}: bad bias shape {b.shape}")
        elif layer.kind == "deconv":
            s = layer.conv
            want = (s.in_channels, s.out_channels, s.kernel_h, s.kernel_w)
            if w.shape != want:
                raise npsw.DimMismatchError(
                    f"{layer.name}: weight shape {w.shape}, graph declares {want}"
                )
            if b.shape != (s.out_channels,):
                raise npsw.DimMismatchError(f"{layer.name}: bad bias shape {b.shape}")
        elif layer.kind == "fc":
            fin, fout = layer.fc_features
            if w.shape != (fout, fin):
                raise npsw.DimMismatchError(
                    f"{layer.name}: weight shape {w.shape}, graph declares {(fout, fin)}"
                )
            if b.shape != (fout,):
                raise npsw.DimMismatchError(f"{layer.name}: bad bias shape {b.shape}")

    def _validate_chain(self):
        channels = None
        for layer in self.layers:
            if layer.kind in ("conv", "deconv"):
                cin = layer.conv.in_channels
                if channels is not None and channels != cin:
                    raise npsw.DimMismatchError(
                        f"{layer.name}: expects {cin} channels, previous layer emits {channels}"
                    )
                channels = layer.conv.out_channels
            elif layer.kind == "fc":
                channels = layer.out_shape[0]

    def layer_names(self):
        return [layer.name for layer in self.layers]

    def weight(self, layer_name):
        return self._weights[layer_name]

    def astype(self, dtype):
        """Copy of the graph with weights cast to `dtype` (for verification)."""
        table = {}
        for layer in self.layers:
            if layer.name in self._weights:
                w, b = self._weights[layer.name]
                table[f"{self.prefix}.{layer.name}.weight"] = w.astype(dtype)
                table[f"{self.prefix}.{layer.name}.bias"] = b.astype(dtype)
        return NetworkGraph(self.name, self.layers, table, self.prefix)

    def forward(self, x, upto=None):
        """Run the graph, caching every layer output.

        `upto` stops after the named layer; returns (acts, cache) where acts
        maps layer name -> activation.
        """
        acts = {}
        cache = ForwardCache(graph_id=id(self), input_shape=x.shape)
        cur = x
        for layer in self.layers:
            if layer.kind == "conv":
                w, b = self._weights[layer.name]
                cur = conv2d_forward(cur, w.astype(cur.dtype, copy=False),
                                     b.astype(cur.dtype, copy=False), layer.conv)
            elif layer.kind == "deconv":
                w, b = self._weights[layer.name]
                cur = conv_transpose2d_forward(
                    cur, w.astype(cur.dtype, copy=False), b.astype(cur.dtype, copy=False),
                    stride=layer.conv.stride, padding=layer.conv.padding)
            elif layer.kind == "fc":
                w, b = self._weights[layer.name]
                n = cur.shape[0]
                flat = cur.reshape(n, -1)
                if flat.shape[1] != layer.fc_features[0]:
                    raise ShapeMismatchError(
                        f"{layer.name}: flattened input {flat.shape[1]}, "
                        f"expected {layer.fc_features[0]}"
                    )
                out = flat @ w.astype(cur.dtype, copy=False).T + b.astype(cur.dtype, copy=False)
                cur = out.reshape(n, *layer.out_shape)
            elif layer.kind == "maxpool":
                cur, idx = maxpool2x2_forward(cur)
                cache.pool_indices[layer.name] = idx
            elif layer.kind in ("relu", "elu", "tanh"):
                cur = activation_forward(cur, layer.kind)
            else:
                raise ValueError(f"unknown layer kind {layer.kind!r}")
            cache.outputs.append(cur)
            acts[layer.name] = cur
            if layer.name == upto:
                break
        return acts, cache

    def input_grad(self, cache, grads_by_layer):
        """Backpropagate gradients attached at named layers down to the input.

        The result is d(sum_l <grads_by_layer[l], act_l>)/d(input); it is
        linear in the supplied gradients.  Only layer kinds that appear in
        the texture networks support a backward pass.
        """
        if cache.graph_id != id(self):
            raise StaleCacheError("cache was produced by a different graph")
        if not grads_by_layer:
            raise ValueError("no gradients supplied")
        names = self.layer_names()
        for lname, g in grads_by_layer.items():
            if lname not in names:
                raise KeyError(f"no layer named {lname!r}")
            want = cache.outputs[names.index(lname)].shape
            if g.shape != want:
                raise ShapeMismatchError(
                    f"gradient for {lname} has shape {g.shape}, activation is {want}"
                )
        deepest = max(names.index(l) for l in grads_by_layer)
        grad = np.zeros_like(cache.outputs[deepest])
        for li in range(deepest, -1, -1):
            layer = self.layers[li]
            if layer.name in grads_by_layer:
                grad = grad + grads_by_layer[layer.name].astype(grad.dtype, copy=False)
            if layer.kind == "conv":
                w, _ = self._weights[layer.name]
                below = cache.outputs[li - 1].shape if li else cache.input_shape
                grad = conv2d_backward_input(
                    grad, w.astype(grad.dtype, copy=False), layer.conv, input_hw=below[2:]
                )
            elif layer.kind == "maxpool":
                grad = maxpool2x2_backward(grad, cache.pool_indices[layer.name])
            elif layer.kind in ("relu", "elu", "tanh"):
                grad = activation_backward(grad, cache.outputs[li], layer.kind)
            else:
                raise ValueError(f"layer kind {layer.kind!r} has no input-gradient path")
        return grad


def _conv_layer(name, cin, cout, k=3, stride=1, pad=1):
    return LayerSpec(name, "conv", conv=ConvSpec(k, k, cin, cout, stride=stride, padding=pad))


VGG19_TEXTURE_TAPS = {"relu3_1": 4, "relu4_1": 8}

_VGG19_CONVS = [
    ("conv1_1", 3, 64), ("conv1_2", 64, 64),
    ("conv2_1", 64, 128), ("conv2_2", 128, 128),
    ("conv3_1", 128, 256), ("conv3_2", 256, 256), ("conv3_3", 256, 256), ("conv3_4", 256, 256),
    ("conv4_1", 256, 512),
]
_VGG19_POOL_AFTER = {"conv1_2", "conv2_2", "conv3_4"}


def build_vgg19_texture(weights):
    """The conv1_1..relu4_1 front of VGG-19, enough for both default taps."""
    layers = []
    for name, cin, cout in _VGG19_CONVS:
        layers.append(_conv_layer(name, cin, cout))
        layers.append(LayerSpec("relu" + name[4:], "relu"))
        if name in _VGG19_POOL_AFTER:
            layers.append(LayerSpec("pool" + name[4:5], "maxpool"))
    return NetworkGraph("vgg19", layers, weights, prefix="vgg19")


TINY_TEXTURE_TAPS = {"relu3": 4, "relu4": 8}

_TINY_CONVS = [("conv1", 3, 8), ("conv2", 8, 16), ("conv3", 16, 32), ("conv4", 32, 32)]
_TINY_POOL_BEFORE = {"conv2": "pool1", "conv3": "pool2", "conv4": "pool3"}


def build_tiny_texture(weights):
    """A small stand-in texture network with taps at strides 4 and 8."""
    layers = []
    for name, cin, cout in _TINY_CONVS:
        if name in _TINY_POOL_BEFORE:
            layers.append(LayerSpec(_TINY_POOL_BEFORE[name], "maxpool"))
        layers.append(_conv_layer(name, cin, cout))
        layers.append(LayerSpec("relu" + name[4:], "relu"))
    return NetworkGraph("tinytex", layers, weights, prefix="tinytex")


class TextureNetwork:
    """Frozen feature extractor plus its input normalization.

    Images enter in [0,1] RGB; the network sees 255*x minus the per-channel
    mean stored with the weights, so gradients returned by
    :meth:`image_grad` are already in image space.
    """

    MIN_INPUT = 32

    def __init__(self, graph, mean, taps):
        self.graph = graph
        self.mean = np.asarray(mean, dtype=np.float32).reshape(3)
        self.taps = dict(taps)  # tap layer name -> feature stride
        missing = set(self.taps) - set(graph.layer_names())
        if missing:
            raise KeyError(f"tap layers not in graph: {sorted(missing)}")

    def astype(self, dtype):
        return TextureNetwork(self.graph.astype(dtype), self.mean.astype(dtype), self.taps)

    def normalize(self, image01):
        mean = self.mean.astype(image01.dtype, copy=False)
        return image01 * np.asarray(255.0, dtype=image01.dtype) - mean[None, :, None, None]

    def check_input(self, image01):
        if image01.ndim != 4 or image01.shape[0] != 1 or image01.shape[1] != 3:
            raise ShapeMismatchError(f"expected a 1x3xHxW image, got {image01.shape}")
        if min(image01.shape[2:]) < self.MIN_INPUT:
            raise ShapeMismatchError(
                f"texture network needs at least {self.MIN_INPUT} px per side, "
                f"got {image01.shape[2:]}"
            )

    def features(self, image01, taps=None):
        """Tap feature maps for an image in [0,1]; returns (maps, cache)."""
        self.check_input(image01)
        taps = list(taps) if taps is not None else list(self.taps)
        deepest = max(self.graph.layer_names().index(t) for t in taps)
        upto = self.graph.layer_names()[deepest]
        acts, cache = self.graph.forward(self.normalize(image01), upto=upto)
        return {t: acts[t] for t in taps}, cache

    def image_grad(self, cache, tap_grads):
        """Image-space gradient of sum_t <tap_grads[t], features[t]>."""
        g = self.graph.input_grad(cache, tap_grads)
        return g * np.asarray(255.0, dtype=g.dtype)

    def tap_stride(self, tap):
        return self.taps[tap]


def build_texture_network(weights, taps=None):
    """Pick the texture graph matching the weight-name family in `weights`."""
    if "vgg19.conv1_1.weight" in weights:
        graph = build_vgg19_texture(weights)
        mean = weights.get("vgg19.mean")
        default_taps = VGG19_TEXTURE_TAPS
    elif "tinytex.conv1.weight" in weights:
        graph = build_tiny_texture(weights)
        mean = weights.get("tinytex.mean")
        default_taps = TINY_TEXTURE_TAPS
    else:
        raise MissingWeightsError(
            "weight table holds neither vgg19.* nor tinytex.* texture weights"
        )
    if mean is None:
        mean = np.full(3, 127.5, dtype=np.float32)
    if taps is None:
        taps = default_taps
    else:
        taps = {t: default_taps[t] for t in taps}
    return TextureNetwork(graph, mean, taps)


# Content network: five stride-2 4x4 conv encoder stages, a two-layer
# fully-connected bottleneck, and four stride-2 4x4 transposed-conv decoder
# stages emitting the 64x64 center prediction through tanh.  Channel widths
# are read from the weight table so slimmed-down variants load too.

CONTENT_INPUT = 128
CONTENT_OUTPUT = 64


def build_content_net(weights):
    prefix = "contentnet"
    enc_names = [f"enc{i}" for i in range(1, 6)]
    dec_names = [f"dec{i}" for i in range(1, 5)]
    for n in enc_names + ["fc1", "fc2"] + dec_names:
        if f"{prefix}.{n}.weight" not in weights:
            raise MissingWeightsError(f"content network tensor {prefix}.{n}.weight missing")

    layers = []
    for n in enc_names:
        cout, cin, kh, kw = weights[f"{prefix}.{n}.weight"].shape
        layers.append(LayerSpec(n, "conv", conv=ConvSpec(kh, kw, cin, cout, stride=2, padding=1)))
        layers.append(LayerSpec(f"{n}_elu", "elu"))
    # Encoder halves 128 five times down to 4x4 before the bottleneck.
    enc_out = weights[f"{prefix}.enc5.weight"].shape[0]
    f1_out, f1_in = weights[f"{prefix}.fc1.weight"].shape
    f2_out, f2_in = weights[f"{prefix}.fc2.weight"].shape
    if f1_in != enc_out * 16 or f2_in != f1_out:
        raise npsw.DimMismatchError("content bottleneck dims do not chain")
    dec_in = weights[f"{prefix}.dec1.weight"].shape[0]
    if f2_out != dec_in * 16:
        raise npsw.DimMismatchError("bottleneck output does not match decoder input")
    layers.append(LayerSpec("fc1", "fc", fc_features=(f1_in, f1_out), out_shape=(f1_out, 1, 1)))
    layers.append(LayerSpec("fc1_elu", "elu"))
    layers.append(LayerSpec("fc2", "fc", fc_features=(f2_in, f2_out), out_shape=(dec_in, 4, 4)))
    layers.append(LayerSpec("fc2_elu", "elu"))
    for i, n in enumerate(dec_names):
        cin, cout, kh, kw = weights[f"{prefix}.{n}.weight"].shape
        layers.append(LayerSpec(n, "deconv", conv=ConvSpec(kh, kw, cin, cout, stride=2, padding=1)))
        layers.append(LayerSpec(f"{n}_elu" if i < 3 else "out_tanh",
                                "elu" if i < 3 else "tanh"))
    if weights[f"{prefix}.dec4.weight"].shape[1] != 3:
        raise npsw.DimMismatchError("content decoder must emit 3 channels")
    return NetworkGraph("contentnet", layers, weights, prefix=prefix)


def content_net_predict(graph, image01):
    """Predict the 64x64 center content of a 128x128 image in [0,1].

    The hole should already be filled with the mean color of the known
    pixels.  Output values are mapped from tanh range back to [0,1].
    """
    if image01.shape != (1, 3, CONTENT_INPUT, CONTENT_INPUT):
        raise ShapeMismatchError(
            f"content network expects 1x3x{CONTENT_INPUT}x{CONTENT_INPUT}, got {image01.shape}"
        )
    x = image01.astype(np.float32) * 2.0 - 1.0
    acts, _ = graph.forward(x)
    out = acts["out_tanh"]
    if out.shape != (1, 3, CONTENT_OUTPUT, CONTENT_OUTPUT):
        raise ShapeMismatchError(f"content network produced {out.shape}")
    return (out + 1.0) * 0.5
