"""Multi-scale neural patch synthesis for filling large image holes.

The engine optimizes the hole pixels of an image over a coarse-to-fine
pyramid, balancing a content reference (from a small prediction network or a
mean fill), the similarity of frozen-network feature patches inside and
outside the hole, and a total-variation smoothness prior.
"""

from .driver import InpaintRequest, inpaint, make_center_hole_mask
from .kernels import ConvSpec
from .losses import JointConfig, LossReport
from .metrics import MetricsReport, compute_metrics
from .network import build_texture_network, load_weights
from .npsw import write_weights
from .patches import HoleRegion

__all__ = [
    "ConvSpec",
    "HoleRegion",
    "InpaintRequest",
    "JointConfig",
    "LossReport",
    "MetricsReport",
    "build_texture_network",
    "compute_metrics",
    "inpaint",
    "load_weights",
    "make_center_hole_mask",
    "write_weights",
]

__version__ = "0.1.0"
