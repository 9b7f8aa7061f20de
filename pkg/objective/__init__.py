from .canonical import InstanceCanonicalizer, canonicalize_instances
from .losses import instance_loss, reconstruction_losses, rgb_loss, semantic_loss, total_loss

__all__ = [
    "InstanceCanonicalizer",
    "canonicalize_instances",
    "semantic_loss",
    "instance_loss",
    "rgb_loss",
    "total_loss",
    "reconstruction_losses",
]
