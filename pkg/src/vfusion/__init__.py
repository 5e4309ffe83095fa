"""Multi-sensor contrastive training for single-sensor activity recognition.

Train classifiers for each sensor (or fused subset of sensors) while
exploiting additional time-synchronized sensors through a multi-view
contrastive loss; inference needs only the sensors of the node you deploy.
"""

from vfusion.errors import (
    ConfigError,
    DataError,
    GraphError,
    ShapeError,
    VFusionError,
)

__all__ = [
    "ConfigError",
    "DataError",
    "GraphError",
    "ShapeError",
    "VFusionError",
]

__version__ = "0.1.0"
