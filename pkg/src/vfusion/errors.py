"""Exception hierarchy shared across the package."""


class VFusionError(Exception):
    """Base class for all package errors."""


class ConfigError(VFusionError):
    """Invalid configuration (schema violation, inconsistent settings)."""


class DataError(VFusionError):
    """Problem with ingested data (missing files, format violations)."""


class GraphError(VFusionError):
    """Invalid modality graph (broken connection rules)."""


class ShapeError(VFusionError):
    """Array shape does not match the declared layout."""
