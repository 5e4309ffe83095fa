from vfusion.data.streams import (
    MultimodalDataset,
    SensorStream,
    SubjectSplit,
    WindowSample,
    time_key,
)

__all__ = [
    "MultimodalDataset",
    "SensorStream",
    "SubjectSplit",
    "WindowSample",
    "time_key",
]
