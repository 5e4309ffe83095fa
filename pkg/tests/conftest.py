import numpy as np
import pytest

from vfusion.data.streams import MultimodalDataset, SensorStream, WindowSample


def make_stream(n=100, channels=3, rate=50.0, modality="accel", values=None, seed=0):
    rng = np.random.default_rng(seed)
    timestamps = np.arange(n) / rate
    if values is None:
        values = rng.standard_normal((n, channels))
    return SensorStream(
        modality_id=modality, rate_hz=rate, timestamps=timestamps, values=values
    )


def make_dataset(
    n=20,
    modalities=("a", "b"),
    n_classes=3,
    labeled=True,
    window_len=16,
    channels=3,
    split="train",
    seed=0,
):
    rng = np.random.default_rng(seed)
    samples = {}
    for i in range(n):
        label = int(rng.integers(n_classes)) if labeled else None
        key = i * 1000
        samples[key] = {
            m: WindowSample(
                modality_id=m,
                start_time=key / 1000.0,
                data=rng.standard_normal((window_len, channels)),
                label=label,
            )
            for m in modalities
        }
    return MultimodalDataset(
        split=split,
        labeled=labeled,
        samples=samples,
        class_names=tuple(f"c{k}" for k in range(n_classes)) if labeled else None,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(42)
