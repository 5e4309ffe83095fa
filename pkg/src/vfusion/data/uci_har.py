"""Adapter for the standard UCI smartphone activity dataset layout.

Expects the stock distribution: per-axis fixed-width signal files under
``<split>/Inertial Signals/`` plus ``y_<split>.txt`` and
``subject_<split>.txt``. Windows are 2.56 s at 50 Hz (128 samples), already
cut with 50% overlap by the dataset authors.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from vfusion.data.streams import MultimodalDataset, WindowSample
from vfusion.errors import DataError

RATE_HZ = 50.0
WINDOW_LEN = 128
WINDOW_SECONDS = WINDOW_LEN / RATE_HZ
STEP_SECONDS = WINDOW_SECONDS / 2  # 50% overlap

CLASS_NAMES = (
    "walking",
    "walking_upstairs",
    "walking_downstairs",
    "sitting",
    "standing",
    "laying",
)

MODALITY_SIGNALS = {
    "accelerometer": ("total_acc_x", "total_acc_y", "total_acc_z"),
    "gyroscope": ("body_gyro_x", "body_gyro_y", "body_gyro_z"),
}


def _read_matrix(path: Path) -> np.ndarray:
    if not path.exists():
        raise DataError(f"missing UCI-HAR file: {path}")
    return np.loadtxt(path)


def _load_split(root: Path, split: str) -> MultimodalDataset:
    split_dir = root / split
    signals_dir = split_dir / "Inertial Signals"

    labels = _read_matrix(split_dir / f"y_{split}.txt").astype(np.int64).ravel() - 1
    subjects = _read_matrix(split_dir / f"subject_{split}.txt").astype(np.int64).ravel()
    n = len(labels)
    if len(subjects) != n:
        raise DataError(
            f"{split}: subject file has {len(subjects)} rows, label file has {n}"
        )

    per_modality: dict[str, np.ndarray] = {}
    for modality, signal_names in MODALITY_SIGNALS.items():
        axes = []
        for name in signal_names:
            mat = _read_matrix(signals_dir / f"{name}_{split}.txt")
            if mat.shape[0] != n:
                raise DataError(
                    f"{name}_{split}.txt has {mat.shape[0]} rows, label file has {n}"
                )
            axes.append(mat)
        per_modality[modality] = np.stack(axes, axis=-1)  # [n, window_len, 3]

    samples: dict[int, dict[str, WindowSample]] = {}
    subject_of_key: dict[int, int] = {}
    for i in range(n):
        start = i * STEP_SECONDS
        by_mod = {}
        for modality, data in per_modality.items():
            by_mod[modality] = WindowSample(
                modality_id=modality,
                start_time=start,
                data=data[i],
                label=int(labels[i]),
            )
        key = next(iter(by_mod.values())).key
        samples[key] = by_mod
        subject_of_key[key] = int(subjects[i])

    return MultimodalDataset(
        split="train" if split == "train" else "test",
        labeled=True,
        samples=samples,
        class_names=CLASS_NAMES,
        subject_of_key=subject_of_key,
    )


def load_uci_har(root_path: str | Path) -> tuple[MultimodalDataset, MultimodalDataset]:
    """Load the train and test splits from the standard directory layout."""
    root = Path(root_path)
    if not root.exists():
        raise DataError(f"UCI-HAR root not found: {root}")
    return _load_split(root, "train"), _load_split(root, "test")


def carve_validation(
    train: MultimodalDataset, fraction: float = 0.1
) -> tuple[MultimodalDataset, MultimodalDataset]:
    """Hold out whole subjects from a train set until ~fraction of windows.

    Subjects are taken from the end of the sorted subject list so the split
    is deterministic.
    """
    if train.subject_of_key is None:
        raise DataError("train set carries no subject information")
    counts: dict[int, int] = {}
    for key in train.keys:
        s = train.subject_of_key[key]
        counts[s] = counts.get(s, 0) + 1
    target = fraction * train.size
    held: set[int] = set()
    held_count = 0
    for s in sorted(counts, reverse=True):
        if held_count >= target:
            break
        held.add(s)
        held_count += counts[s]

    def subset(keys: list[int], split: str) -> MultimodalDataset:
        return MultimodalDataset(
            split=split,
            labeled=True,
            samples={k: train.samples[k] for k in keys},
            class_names=train.class_names,
            subject_of_key={k: train.subject_of_key[k] for k in keys},
        )

    valid_keys = [k for k in train.keys if train.subject_of_key[k] in held]
    train_keys = [k for k in train.keys if train.subject_of_key[k] not in held]
    return subset(train_keys, "train"), subset(valid_keys, "valid")
