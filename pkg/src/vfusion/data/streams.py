"""Core data containers: raw streams, windows, and synchronized datasets.

A recording is a set of time-synchronized per-modality streams. Windows cut
from the streams are aligned across modalities by their start time, rounded
to the nearest millisecond, which serves as the cross-modal pairing key.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from vfusion.errors import ConfigError, DataError


def time_key(start_time: float) -> int:
    """Cross-modal alignment key: start time in whole milliseconds."""
    return int(round(start_time * 1000.0))


@dataclass(frozen=True)
class SensorStream:
    """One modality's raw time series."""

    modality_id: str
    rate_hz: float
    timestamps: np.ndarray  # [T], seconds, strictly increasing
    values: np.ndarray  # [T, C]
    channel_names: tuple[str, ...] | None = None

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=np.float64)
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 2:
            raise DataError(f"values must be 2-D [time, channels], got shape {vals.shape}")
        if ts.ndim != 1 or len(ts) != len(vals):
            raise DataError(
                f"timestamps length {len(ts)} does not match values length {len(vals)}"
            )
        if self.rate_hz <= 0:
            raise DataError(f"rate_hz must be positive, got {self.rate_hz}")
        if len(ts) > 1 and not np.all(np.diff(ts) > 0):
            raise DataError("timestamps must be strictly increasing")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.timestamps)

    @property
    def n_channels(self) -> int:
        return self.values.shape[1]

    @property
    def duration(self) -> float:
        return float(self.timestamps[-1] - self.timestamps[0])


@dataclass(frozen=True)
class WindowSample:
    """A fixed-duration multichannel window of one modality."""

    modality_id: str
    start_time: float
    data: np.ndarray  # [window_len, channels]
    label: int | None = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise DataError(f"window data must be 2-D, got shape {data.shape}")
        object.__setattr__(self, "data", data)

    @property
    def key(self) -> int:
        return time_key(self.start_time)


@dataclass
class MultimodalDataset:
    """Time-synchronized windows grouped by alignment key.

    ``samples[key][modality_id]`` is the window of that modality starting at
    the key's timestamp. Every key carries every listed modality.
    """

    split: str  # train | valid | test
    labeled: bool
    samples: dict[int, dict[str, WindowSample]]
    class_names: tuple[str, ...] | None = None
    subject_of_key: dict[int, int] | None = None
    _keys: list[int] = field(init=False, repr=False)

    def __post_init__(self):
        if self.split not in ("train", "valid", "test"):
            raise ConfigError(f"unknown split {self.split!r}")
        modalities = None
        for key, by_mod in self.samples.items():
            mods = frozenset(by_mod)
            if modalities is None:
                modalities = mods
            elif mods != modalities:
                raise DataError(
                    f"key {key} has modalities {sorted(mods)}, expected {sorted(modalities)}"
                )
            labels = {w.label for w in by_mod.values()}
            if self.labeled:
                if len(labels) != 1 or None in labels:
                    raise DataError(f"labeled dataset: key {key} must have one shared label")
            else:
                if labels != {None}:
                    raise DataError(f"unlabeled dataset: key {key} must not carry labels")
        if modalities is None:
            modalities = frozenset()
        n_mods = len(modalities)
        if self.samples:
            if self.labeled and n_mods < 1:
                raise DataError("labeled dataset needs at least 1 modality")
            if not self.labeled and n_mods < 2:
                raise DataError("unlabeled dataset needs at least 2 modalities")
        if self.labeled and self.class_names is None:
            raise ConfigError("labeled dataset requires class_names")
        self._modalities = modalities
        self._keys = sorted(self.samples)

    @property
    def modalities(self) -> frozenset[str]:
        return self._modalities

    @property
    def keys(self) -> list[int]:
        return self._keys

    @property
    def size(self) -> int:
        return len(self.samples)

    @property
    def n_classes(self) -> int:
        if self.class_names is None:
            raise ConfigError("unlabeled dataset has no classes")
        return len(self.class_names)

    def label_of(self, key: int) -> int:
        by_mod = self.samples[key]
        return next(iter(by_mod.values())).label

    def labels(self, keys: list[int] | None = None) -> np.ndarray:
        keys = self._keys if keys is None else keys
        return np.array([self.label_of(k) for k in keys], dtype=np.int64)

    def stack(self, modality_id: str, keys: list[int] | None = None) -> np.ndarray:
        """[N, window_len, channels] array of one modality's windows."""
        keys = self._keys if keys is None else keys
        return np.stack([self.samples[k][modality_id].data for k in keys])

    def keys_by_class(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for k in self._keys:
            out.setdefault(self.label_of(k), []).append(k)
        return out


@dataclass(frozen=True)
class SubjectSplit:
    """Disjoint subject sets for train/valid/test."""

    train_subjects: frozenset[int]
    valid_subjects: frozenset[int]
    test_subjects: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "train_subjects", frozenset(self.train_subjects))
        object.__setattr__(self, "valid_subjects", frozenset(self.valid_subjects))
        object.__setattr__(self, "test_subjects", frozenset(self.test_subjects))
        groups = [self.train_subjects, self.valid_subjects, self.test_subjects]
        for i in range(3):
            for j in range(i + 1, 3):
                overlap = groups[i] & groups[j]
                if overlap:
                    raise ConfigError(f"subjects {sorted(overlap)} appear in two split sets")

    @property
    def all_subjects(self) -> frozenset[int]:
        return self.train_subjects | self.valid_subjects | self.test_subjects

    def split_of(self, subject_id: int) -> str:
        if subject_id in self.train_subjects:
            return "train"
        if subject_id in self.valid_subjects:
            return "valid"
        if subject_id in self.test_subjects:
            return "test"
        raise ConfigError(f"subject {subject_id} is not covered by the split")
