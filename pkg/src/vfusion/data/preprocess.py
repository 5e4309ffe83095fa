"""Resampling, skeleton normalization, windowing, and subject-wise splitting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from vfusion.data.streams import (
    MultimodalDataset,
    SensorStream,
    SubjectSplit,
    WindowSample,
)
from vfusion.errors import ConfigError, DataError, ShapeError


def resample(stream: SensorStream, target_hz: float) -> SensorStream:
    """Resample onto a uniform grid at ``target_hz`` spanning the stream.

    Values are linearly interpolated. The grid starts at the first input
    timestamp and covers the full span, so a stream already on the target
    grid is reproduced exactly at the shared timestamps.
    """
    if target_hz <= 0:
        raise ConfigError(f"target_hz must be positive, got {target_hz}")
    if len(stream) < 2:
        raise DataError("cannot resample a stream with fewer than 2 samples")
    t0, t1 = stream.timestamps[0], stream.timestamps[-1]
    n = int(np.floor((t1 - t0) * target_hz)) + 1
    grid = t0 + np.arange(n) / target_hz
    values = np.empty((n, stream.n_channels))
    for c in range(stream.n_channels):
        values[:, c] = np.interp(grid, stream.timestamps, stream.values[:, c])
    return SensorStream(
        modality_id=stream.modality_id,
        rate_hz=target_hz,
        timestamps=grid,
        values=values,
        channel_names=stream.channel_names,
    )


def normalize_skeleton(stream: SensorStream, dims: int) -> SensorStream:
    """Center each frame's joints at the origin; rescale 2-D skeletons.

    Channels are laid out as J joints x ``dims`` coordinates. For 2-D data
    the frame is additionally divided by the skeleton size, taken as the
    largest per-axis bounding-box extent of that frame.
    """
    if dims not in (2, 3):
        raise ConfigError(f"dims must be 2 or 3, got {dims}")
    if stream.n_channels % dims != 0:
        raise ShapeError(
            f"channel count {stream.n_channels} is not divisible by dims={dims}"
        )
    n_joints = stream.n_channels // dims
    frames = stream.values.reshape(len(stream), n_joints, dims)
    centroids = frames.mean(axis=1, keepdims=True)
    frames = frames - centroids
    if dims == 2:
        extent = frames.max(axis=1) - frames.min(axis=1)  # [T, 2]
        size = extent.max(axis=1, keepdims=True)  # [T, 1]
        size = np.where(size > 0, size, 1.0)
        frames = frames / size[:, :, None]
    return SensorStream(
        modality_id=stream.modality_id,
        rate_hz=stream.rate_hz,
        timestamps=stream.timestamps,
        values=frames.reshape(len(stream), stream.n_channels),
        channel_names=stream.channel_names,
    )


def slide_windows(
    stream: SensorStream, window_s: float, step_s: float
) -> list[WindowSample]:
    """Cut fixed-length windows at offsets 0, step, 2*step, ...

    Returns floor((T - W) / S) + 1 windows; an empty list when the window
    does not fit.
    """
    if step_s <= 0:
        raise ConfigError(f"step_s must be positive, got {step_s}")
    w = int(round(window_s * stream.rate_hz))
    s = int(round(step_s * stream.rate_hz))
    if w <= 0 or s <= 0:
        raise ConfigError("window and step must be at least one sample")
    t = len(stream)
    if w > t:
        return []
    starts = range(0, t - w + 1, s)
    return [
        WindowSample(
            modality_id=stream.modality_id,
            start_time=float(stream.timestamps[i]),
            data=stream.values[i : i + w],
        )
        for i in starts
    ]


@dataclass
class Recording:
    """Time-synchronized streams of one continuous recording session.

    ``label_stream`` is a single-channel stream of class indices over time;
    a window's label is the majority label within it. Negative label values
    mark spans excluded from the labeled dataset (kept for unlabeled use).
    """

    recording_id: str
    subject_id: int
    streams: dict[str, SensorStream]
    label_stream: SensorStream | None = None


def _window_label(label_stream: SensorStream, start: float, window_s: float) -> int:
    mask = (label_stream.timestamps >= start - 1e-9) & (
        label_stream.timestamps < start + window_s - 1e-9
    )
    labels = label_stream.values[mask, 0].astype(np.int64)
    if len(labels) == 0:
        return -1
    vals, counts = np.unique(labels, return_counts=True)
    return int(vals[np.argmax(counts)])


def window_recording(
    recording: Recording,
    window_s: float,
    step_s: float,
    modalities: list[str] | None = None,
) -> dict[int, dict[str, WindowSample]]:
    """Cut aligned windows from every modality of a recording.

    Only keys present in every modality survive (streams may differ slightly
    in span). Labels are attached from the recording's label stream.
    """
    modalities = list(recording.streams) if modalities is None else modalities
    per_mod: dict[str, dict[int, WindowSample]] = {}
    for mod in modalities:
        windows = slide_windows(recording.streams[mod], window_s, step_s)
        per_mod[mod] = {w.key: w for w in windows}
    common = set.intersection(*(set(d) for d in per_mod.values())) if per_mod else set()
    out: dict[int, dict[str, WindowSample]] = {}
    for key in sorted(common):
        by_mod = {m: per_mod[m][key] for m in modalities}
        if recording.label_stream is not None:
            start = next(iter(by_mod.values())).start_time
            label = _window_label(recording.label_stream, start, window_s)
            by_mod = {
                m: WindowSample(w.modality_id, w.start_time, w.data, label=label)
                for m, w in by_mod.items()
            }
        out[key] = by_mod
    return out


def split_by_subject(
    recordings: list[Recording],
    split: SubjectSplit,
    window_s: float,
    step_s: float,
    class_names: tuple[str, ...],
    modalities: list[str] | None = None,
) -> tuple[MultimodalDataset, MultimodalDataset, MultimodalDataset]:
    """Window all recordings and route each into exactly one split.

    Windows with a negative label are dropped from the labeled datasets
    (use :func:`split_by_subject_unlabeled` to keep them for contrastive
    training under the same split, which prevents leakage).
    """
    buckets: dict[str, dict[int, dict[str, WindowSample]]] = {
        "train": {},
        "valid": {},
        "test": {},
    }
    subjects: dict[str, dict[int, int]] = {"train": {}, "valid": {}, "test": {}}
    for rec in recordings:
        name = split.split_of(rec.subject_id)
        windows = window_recording(rec, window_s, step_s, modalities)
        for key, by_mod in windows.items():
            label = next(iter(by_mod.values())).label
            if label is None or label < 0:
                continue
            key = _unique_key(buckets[name], key)
            buckets[name][key] = by_mod
            subjects[name][key] = rec.subject_id
    return tuple(
        MultimodalDataset(
            split=name,
            labeled=True,
            samples=buckets[name],
            class_names=class_names,
            subject_of_key=subjects[name],
        )
        for name in ("train", "valid", "test")
    )


def split_by_subject_unlabeled(
    recordings: list[Recording],
    split: SubjectSplit,
    window_s: float,
    step_s: float,
    modalities: list[str] | None = None,
) -> tuple[MultimodalDataset, MultimodalDataset, MultimodalDataset]:
    """Unlabeled variant using the same subject split as the labeled one."""
    buckets: dict[str, dict[int, dict[str, WindowSample]]] = {
        "train": {},
        "valid": {},
        "test": {},
    }
    for rec in recordings:
        name = split.split_of(rec.subject_id)
        windows = window_recording(rec, window_s, step_s, modalities)
        for key, by_mod in windows.items():
            stripped = {
                m: WindowSample(w.modality_id, w.start_time, w.data, label=None)
                for m, w in by_mod.items()
            }
            buckets[name][_unique_key(buckets[name], key)] = stripped
    return tuple(
        MultimodalDataset(split=name, labeled=False, samples=buckets[name])
        for name in ("train", "valid", "test")
    )


def _unique_key(existing: dict[int, object], key: int) -> int:
    # shift by 1 ms until free; windows from different recordings may start
    # at the same clock time
    while key in existing:
        key += 1
    return key
