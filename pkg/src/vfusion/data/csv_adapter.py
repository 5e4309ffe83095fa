"""Generic CSV ingestion: one file per (recording, modality) plus a manifest.

CSV layout: a header row, a ``timestamp`` column in seconds, and one column
per channel. The manifest (YAML or JSON) lists recordings:

    recordings:
      - recording_id: subj1_walk
        subject_id: 1
        files:
          - {path: subj1_walk_accel.csv, modality_id: accel, rate_hz: 50}
          - {path: subj1_walk_labels.csv, modality_id: label, rate_hz: 50}

A modality named ``label`` becomes the recording's label stream.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
import yaml

from vfusion.data.preprocess import Recording, resample
from vfusion.data.streams import SensorStream
from vfusion.errors import DataError

LABEL_MODALITY = "label"


def load_csv_recording(
    path: str | Path,
    modality_id: str,
    rate_hz: float | None = None,
    timestamp_column: str = "timestamp",
) -> SensorStream:
    """Read one modality's stream from a CSV file.

    Non-finite cells with finite neighbors in the same column are filled by
    linear interpolation; leading/trailing gaps take the nearest finite
    value. ``rate_hz`` defaults to the median timestamp spacing.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"missing CSV file: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"empty CSV file: {path}") from None
        rows = list(reader)
    if not rows:
        raise DataError(f"CSV file has no data rows: {path}")
    header = [h.strip() for h in header]
    if timestamp_column not in header:
        raise DataError(f"{path}: no {timestamp_column!r} column in header {header}")
    t_idx = header.index(timestamp_column)
    channel_names = [h for i, h in enumerate(header) if i != t_idx]
    if not channel_names:
        raise DataError(f"{path}: needs at least one channel column")

    data = np.full((len(rows), len(header)), np.nan)
    for r, row in enumerate(rows):
        if len(row) != len(header):
            raise DataError(f"{path}: row {r + 2} has {len(row)} cells, expected {len(header)}")
        for c, cell in enumerate(row):
            cell = cell.strip()
            if cell and cell.lower() not in ("nan", "na", ""):
                try:
                    data[r, c] = float(cell)
                except ValueError:
                    raise DataError(f"{path}: non-numeric cell {cell!r} at row {r + 2}") from None

    timestamps = data[:, t_idx]
    if np.any(~np.isfinite(timestamps)):
        raise DataError(f"{path}: non-finite timestamp values")
    diffs = np.diff(timestamps)
    if np.any(diffs <= 0):
        bad = int(np.argmax(diffs <= 0))
        raise DataError(f"{path}: timestamps not strictly increasing at row {bad + 3}")

    values = np.delete(data, t_idx, axis=1)
    values = _interpolate_gaps(values, timestamps, path)
    if rate_hz is None:
        rate_hz = 1.0 / float(np.median(diffs)) if len(diffs) else 1.0
    return SensorStream(
        modality_id=modality_id,
        rate_hz=rate_hz,
        timestamps=timestamps,
        values=values,
        channel_names=tuple(channel_names),
    )


def _interpolate_gaps(values: np.ndarray, timestamps: np.ndarray, path: Path) -> np.ndarray:
    out = values.copy()
    for c in range(out.shape[1]):
        col = out[:, c]
        finite = np.isfinite(col)
        if finite.all():
            continue
        if not finite.any():
            raise DataError(f"{path}: channel {c} has no finite values")
        out[:, c] = np.interp(timestamps, timestamps[finite], col[finite])
    return out


def load_manifest(manifest_path: str | Path) -> list[Recording]:
    """Load every recording listed in a manifest file."""
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise DataError(f"missing manifest file: {manifest_path}")
    text = manifest_path.read_text()
    if manifest_path.suffix == ".json":
        manifest = json.loads(text)
    else:
        manifest = yaml.safe_load(text)
    if not isinstance(manifest, dict) or "recordings" not in manifest:
        raise DataError(f"{manifest_path}: manifest must have a 'recordings' list")

    recordings = []
    base = manifest_path.parent
    for entry in manifest["recordings"]:
        streams: dict[str, SensorStream] = {}
        label_stream = None
        for spec in entry["files"]:
            stream = load_csv_recording(
                base / spec["path"],
                modality_id=spec["modality_id"],
                rate_hz=spec.get("rate_hz"),
            )
            target = spec.get("resample_hz")
            if target is not None:
                stream = resample(stream, target)
            if spec["modality_id"] == LABEL_MODALITY:
                label_stream = stream
            else:
                streams[spec["modality_id"]] = stream
        recordings.append(
            Recording(
                recording_id=str(entry["recording_id"]),
                subject_id=int(entry["subject_id"]),
                streams=streams,
                label_stream=label_stream,
            )
        )
    return recordings
