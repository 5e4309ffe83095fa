"""End-to-end CSV ingestion: raw files -> manifest -> windows -> splits.

Synthesizes a few raw sensor CSVs (two sensors at different rates plus a
label track), writes a manifest, then runs the standard pipeline: load,
resample, cut aligned sliding windows, and split by subject with no
subject appearing in two splits.
"""

import csv
import tempfile
from pathlib import Path

import numpy as np
import yaml

from vfusion.data.csv_adapter import load_manifest
from vfusion.data.preprocess import split_by_subject, split_by_subject_unlabeled
from vfusion.data.streams import SubjectSplit

root = Path(tempfile.mkdtemp(prefix="csv_demo_"))
rng = np.random.default_rng(7)
CLASSES = ("walk", "sit", "fall")


def write_sensor_csv(path, rate_hz, seconds, channels):
    n = int(seconds * rate_hz)
    ts = np.arange(n) / rate_hz
    values = rng.standard_normal((n, channels)).cumsum(axis=0) * 0.1
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp"] + [f"c{i}" for i in range(channels)])
        for t, row in zip(ts, values):
            w.writerow([f"{t:.4f}"] + [f"{v:.5f}" for v in row])


def write_label_csv(path, seconds):
    # 1 Hz label track cycling through the classes, with a short unlabeled gap
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", "label"])
        for t in range(int(seconds)):
            label = -1 if 8 <= t < 10 else t // 5 % len(CLASSES)
            w.writerow([t, label])


entries = []
for subject in range(4):
    rec = f"s{subject}_r0"
    write_sensor_csv(root / f"{rec}_acc.csv", rate_hz=50, seconds=30, channels=3)
    write_sensor_csv(root / f"{rec}_gyro.csv", rate_hz=25, seconds=30, channels=3)
    write_label_csv(root / f"{rec}_labels.csv", seconds=30)
    entries.append(
        {
            "recording_id": rec,
            "subject_id": subject,
            "files": [
                {"path": f"{rec}_acc.csv", "modality_id": "acc"},
                {"path": f"{rec}_gyro.csv", "modality_id": "gyro", "resample_hz": 50},
                {"path": f"{rec}_labels.csv", "modality_id": "label"},
            ],
        }
    )

manifest = root / "manifest.yaml"
manifest.write_text(yaml.safe_dump({"recordings": entries}))
recordings = load_manifest(manifest)
print(f"loaded {len(recordings)} recordings; "
      f"gyro resampled to {recordings[0].streams['gyro'].rate_hz:.0f} Hz")

split = SubjectSplit(
    train_subjects=frozenset({0, 1}),
    valid_subjects=frozenset({2}),
    test_subjects=frozenset({3}),
)
train, valid, test = split_by_subject(
    recordings, split, window_s=4.0, step_s=2.0, class_names=CLASSES
)
train_u, _, _ = split_by_subject_unlabeled(recordings, split, window_s=4.0, step_s=2.0)
print(f"labeled windows: train={train.size} valid={valid.size} test={test.size}")
print(f"unlabeled windows (train subjects, label track ignored): {train_u.size}")

subjects = {ds.split: sorted(set(ds.subject_of_key.values())) for ds in (train, valid, test)}
print(f"subjects per split (disjoint): {subjects}")
labels = [train.label_of(k) for k in train.keys]
print(f"train class mix: { {CLASSES[c]: labels.count(c) for c in set(labels)} }")
