import numpy as np
import pytest

from vfusion.data.streams import (
    MultimodalDataset,
    SensorStream,
    SubjectSplit,
    WindowSample,
    time_key,
)
from vfusion.errors import ConfigError, DataError

from conftest import make_dataset, make_stream


class TestSensorStream:
    def test_basic(self):
        s = make_stream(n=50, channels=2)
        assert len(s) == 50
        assert s.n_channels == 2

    def test_length_mismatch(self):
        with pytest.raises(DataError):
            SensorStream("a", 50.0, np.arange(5) / 50.0, np.zeros((6, 2)))

    def test_non_increasing_timestamps(self):
        ts = np.array([0.0, 0.1, 0.1, 0.3])
        with pytest.raises(DataError):
            SensorStream("a", 50.0, ts, np.zeros((4, 1)))

    def test_bad_rate(self):
        with pytest.raises(DataError):
            SensorStream("a", 0.0, np.arange(3) / 50.0, np.zeros((3, 1)))


class TestMultimodalDataset:
    def test_aligned_keys(self):
        ds = make_dataset(n=10, modalities=("a", "b"))
        assert ds.size == 10
        assert ds.modalities == frozenset({"a", "b"})
        for key in ds.keys:
            assert set(ds.samples[key]) == {"a", "b"}

    def test_missing_modality_rejected(self):
        ds = make_dataset(n=3)
        broken = dict(ds.samples)
        key = ds.keys[0]
        broken[key] = {"a": broken[key]["a"]}
        with pytest.raises(DataError):
            MultimodalDataset("train", True, broken, ds.class_names)

    def test_label_disagreement_rejected(self):
        ds = make_dataset(n=2, modalities=("a", "b"), n_classes=3)
        key = ds.keys[0]
        w = ds.samples[key]["b"]
        bad_label = (w.label + 1) % 3
        broken = dict(ds.samples)
        broken[key] = {
            "a": ds.samples[key]["a"],
            "b": WindowSample("b", w.start_time, w.data, label=bad_label),
        }
        with pytest.raises(DataError):
            MultimodalDataset("train", True, broken, ds.class_names)

    def test_unlabeled_needs_two_modalities(self):
        with pytest.raises(DataError):
            MultimodalDataset(
                "train",
                False,
                {
                    0: {
                        "a": WindowSample("a", 0.0, np.zeros((4, 1)), label=None),
                    }
                },
            )

    def test_stack_shape(self):
        ds = make_dataset(n=5, window_len=16, channels=3)
        assert ds.stack("a").shape == (5, 16, 3)

    def test_labels(self):
        ds = make_dataset(n=8, n_classes=2)
        labels = ds.labels()
        assert labels.shape == (8,)
        assert set(labels) <= {0, 1}


class TestSubjectSplit:
    def test_disjoint_ok(self):
        s = SubjectSplit(frozenset({1, 2}), frozenset({3}), frozenset({4}))
        assert s.split_of(3) == "valid"

    def test_overlap_rejected(self):
        with pytest.raises(ConfigError):
            SubjectSplit(frozenset({1, 2}), frozenset({2}), frozenset({4}))

    def test_uncovered_subject(self):
        s = SubjectSplit(frozenset({1}), frozenset({2}), frozenset({3}))
        with pytest.raises(ConfigError):
            s.split_of(9)


def test_time_key_rounds_to_ms():
    assert time_key(1.2804) == 1280
    assert time_key(0.0) == 0
    assert time_key(2.5601) == 2560
