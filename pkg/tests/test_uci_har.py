import os

import numpy as np
import pytest

from vfusion.data.uci_har import (
    CLASS_NAMES,
    MODALITY_SIGNALS,
    WINDOW_LEN,
    carve_validation,
    load_uci_har,
)
from vfusion.errors import DataError


def write_fake_root(root, n_train=20, n_test=10, seed=0):
    """Standard layout with arbitrary row counts."""
    rng = np.random.default_rng(seed)
    for split, n in (("train", n_train), ("test", n_test)):
        signals = root / split / "Inertial Signals"
        signals.mkdir(parents=True)
        for names in MODALITY_SIGNALS.values():
            for name in names:
                np.savetxt(
                    signals / f"{name}_{split}.txt",
                    rng.standard_normal((n, WINDOW_LEN)),
                    fmt="%.6e",
                )
        np.savetxt(root / split / f"y_{split}.txt", rng.integers(1, 7, n), fmt="%d")
        np.savetxt(
            root / split / f"subject_{split}.txt",
            rng.integers(1, 6, n),
            fmt="%d",
        )
    return root


@pytest.fixture
def fake_root(tmp_path):
    return write_fake_root(tmp_path / "ucihar")


class TestLoader:
    def test_sizes_match_files(self, fake_root):
        train, test = load_uci_har(fake_root)
        assert train.size == 20
        assert test.size == 10
        assert train.modalities == {"accelerometer", "gyroscope"}
        assert train.class_names == CLASS_NAMES

    def test_window_length(self, fake_root):
        train, _ = load_uci_har(fake_root)
        for key in train.keys:
            for w in train.samples[key].values():
                assert w.data.shape == (WINDOW_LEN, 3)

    def test_labels_zero_based(self, fake_root):
        train, _ = load_uci_har(fake_root)
        labels = train.labels()
        assert labels.min() >= 0 and labels.max() <= 5

    def test_missing_axis_file(self, fake_root):
        os.remove(fake_root / "train" / "Inertial Signals" / "total_acc_x_train.txt")
        with pytest.raises(DataError, match="total_acc_x_train"):
            load_uci_har(fake_root)

    def test_row_count_mismatch(self, fake_root):
        y = fake_root / "train" / "y_train.txt"
        rows = y.read_text().strip().splitlines()
        y.write_text("\n".join(rows[:-1]) + "\n")
        with pytest.raises(DataError):
            load_uci_har(fake_root)

    def test_missing_root(self, tmp_path):
        with pytest.raises(DataError):
            load_uci_har(tmp_path / "nope")


class TestCarveValidation:
    def test_whole_subjects_held_out(self, fake_root):
        train, _ = load_uci_har(fake_root)
        tr, va = carve_validation(train, fraction=0.2)
        assert tr.size + va.size == train.size
        tr_subjects = set(tr.subject_of_key.values())
        va_subjects = set(va.subject_of_key.values())
        assert not (tr_subjects & va_subjects)
        assert va.size > 0


REAL_ROOT = os.environ.get("UCI_HAR_ROOT")


@pytest.mark.skipif(REAL_ROOT is None, reason="UCI_HAR_ROOT not set")
def test_real_dataset_sizes():
    train, test = load_uci_har(REAL_ROOT)
    assert train.size == 7352
    assert test.size == 2947
