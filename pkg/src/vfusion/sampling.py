"""Batch composition: class-balanced labeled half plus unlabeled half.

Index ``i`` within each half refers to the same timestamp key across all
modalities, so co-temporal windows line up as positive pairs. Within one
batch no two entries share a key, which keeps overlapping windows available
as hard negatives while forbidding exact self-negatives.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from vfusion.data.streams import MultimodalDataset
from vfusion.errors import ConfigError, VFusionError


@dataclass
class Batch:
    """One training batch; immutable once composed."""

    labeled: dict[str, np.ndarray]  # modality -> [B_l, window_len, channels]
    labels: np.ndarray  # [B_l]
    labeled_keys: list[int]
    unlabeled: dict[str, np.ndarray]  # modality -> [B_u, window_len, channels]
    unlabeled_keys: list[int]

    @property
    def size(self) -> int:
        return len(self.labeled_keys) + len(self.unlabeled_keys)


def balanced_label_sampler(
    dataset: MultimodalDataset, seed: int
) -> Iterator[int]:
    """Infinite stream of timestamp keys with uniform class frequency.

    Draws with replacement: first a class uniformly, then a key uniformly
    within that class.
    """
    by_class = dataset.keys_by_class()
    n_classes = dataset.n_classes
    for k in range(n_classes):
        if not by_class.get(k):
            raise ConfigError(f"class {k} has no samples")
    class_keys = [np.array(by_class[k]) for k in range(n_classes)]

    def stream() -> Iterator[int]:
        rng = np.random.default_rng(seed)
        while True:
            cls = int(rng.integers(n_classes))
            keys = class_keys[cls]
            yield int(keys[rng.integers(len(keys))])

    return stream()


class BatchComposer:
    """Draws batches with a balanced labeled half and a uniform unlabeled half.

    When ``unlabeled`` is None (or the same dataset object as ``labeled``),
    the whole batch is labeled and also serves the contrastive loss.
    """

    def __init__(
        self,
        labeled: MultimodalDataset,
        unlabeled: MultimodalDataset | None,
        batch_size: int,
        seed: int,
    ):
        if unlabeled is labeled:
            unlabeled = None
        if unlabeled is not None and batch_size % 2 != 0:
            raise ConfigError(
                f"batch size must be even with an unlabeled dataset, got {batch_size}"
            )
        if labeled.size == 0:
            raise ConfigError("labeled dataset is empty")
        if unlabeled is not None and unlabeled.size == 0:
            raise ConfigError("unlabeled dataset is empty")
        self.labeled = labeled
        self.unlabeled = unlabeled
        self.batch_size = batch_size
        self._label_stream = balanced_label_sampler(labeled, seed)
        self._rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
        self.labeled_per_batch = batch_size if unlabeled is None else batch_size // 2
        # D9: one epoch = dataset-size draws from the balanced stream
        self.steps_per_epoch = max(1, labeled.size // self.labeled_per_batch)

    def compose(self) -> Batch:
        labeled_keys: list[int] = []
        seen: set[int] = set()
        while len(labeled_keys) < self.labeled_per_batch:
            key = next(self._label_stream)
            if key in seen:
                continue
            seen.add(key)
            labeled_keys.append(key)

        unlabeled_keys: list[int] = []
        unlabeled_arrays: dict[str, np.ndarray] = {}
        if self.unlabeled is not None:
            n = self.batch_size - self.labeled_per_batch
            if n > self.unlabeled.size:
                raise ConfigError(
                    f"unlabeled dataset too small for {n} distinct draws per batch"
                )
            idx = self._rng.choice(self.unlabeled.size, size=n, replace=False)
            unlabeled_keys = [self.unlabeled.keys[i] for i in idx]
            unlabeled_arrays = {
                m: self.unlabeled.stack(m, unlabeled_keys)
                for m in sorted(self.unlabeled.modalities)
            }

        try:
            labeled_arrays = {
                m: self.labeled.stack(m, labeled_keys)
                for m in sorted(self.labeled.modalities)
            }
        except KeyError as exc:  # violated dataset invariant
            raise VFusionError(f"modality missing for sampled key: {exc}") from exc

        return Batch(
            labeled=labeled_arrays,
            labels=self.labeled.labels(labeled_keys),
            labeled_keys=labeled_keys,
            unlabeled=unlabeled_arrays,
            unlabeled_keys=unlabeled_keys,
        )

    def __iter__(self) -> Iterator[Batch]:
        while True:
            yield self.compose()
