"""Metrics and per-node test evaluation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from vfusion.data.streams import MultimodalDataset
from vfusion.errors import ConfigError, DataError
from vfusion.models import VirtualFusionModel


@dataclass
class ConfusionMatrix:
    """K x K counts; rows are true classes, columns predicted."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise DataError(f"confusion matrix must be square, got {counts.shape}")
        if np.any(counts < 0):
            raise DataError("confusion matrix entries must be non-negative")
        self.counts = counts

    @classmethod
    def from_predictions(
        cls, y_true: np.ndarray, y_pred: np.ndarray, n_classes: int
    ) -> "ConfusionMatrix":
        counts = np.zeros((n_classes, n_classes), dtype=np.int64)
        np.add.at(counts, (np.asarray(y_true), np.asarray(y_pred)), 1)
        return cls(counts)

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def _per_class_f1(cm: ConfusionMatrix) -> np.ndarray:
    counts = cm.counts
    tp = np.diag(counts).astype(np.float64)
    fp = counts.sum(axis=0) - tp
    fn = counts.sum(axis=1) - tp
    denom = 2 * tp + fp + fn
    # zero support and zero predictions contribute F1 = 0
    return np.divide(2 * tp, denom, out=np.zeros_like(tp), where=denom > 0)


def macro_f1(cm: ConfusionMatrix) -> float:
    """Unweighted mean of per-class F1."""
    if cm.n_classes < 2:
        raise ConfigError("macro F1 needs at least 2 classes")
    return float(_per_class_f1(cm).mean())


def binary_f1(cm: ConfusionMatrix, positive_class: int) -> float:
    """F1 of the designated positive class only."""
    if not 0 <= positive_class < cm.n_classes:
        raise ConfigError(f"positive class {positive_class} out of range")
    return float(_per_class_f1(cm)[positive_class])


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise DataError("empty confusion matrix")
    return float(np.trace(cm.counts) / cm.total)


@dataclass
class NodeMetrics:
    node: str
    accuracy: float
    macro_f1: float
    confusion: ConfusionMatrix
    binary_f1: float | None = None

    def to_dict(self) -> dict:
        out = {
            "node": self.node,
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "confusion": self.confusion.counts.tolist(),
        }
        if self.binary_f1 is not None:
            out["binary_f1"] = self.binary_f1
        return out


@dataclass
class AccessLog:
    """Records which modalities were read; used to verify inference scope."""

    modalities: set[str] = field(default_factory=set)


def evaluate(
    model: VirtualFusionModel,
    dataset: MultimodalDataset,
    nodes: list[str],
    batch_size: int = 128,
    positive_class: int | None = None,
    access_log: AccessLog | None = None,
) -> dict[str, NodeMetrics]:
    """Per-node metrics on un-augmented windows.

    Only the modalities required by ``nodes`` are read from the dataset, so
    evaluating a fused node touches nothing beyond its input sensors.
    """
    graph = model.graph
    unknown = set(nodes) - set(graph.inference_set)
    if unknown:
        raise ConfigError(
            f"nodes {sorted(unknown)} not in inference set {graph.inference_set}"
        )
    needed = sorted(graph.required_modalities(nodes))
    if access_log is not None:
        access_log.modalities.update(needed)
    keys = dataset.keys
    y_true = dataset.labels()
    n_classes = dataset.n_classes

    model.eval()
    preds: dict[str, list[np.ndarray]] = {n: [] for n in nodes}
    with torch.no_grad():
        for start in range(0, len(keys), batch_size):
            chunk = keys[start : start + batch_size]
            windows = {
                m: torch.as_tensor(dataset.stack(m, chunk), dtype=torch.float32)
                for m in needed
            }
            feats = model.node_features(windows, nodes)
            for n in nodes:
                scores = model.classify(n, feats[n])
                preds[n].append(scores.argmax(dim=1).numpy())

    out: dict[str, NodeMetrics] = {}
    for n in nodes:
        y_pred = np.concatenate(preds[n])
        cm = ConfusionMatrix.from_predictions(y_true, y_pred, n_classes)
        out[n] = NodeMetrics(
            node=n,
            accuracy=accuracy(cm),
            macro_f1=macro_f1(cm),
            confusion=cm,
            binary_f1=(
                binary_f1(cm, positive_class) if positive_class is not None else None
            ),
        )
    return out


def format_table(rows: list[dict], columns: list[str]) -> str:
    """Plain-text comparison table; missing cells render as '-'."""
    widths = {c: len(c) for c in columns}
    rendered = []
    for row in rows:
        cells = {}
        for c in columns:
            v = row.get(c)
            if v is None:
                cells[c] = "-"
            elif isinstance(v, float):
                cells[c] = f"{v:.4f}"
            else:
                cells[c] = str(v)
            widths[c] = max(widths[c], len(cells[c]))
        rendered.append(cells)
    header = "  ".join(c.ljust(widths[c]) for c in columns)
    sep = "  ".join("-" * widths[c] for c in columns)
    lines = [header, sep]
    for cells in rendered:
        lines.append("  ".join(cells[c].ljust(widths[c]) for c in columns))
    return "\n".join(lines)
