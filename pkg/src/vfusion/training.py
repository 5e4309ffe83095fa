"""Joint end-to-end training with plateau LR decay and early stopping.

One optimizer step covers everything: classification loss on the labeled
half (per classification node), contrastive loss on the unlabeled half (or
on the labeled half when no unlabeled set is supplied), summed without
weights, backpropagated through all extractors, projectors, and heads at
once. Validation is scored per epoch; the best checkpoint is kept.
"""

from __future__ import annotations

import copy
import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from vfusion.augmentation import (
    TASK_CLASSIFICATION,
    TASK_CONTRASTIVE,
    AugmentationPolicy,
)
from vfusion.data.streams import MultimodalDataset
from vfusion.errors import ConfigError, VFusionError
from vfusion.evaluation import (
    ConfusionMatrix,
    binary_f1,
    macro_f1,
)
from vfusion.graph import ModalityGraph
from vfusion.losses import LossConfig, classification_loss, multiview_contrastive
from vfusion.models import ModelHyperparams, VirtualFusionModel, build
from vfusion.sampling import BatchComposer

IMPROVED = "improved"
DECAY = "decay"
STOP = "stop"
CONTINUE = "continue"


@dataclass
class TrainConfig:
    batch_size: int = 32
    learning_rate: float = 1e-3
    lr_decay_factor: float = 10.0
    lr_patience: int = 15
    early_stop_patience: int = 30
    max_epochs: int = 500
    seeds: tuple[int, ...] = (0, 1, 2)
    positive_class: int | None = None  # used for 2-class validation scoring

    def __post_init__(self):
        if self.early_stop_patience < self.lr_patience:
            raise ConfigError(
                "early stop patience must be at least the LR decay patience"
            )
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ConfigError("batch_size and max_epochs must be positive")


class PlateauTracker:
    """Tracks epochs since the best score; drives LR decay and stopping.

    Improvement means a strict increase. The decay and stop patiences count
    from the same best epoch: decay fires when the plateau reaches a
    multiple of the decay patience, stop when it reaches the stop patience.
    """

    def __init__(self, decay_patience: int, stop_patience: int):
        if decay_patience < 1 or stop_patience < decay_patience:
            raise ConfigError("need 1 <= decay_patience <= stop_patience")
        self.decay_patience = decay_patience
        self.stop_patience = stop_patience
        self.best_score = -math.inf
        self.best_epoch = -1
        self.plateau = 0
        self._epoch = -1

    def update(self, score: float) -> str:
        self._epoch += 1
        if score > self.best_score:
            self.best_score = score
            self.best_epoch = self._epoch
            self.plateau = 0
            return IMPROVED
        self.plateau += 1
        if self.plateau >= self.stop_patience:
            return STOP
        if self.plateau % self.decay_patience == 0:
            return DECAY
        return CONTINUE


@dataclass
class DataBundle:
    train_labeled: MultimodalDataset
    valid: MultimodalDataset
    test: MultimodalDataset | None = None
    train_unlabeled: MultimodalDataset | None = None


@dataclass
class EpochRecord:
    epoch: int
    lr: float
    loss_cls: float
    loss_ctr: float
    valid_f1: dict[str, float]
    score: float


@dataclass
class TrainedRun:
    model: VirtualFusionModel
    best_state: dict
    history: list[EpochRecord]
    selected_epoch: int
    best_score: float
    seed: int

    def restore_best(self) -> VirtualFusionModel:
        self.model.load_state_dict(self.best_state)
        return self.model


def _validation_score(
    model: VirtualFusionModel,
    valid: MultimodalDataset,
    config: TrainConfig,
    batch_size: int = 256,
) -> dict[str, float]:
    """Per classification node: macro F1 (binary F1 for 2-class tasks)."""
    nodes = list(model.graph.classification_set)
    needed = sorted(model.graph.required_modalities(nodes))
    keys = valid.keys
    y_true = valid.labels()
    n_classes = valid.n_classes
    model.eval()
    preds = {n: [] for n in nodes}
    with torch.no_grad():
        for start in range(0, len(keys), batch_size):
            chunk = keys[start : start + batch_size]
            windows = {
                m: torch.as_tensor(valid.stack(m, chunk), dtype=torch.float32)
                for m in needed
            }
            feats = model.node_features(windows, nodes)
            for n in nodes:
                preds[n].append(model.classify(n, feats[n]).argmax(dim=1).numpy())
    model.train()
    out = {}
    for n in nodes:
        cm = ConfusionMatrix.from_predictions(
            y_true, np.concatenate(preds[n]), n_classes
        )
        if n_classes == 2:
            pos = 1 if config.positive_class is None else config.positive_class
            out[n] = binary_f1(cm, pos)
        else:
            out[n] = macro_f1(cm)
    return out


def train(
    graph: ModalityGraph,
    bundle: DataBundle,
    config: TrainConfig,
    seed: int,
    policy: AugmentationPolicy | None = None,
    loss_config: LossConfig | None = None,
    hp: ModelHyperparams | None = None,
    out_dir: str | Path | None = None,
    step_log: list | None = None,
) -> TrainedRun:
    """One full training run; returns the best checkpoint and curves.

    When ``step_log`` is a list, every optimization step appends a
    ``(loss_cls, loss_ctr)`` float pair to it, in order.
    """
    if bundle.valid.size == 0:
        raise ConfigError("validation set is empty; early stopping needs one")
    policy = policy or AugmentationPolicy()
    loss_config = loss_config or LossConfig()

    torch.manual_seed(seed)
    model = build(graph, bundle.train_labeled.n_classes, hp)
    model.train()

    unlabeled = bundle.train_unlabeled if graph.contrastive_set else None
    composer = BatchComposer(bundle.train_labeled, unlabeled, config.batch_size, seed)
    aug_rng = np.random.default_rng(np.random.SeedSequence([seed, 7]))
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    tracker = PlateauTracker(config.lr_patience, config.early_stop_patience)

    cls_nodes = list(graph.classification_set)
    ctr_nodes = list(graph.contrastive_set)
    ctr_modalities = sorted(graph.required_modalities(ctr_nodes)) if ctr_nodes else []
    cls_modalities = sorted(graph.required_modalities(cls_nodes))

    history: list[EpochRecord] = []
    best_state = copy.deepcopy(model.state_dict())
    lr = config.learning_rate

    for epoch in range(config.max_epochs):
        cls_sum = 0.0
        ctr_sum = 0.0
        for _ in range(composer.steps_per_epoch):
            batch = composer.compose()
            labels = torch.as_tensor(batch.labels, dtype=torch.long)

            cls_windows = {
                m: torch.as_tensor(
                    policy.apply_batch(batch.labeled[m], m, TASK_CLASSIFICATION, aug_rng),
                    dtype=torch.float32,
                )
                for m in cls_modalities
            }
            feats = model.node_features(cls_windows, cls_nodes)
            scores = {n: model.classify(n, feats[n]) for n in cls_nodes}
            l_cls = classification_loss(scores, labels)

            if ctr_nodes:
                # D8: with no unlabeled set the labeled half serves both losses,
                # through an independently augmented view
                raw = batch.unlabeled if batch.unlabeled else batch.labeled
                ctr_windows = {
                    m: torch.as_tensor(
                        policy.apply_batch(raw[m], m, TASK_CONTRASTIVE, aug_rng),
                        dtype=torch.float32,
                    )
                    for m in ctr_modalities
                }
                ctr_feats = model.node_features(ctr_windows, ctr_nodes)
                l_ctr = multiview_contrastive(
                    {n: ctr_feats[n] for n in ctr_nodes},
                    loss_config.temperature,
                    loss_config.two_view,
                    loss_config.epsilon,
                )
                loss = l_cls + l_ctr
            else:
                l_ctr = torch.zeros(())
                loss = l_cls

            if not torch.isfinite(loss):
                raise VFusionError(
                    f"non-finite loss at epoch {epoch} "
                    f"(cls={float(l_cls.detach()):.4g}, ctr={float(l_ctr.detach()):.4g})"
                )
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            cls_sum += float(l_cls.detach())
            ctr_sum += float(l_ctr.detach())
            if step_log is not None:
                step_log.append((float(l_cls.detach()), float(l_ctr.detach())))

        valid_f1 = _validation_score(model, bundle.valid, config)
        score = float(np.mean(list(valid_f1.values())))
        record = EpochRecord(
            epoch=epoch,
            lr=lr,
            loss_cls=cls_sum / composer.steps_per_epoch,
            loss_ctr=ctr_sum / composer.steps_per_epoch,
            valid_f1=valid_f1,
            score=score,
        )
        history.append(record)

        signal = tracker.update(score)
        if signal == IMPROVED:
            best_state = copy.deepcopy(model.state_dict())
        elif signal == DECAY:
            lr /= config.lr_decay_factor
            for group in optimizer.param_groups:
                group["lr"] = lr
        elif signal == STOP:
            break

    run = TrainedRun(
        model=model,
        best_state=best_state,
        history=history,
        selected_epoch=tracker.best_epoch,
        best_score=tracker.best_score,
        seed=seed,
    )
    if out_dir is not None:
        save_run(run, graph, out_dir)
    return run


def save_run(run: TrainedRun, graph: ModalityGraph, out_dir: str | Path) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    torch.save(
        {
            "state_dict": run.best_state,
            "graph": graph.to_dict(),
            "n_classes": run.model.n_classes,
            "hyperparams": {
                "widths": list(run.model.hp.widths),
                "blocks_per_stage": run.model.hp.blocks_per_stage,
                "stem_kernel": run.model.hp.stem_kernel,
                "block_kernel": run.model.hp.block_kernel,
            },
            "selected_epoch": run.selected_epoch,
            "best_score": run.best_score,
            "seed": run.seed,
        },
        out_dir / "checkpoint.pt",
    )
    nodes = sorted(run.history[0].valid_f1) if run.history else []
    with open(out_dir / "epochs.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "lr", "loss_cls", "loss_ctr"] + [f"valid_f1_{n}" for n in nodes])
        for rec in run.history:
            writer.writerow(
                [rec.epoch, rec.lr, rec.loss_cls, rec.loss_ctr]
                + [rec.valid_f1[n] for n in nodes]
            )
    return out_dir


def load_run(run_dir: str | Path) -> tuple[VirtualFusionModel, dict]:
    """Rebuild the model from a checkpoint directory."""
    payload = torch.load(Path(run_dir) / "checkpoint.pt", weights_only=False)
    graph = ModalityGraph.from_dict(payload["graph"])
    hp = ModelHyperparams(
        widths=tuple(payload["hyperparams"]["widths"]),
        blocks_per_stage=payload["hyperparams"]["blocks_per_stage"],
        stem_kernel=payload["hyperparams"]["stem_kernel"],
        block_kernel=payload["hyperparams"]["block_kernel"],
    )
    model = build(graph, payload["n_classes"], hp)
    model.load_state_dict(payload["state_dict"])
    return model, payload


@dataclass
class ExperimentReport:
    per_seed: dict[int, dict[str, dict]] = field(default_factory=dict)

    def aggregate(self) -> dict[str, dict[str, float]]:
        """Mean and std of each metric per node across seeds."""
        nodes: dict[str, dict[str, list[float]]] = {}
        for metrics in self.per_seed.values():
            for node, m in metrics.items():
                slot = nodes.setdefault(node, {})
                for key, value in m.items():
                    if isinstance(value, (int, float)):
                        slot.setdefault(key, []).append(float(value))
        out = {}
        for node, metric_lists in nodes.items():
            out[node] = {}
            for key, values in metric_lists.items():
                out[node][f"{key}_mean"] = float(np.mean(values))
                out[node][f"{key}_std"] = float(np.std(values))
        return out


def run_experiment(
    graph: ModalityGraph,
    bundle: DataBundle,
    config: TrainConfig,
    policy: AugmentationPolicy | None = None,
    loss_config: LossConfig | None = None,
    hp: ModelHyperparams | None = None,
    out_root: str | Path | None = None,
    eval_nodes: list[str] | None = None,
) -> ExperimentReport:
    """Train once per seed, evaluate best checkpoints on the test set."""
    from vfusion.evaluation import evaluate

    if bundle.test is None:
        raise ConfigError("run_experiment needs a test set")
    if not config.seeds:
        raise ConfigError("need at least one seed")
    eval_nodes = eval_nodes or list(graph.inference_set)
    report = ExperimentReport()
    for seed in config.seeds:
        out_dir = None if out_root is None else Path(out_root) / str(seed)
        run = train(graph, bundle, config, seed, policy, loss_config, hp, out_dir)
        model = run.restore_best()
        metrics = evaluate(
            model, bundle.test, eval_nodes, positive_class=config.positive_class
        )
        report.per_seed[seed] = {n: m.to_dict() for n, m in metrics.items()}
    return report
