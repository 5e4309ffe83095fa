"""Experiment configuration: schema validation and dataset assembly."""

from __future__ import annotations

import hashlib
import json
import pickle
from dataclasses import dataclass
from pathlib import Path

import yaml

from vfusion.augmentation import AugmentationPolicy, TransformSpec
from vfusion.data.csv_adapter import load_manifest
from vfusion.data.preprocess import split_by_subject, split_by_subject_unlabeled
from vfusion.data.streams import SubjectSplit
from vfusion.data.synthetic import SyntheticConfig, SyntheticModality, generate_synthetic
from vfusion.data.uci_har import carve_validation, load_uci_har
from vfusion.errors import ConfigError
from vfusion.graph import FusedNode, ModalityGraph, SourceNode
from vfusion.losses import LossConfig
from vfusion.models import ModelHyperparams
from vfusion.training import DataBundle, TrainConfig

_TOP_KEYS = {
    "experiment",
    "output_dir",
    "seeds",
    "dataset",
    "graph",
    "augmentation",
    "loss",
    "train",
    "model",
}
_DATASET_KEYS = {"adapter", "synthetic", "uci_har", "csv"}
_SYNTH_KEYS = {
    "n_classes",
    "latent_dim",
    "window_len",
    "rate_hz",
    "n_harmonics",
    "modalities",
    "n_labeled",
    "n_unlabeled",
    "n_valid",
    "n_test",
    "base_seed",
}
_SYNTH_MOD_KEYS = {"name", "channels", "noise_std"}
_UCI_KEYS = {"root", "valid_fraction"}
_CSV_KEYS = {"manifest", "window_seconds", "step_seconds", "class_names", "split"}
_GRAPH_KEYS = {"feature_dim", "sources", "fused", "contrastive", "classification", "inference"}
_SOURCE_KEYS = {"name", "channels", "rate_hz", "window_len"}
_FUSED_KEYS = {"name", "kind", "inputs"}
_AUG_KEYS = {"modality", "task", "transforms"}
_TRANSFORM_KEYS = {"name", "params"}
_LOSS_KEYS = {"temperature", "two_view", "epsilon"}
_TRAIN_KEYS = {
    "batch_size",
    "learning_rate",
    "lr_decay_factor",
    "lr_patience",
    "early_stop_patience",
    "max_epochs",
    "positive_class",
}
_MODEL_KEYS = {"widths", "blocks_per_stage", "stem_kernel", "block_kernel"}


def _check_keys(section: dict, allowed: set[str], path: str) -> None:
    if not isinstance(section, dict):
        raise ConfigError(f"{path}: expected a mapping, got {type(section).__name__}")
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {sorted(unknown)}")


@dataclass
class ExperimentConfig:
    experiment: str
    output_dir: Path
    seeds: tuple[int, ...]
    dataset: dict
    graph: ModalityGraph
    policy: AugmentationPolicy
    loss: LossConfig
    train: TrainConfig
    model: ModelHyperparams
    raw: dict

    def dataset_hash(self) -> str:
        """Content hash over dataset settings (plus the manifest, if any)."""
        payload = json.dumps(self.dataset, sort_keys=True, default=str)
        h = hashlib.sha256(payload.encode())
        csv_section = self.dataset.get("csv")
        if csv_section:
            manifest = Path(csv_section["manifest"])
            if manifest.exists():
                h.update(manifest.read_bytes())
        return h.hexdigest()[:16]


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    raw = yaml.safe_load(path.read_text())
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a mapping")
    return parse_config(raw, base_dir=path.parent)


def parse_config(raw: dict, base_dir: Path | None = None) -> ExperimentConfig:
    base_dir = base_dir or Path.cwd()
    _check_keys(raw, _TOP_KEYS, "config")
    for required in ("experiment", "dataset", "graph"):
        if required not in raw:
            raise ConfigError(f"config: missing required key {required!r}")

    dataset = raw["dataset"]
    _check_keys(dataset, _DATASET_KEYS, "dataset")
    adapter = dataset.get("adapter")
    if adapter not in ("synthetic", "uci_har", "csv"):
        raise ConfigError(f"dataset.adapter: expected synthetic|uci_har|csv, got {adapter!r}")
    if adapter not in dataset:
        raise ConfigError(f"dataset: missing section {adapter!r} for the chosen adapter")
    if adapter == "synthetic":
        _check_keys(dataset["synthetic"], _SYNTH_KEYS, "dataset.synthetic")
        for mod in dataset["synthetic"].get("modalities", []):
            _check_keys(mod, _SYNTH_MOD_KEYS, "dataset.synthetic.modalities[]")
    elif adapter == "uci_har":
        _check_keys(dataset["uci_har"], _UCI_KEYS, "dataset.uci_har")
    else:
        _check_keys(dataset["csv"], _CSV_KEYS, "dataset.csv")
        split = dataset["csv"].get("split", {})
        _check_keys(split, {"train", "valid", "test"}, "dataset.csv.split")

    graph_raw = raw["graph"]
    _check_keys(graph_raw, _GRAPH_KEYS, "graph")
    for s in graph_raw.get("sources", []):
        _check_keys(s, _SOURCE_KEYS, "graph.sources[]")
    for f in graph_raw.get("fused", []):
        _check_keys(f, _FUSED_KEYS, "graph.fused[]")
    graph = ModalityGraph(
        sources=[SourceNode(**s) for s in graph_raw.get("sources", [])],
        fused=[
            FusedNode(f["name"], f["kind"], tuple(f["inputs"]))
            for f in graph_raw.get("fused", [])
        ],
        contrastive_set=list(graph_raw.get("contrastive", [])),
        classification_set=list(graph_raw.get("classification", [])),
        inference_set=list(graph_raw.get("inference", [])),
        feature_dim=graph_raw.get("feature_dim", 256),
    )

    transforms: dict[tuple[str, str], list[TransformSpec]] = {}
    for entry in raw.get("augmentation", []) or []:
        _check_keys(entry, _AUG_KEYS, "augmentation[]")
        specs = []
        for t in entry.get("transforms", []):
            _check_keys(t, _TRANSFORM_KEYS, "augmentation[].transforms[]")
            params = t.get("params", {}) or {}
            specs.append(TransformSpec(t["name"], params))
        transforms[(entry["modality"], entry["task"])] = specs
    policy = AugmentationPolicy(transforms)

    loss_raw = raw.get("loss", {}) or {}
    _check_keys(loss_raw, _LOSS_KEYS, "loss")
    loss = LossConfig(
        temperature=loss_raw.get("temperature", 0.1),
        two_view=loss_raw.get("two_view", False),
        epsilon=loss_raw.get("epsilon", 1e-8),
    )

    train_raw = raw.get("train", {}) or {}
    _check_keys(train_raw, _TRAIN_KEYS, "train")
    seeds = tuple(raw.get("seeds", (0, 1, 2)))
    train = TrainConfig(seeds=seeds, **train_raw)

    model_raw = raw.get("model", {}) or {}
    _check_keys(model_raw, _MODEL_KEYS, "model")
    if "widths" in model_raw:
        model_raw = dict(model_raw, widths=tuple(model_raw["widths"]))
    model = ModelHyperparams(**model_raw)

    output_dir = Path(raw.get("output_dir", "runs"))
    if not output_dir.is_absolute():
        output_dir = base_dir / output_dir

    return ExperimentConfig(
        experiment=str(raw["experiment"]),
        output_dir=output_dir,
        seeds=seeds,
        dataset=dataset,
        graph=graph,
        policy=policy,
        loss=loss,
        train=train,
        model=model,
        raw=raw,
    )


def _build_synthetic(section: dict) -> DataBundle:
    mods = [SyntheticModality(**m) for m in section.get("modalities", [])] or None
    base_seed = section.get("base_seed", 1000)
    common = {
        k: section[k]
        for k in (
            "n_classes",
            "latent_dim",
            "window_len",
            "rate_hz",
            "n_harmonics",
        )
        if k in section
    }
    if mods:
        common["modalities"] = mods

    def make(n_labeled, n_unlabeled, split, seed):
        cfg = SyntheticConfig(
            n_labeled=n_labeled, n_unlabeled=n_unlabeled, split=split, **common
        )
        return generate_synthetic(cfg, seed)

    n_labeled = section.get("n_labeled", 2000)
    n_unlabeled = section.get("n_unlabeled", 2000)
    n_valid = section.get("n_valid", max(200, n_labeled // 5))
    n_test = section.get("n_test", max(200, n_labeled // 5))
    train_l, train_u = make(n_labeled, n_unlabeled, "train", base_seed)
    valid_l, _ = make(n_valid, 2, "valid", base_seed + 1)
    test_l, _ = make(n_test, 2, "test", base_seed + 2)
    return DataBundle(
        train_labeled=train_l,
        valid=valid_l,
        test=test_l,
        train_unlabeled=train_u,
    )


def _build_uci_har(section: dict, base_dir: Path) -> DataBundle:
    root = Path(section["root"])
    if not root.is_absolute():
        root = base_dir / root
    train, test = load_uci_har(root)
    train, valid = carve_validation(train, section.get("valid_fraction", 0.1))
    # same labeled set serves the contrastive loss (no separate unlabeled data)
    return DataBundle(train_labeled=train, valid=valid, test=test, train_unlabeled=None)


def _build_csv(section: dict, base_dir: Path) -> DataBundle:
    manifest = Path(section["manifest"])
    if not manifest.is_absolute():
        manifest = base_dir / manifest
    recordings = load_manifest(manifest)
    split_raw = section.get("split", {})
    split = SubjectSplit(
        train_subjects=frozenset(split_raw.get("train", [])),
        valid_subjects=frozenset(split_raw.get("valid", [])),
        test_subjects=frozenset(split_raw.get("test", [])),
    )
    window_s = section["window_seconds"]
    step_s = section.get("step_seconds", window_s / 2)
    class_names = tuple(section["class_names"])
    train, valid, test = split_by_subject(recordings, split, window_s, step_s, class_names)
    train_u, _, _ = split_by_subject_unlabeled(recordings, split, window_s, step_s)
    return DataBundle(
        train_labeled=train, valid=valid, test=test, train_unlabeled=train_u
    )


def build_bundle(config: ExperimentConfig, base_dir: Path | None = None) -> DataBundle:
    """Assemble the full train/valid/test bundle for the configured adapter."""
    base_dir = base_dir or Path.cwd()
    adapter = config.dataset["adapter"]
    if adapter == "synthetic":
        return _build_synthetic(config.dataset["synthetic"])
    if adapter == "uci_har":
        return _build_uci_har(config.dataset["uci_har"], base_dir)
    return _build_csv(config.dataset["csv"], base_dir)


def cached_bundle(
    config: ExperimentConfig, cache_dir: Path, base_dir: Path | None = None
) -> tuple[DataBundle, Path, bool]:
    """Load the bundle from cache, building and caching it on a miss.

    Returns (bundle, cache_path, was_cached).
    """
    cache_dir.mkdir(parents=True, exist_ok=True)
    cache_path = cache_dir / f"{config.dataset_hash()}.pkl"
    if cache_path.exists():
        with open(cache_path, "rb") as fh:
            return pickle.load(fh), cache_path, True
    bundle = build_bundle(config, base_dir)
    with open(cache_path, "wb") as fh:
        pickle.dump(bundle, fh)
    return bundle, cache_path, False
