"""Command-line entry points: prepare, train, eval, report.

Exit codes: 0 success, 2 config error, 3 data error, 4 usage error.
The dataset cache directory defaults to ``.vfusion_cache`` next to the
output directory and can be overridden with the VFUSION_CACHE env var.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from vfusion.config import ExperimentConfig, cached_bundle, load_config
from vfusion.errors import ConfigError, DataError, GraphError, VFusionError
from vfusion.evaluation import evaluate, format_table
from vfusion.training import load_run, run_experiment

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_USAGE = 4


def _load(config_path: str) -> ExperimentConfig:
    try:
        return load_config(config_path)
    except (ConfigError, GraphError) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)


def _cache_dir(config: ExperimentConfig) -> Path:
    env = os.environ.get("VFUSION_CACHE")
    if env:
        return Path(env)
    return config.output_dir / ".vfusion_cache"


def _bundle(config: ExperimentConfig, config_path: str):
    try:
        return cached_bundle(config, _cache_dir(config), Path(config_path).parent)
    except DataError as exc:
        click.echo(f"data error: {exc}", err=True)
        sys.exit(EXIT_DATA)
    except (ConfigError, GraphError) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)


@click.group()
def main():
    """Experiment runner for multi-sensor contrastive training."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
def prepare(config_path):
    """Build and cache the windowed datasets for a config."""
    config = _load(config_path)
    bundle, cache_path, was_cached = _bundle(config, config_path)
    status = "cache hit" if was_cached else "built"
    click.echo(f"{status}: {cache_path}")
    click.echo(
        f"train={bundle.train_labeled.size} valid={bundle.valid.size} "
        f"test={bundle.test.size if bundle.test else 0} "
        f"unlabeled={bundle.train_unlabeled.size if bundle.train_unlabeled else 0}"
    )


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--seed", type=int, default=None, help="Train only this seed.")
@click.option("--out", "out_dir", type=click.Path(), default=None)
def train(config_path, seed, out_dir):
    """Train one run per seed; completed seeds are skipped on rerun."""
    config = _load(config_path)
    bundle, _, _ = _bundle(config, config_path)
    out_root = Path(out_dir) if out_dir else config.output_dir / config.experiment
    seeds = (seed,) if seed is not None else config.seeds

    from vfusion.training import train as train_one

    for s in seeds:
        run_dir = out_root / str(s)
        if (run_dir / "checkpoint.pt").exists():
            click.echo(f"seed {s}: already trained, skipping ({run_dir})")
            continue
        click.echo(f"seed {s}: training...")
        try:
            run = train_one(
                config.graph,
                bundle,
                config.train,
                s,
                policy=config.policy,
                loss_config=config.loss,
                hp=config.model,
                out_dir=run_dir,
            )
        except VFusionError as exc:
            click.echo(f"training failed: {exc}", err=True)
            sys.exit(EXIT_DATA)
        _write_config_snapshot(config, run_dir)
        model = run.restore_best()
        if bundle.test is not None and config.graph.inference_set:
            metrics = evaluate(
                model,
                bundle.test,
                list(config.graph.inference_set),
                positive_class=config.train.positive_class,
            )
            payload = {n: m.to_dict() for n, m in metrics.items()}
            (run_dir / "metrics.json").write_text(json.dumps(payload, indent=2))
        click.echo(
            f"seed {s}: best epoch {run.selected_epoch}, "
            f"valid score {run.best_score:.4f} -> {run_dir}"
        )


def _write_config_snapshot(config: ExperimentConfig, run_dir: Path):
    run_dir.mkdir(parents=True, exist_ok=True)
    snapshot = {
        "config": config.raw,
        "dataset_hash": config.dataset_hash(),
    }
    (run_dir / "config.json").write_text(json.dumps(snapshot, indent=2, default=str))


@main.command(name="eval")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--run-dir", required=True, type=click.Path(exists=True))
@click.option(
    "--nodes", default=None, help="Comma-separated node names (default: inference set)."
)
def eval_cmd(config_path, run_dir, nodes):
    """Evaluate a trained run's nodes on the test split."""
    config = _load(config_path)
    bundle, _, _ = _bundle(config, config_path)
    try:
        model, _ = load_run(run_dir)
    except FileNotFoundError as exc:
        click.echo(f"data error: {exc}", err=True)
        sys.exit(EXIT_DATA)

    node_list = (
        [n.strip() for n in nodes.split(",")] if nodes else list(model.graph.inference_set)
    )
    valid_nodes = set(model.graph.inference_set)
    bad = [n for n in node_list if n not in valid_nodes]
    if bad:
        click.echo(
            f"unknown node(s) {bad}; valid nodes: {sorted(valid_nodes)}", err=True
        )
        sys.exit(EXIT_USAGE)

    metrics = evaluate(
        model, bundle.test, node_list, positive_class=config.train.positive_class
    )
    payload = {n: m.to_dict() for n, m in metrics.items()}
    out_path = Path(run_dir) / f"eval_{'_'.join(node_list)}.json"
    out_path.write_text(json.dumps(payload, indent=2))
    rows = [
        {"node": n, "accuracy": m.accuracy, "macro_f1": m.macro_f1}
        for n, m in metrics.items()
    ]
    click.echo(format_table(rows, ["node", "accuracy", "macro_f1"]))
    click.echo(f"written: {out_path}")


@main.command()
@click.argument("run_dirs", nargs=-1, type=click.Path())
def report(run_dirs):
    """Aggregate metrics.json files from run directories into one table."""
    if not run_dirs:
        click.echo("usage: report RUN_DIR [RUN_DIR ...]", err=True)
        sys.exit(EXIT_USAGE)
    rows = []
    for run_dir in run_dirs:
        metrics_path = Path(run_dir) / "metrics.json"
        if not metrics_path.exists():
            click.echo(f"warning: no metrics.json in {run_dir}", err=True)
            rows.append({"run": str(run_dir), "node": "(absent)"})
            continue
        payload = json.loads(metrics_path.read_text())
        for node, m in payload.items():
            rows.append(
                {
                    "run": str(run_dir),
                    "node": node,
                    "accuracy": m.get("accuracy"),
                    "macro_f1": m.get("macro_f1"),
                    "binary_f1": m.get("binary_f1"),
                }
            )
    click.echo(format_table(rows, ["run", "node", "accuracy", "macro_f1", "binary_f1"]))


@main.command(name="run")
@click.option("--config", "config_path", required=True, type=click.Path())
def run_cmd(config_path):
    """Train all seeds and print the aggregated test report."""
    config = _load(config_path)
    bundle, _, _ = _bundle(config, config_path)
    report_obj = run_experiment(
        config.graph,
        bundle,
        config.train,
        policy=config.policy,
        loss_config=config.loss,
        hp=config.model,
        out_root=config.output_dir / config.experiment,
    )
    agg = report_obj.aggregate()
    rows = [{"node": node, **m} for node, m in agg.items()]
    cols = ["node"] + sorted({k for row in rows for k in row if k != "node"})
    click.echo(format_table(rows, cols))


if __name__ == "__main__":
    main()
