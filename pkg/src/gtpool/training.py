"""Cross-validation training loop, metric aggregation, and parameter sweeps."""

from __future__ import annotations

import dataclasses
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .datasets import Dataset, FoldPlan, stratified_folds
from .estimator import GtPoolClassifier, TrainingDiverged
from .rng import mix_seed
from .sampling import METHODS


class ConfigError(ValueError):
    """A run configuration value or key is invalid."""


@dataclass
class RunConfig:
    """Everything a training run needs; mirrors the CLI flags one-to-one."""

    dataset: str = "MUTAG"
    data_root: str | None = None
    sampler: str = "rwsv"
    mu: float = 0.5
    lam: float = 0.5
    layers: int = 3
    heads: int = 4
    hidden: int = 64
    batch: int = 64
    lr: float = 1e-3
    wd: float = 1e-4
    dropout: float = 0.3
    epochs: int = 200
    patience: int = 30
    seed: int = 0
    repeats: int = 1
    jobs: int = 1
    out: str = "runs"

    def validate(self) -> "RunConfig":
        checks = [
            (0.0 < self.mu <= 1.0, f"mu must be in (0, 1], got {self.mu}"),
            (0.0 <= self.lam <= 1.0, f"lambda must be in [0, 1], got {self.lam}"),
            (self.sampler in METHODS, f"sampler must be one of {METHODS}, got {self.sampler!r}"),
            (self.layers >= 1, f"layers must be >= 1, got {self.layers}"),
            (self.heads >= 1, f"heads must be >= 1, got {self.heads}"),
            (self.hidden % self.heads == 0, f"hidden ({self.hidden}) must be divisible by heads ({self.heads})"),
            (self.batch >= 1, f"batch must be >= 1, got {self.batch}"),
            (self.lr > 0, f"lr must be positive, got {self.lr}"),
            (self.wd >= 0, f"wd must be nonnegative, got {self.wd}"),
            (0.0 <= self.dropout < 1.0, f"dropout must be in [0, 1), got {self.dropout}"),
            (self.epochs >= 1, f"epochs must be >= 1, got {self.epochs}"),
            (self.patience >= 1, f"patience must be >= 1, got {self.patience}"),
            (self.repeats >= 1, f"repeats must be >= 1, got {self.repeats}"),
            (self.jobs >= 1, f"jobs must be >= 1, got {self.jobs}"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @staticmethod
    def field_names() -> list[str]:
        return [f.name for f in dataclasses.fields(RunConfig)]


def make_estimator(config: RunConfig, seed: int) -> GtPoolClassifier:
    return GtPoolClassifier(
        mu=config.mu,
        lam=config.lam,
        sampler=config.sampler,
        layers=config.layers,
        heads=config.heads,
        hidden=config.hidden,
        batch_size=config.batch,
        lr=config.lr,
        weight_decay=config.wd,
        dropout=config.dropout,
        epochs=config.epochs,
        patience=config.patience,
        seed=seed,
    )


@dataclass
class FoldResult:
    repeat: int
    fold: int
    status: str  # "ok" | "diverged"
    test_accuracy: float | None
    best_epoch: int
    epochs_run: int
    seconds: float
    train_curve: list[float] = field(default_factory=list)
    val_curve: list[float] = field(default_factory=list)
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "repeat": self.repeat,
            "fold": self.fold,
            "status": self.status,
            "test_accuracy": self.test_accuracy,
            "best_epoch": self.best_epoch,
            "epochs_run": self.epochs_run,
            "seconds": self.seconds,
            "error": self.error,
        }


@dataclass
class MetricsReport:
    dataset: str
    config: dict
    folds: list[FoldResult]

    @property
    def accuracies(self) -> list[float]:
        return [f.test_accuracy for f in self.folds if f.status == "ok"]

    @property
    def mean_accuracy(self) -> float | None:
        acc = self.accuracies
        return float(np.mean(acc)) if acc else None

    @property
    def std_accuracy(self) -> float | None:
        acc = self.accuracies
        return float(np.std(acc)) if acc else None

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "config": self.config,
            "folds": [f.to_dict() for f in self.folds],
            "mean_accuracy": self.mean_accuracy,
            "std_accuracy": self.std_accuracy,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def curves_csv(self) -> str:
        lines = ["repeat,fold,epoch,train_loss,val_loss"]
        for f in self.folds:
            for epoch, (tr, va) in enumerate(zip(f.train_curve, f.val_curve)):
                lines.append(f"{f.repeat},{f.fold},{epoch},{tr!r},{va!r}")
        return "\n".join(lines) + "\n"


def fold_seed(base_seed: int, repeat: int, fold: int) -> int:
    return mix_seed(base_seed, repeat, fold)


def train_fold(
    config: RunConfig,
    dataset: Dataset,
    plan: FoldPlan,
    fold_id: int,
    repeat: int = 0,
    estimator_factory=None,
    checkpoint_dir=None,
) -> FoldResult:
    """Train on everything outside ``fold_id`` and test on it.

    The estimator carves its own validation split out of the training
    graphs for early stopping; the test fold is only ever used for the
    final accuracy evaluation.
    """
    factory = estimator_factory if estimator_factory is not None else make_estimator
    est = factory(config, fold_seed(config.seed, repeat, fold_id))
    train_graphs = [dataset.graphs[i] for i in plan.train_indices(fold_id)]
    started = time.perf_counter()
    try:
        est.fit(train_graphs)
    except TrainingDiverged as exc:
        return FoldResult(
            repeat=repeat,
            fold=fold_id,
            status="diverged",
            test_accuracy=None,
            best_epoch=-1,
            epochs_run=len(getattr(est, "history_", [])),
            seconds=time.perf_counter() - started,
            error=str(exc),
        )
    if checkpoint_dir is not None and hasattr(est, "save"):
        est.save(Path(checkpoint_dir) / f"repeat{repeat}_fold{fold_id}.ckpt")
    test_graphs = [dataset.graphs[i] for i in plan.test_indices(fold_id)]
    accuracy = float(est.score(test_graphs, [g.label for g in test_graphs]))
    history = getattr(est, "history_", [])
    return FoldResult(
        repeat=repeat,
        fold=fold_id,
        status="ok",
        test_accuracy=accuracy,
        best_epoch=getattr(est, "best_epoch_", -1),
        epochs_run=len(history),
        seconds=time.perf_counter() - started,
        train_curve=[h["train_loss"] for h in history],
        val_curve=[h["val_loss"] for h in history],
    )


def _fold_job(args) -> FoldResult:
    config, dataset, plan, fold_id, repeat, checkpoint_dir = args
    return train_fold(config, dataset, plan, fold_id, repeat, checkpoint_dir=checkpoint_dir)


def cross_validate(
    config: RunConfig,
    dataset: Dataset,
    k: int = 10,
    estimator_factory=None,
    checkpoint_dir=None,
) -> MetricsReport:
    """k-fold cross-validation, repeated ``config.repeats`` times.

    Per-fold failures are recorded in the report without aborting the
    remaining folds.
    """
    config.validate()
    tasks = []
    for repeat in range(config.repeats):
        plan = stratified_folds(dataset, k=k, seed=mix_seed(config.seed, repeat))
        tasks.extend(
            (config, dataset, plan, fold, repeat, checkpoint_dir) for fold in range(k)
        )

    if config.jobs > 1 and estimator_factory is None:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            folds = list(pool.map(_fold_job, tasks))
    else:
        folds = [
            train_fold(cfg, ds, plan, fold, repeat, estimator_factory, ckpt)
            for cfg, ds, plan, fold, repeat, ckpt in tasks
        ]
    return MetricsReport(dataset=dataset.name, config=config.to_dict(), folds=folds)


SWEEPABLE = ("mu", "lam", "layers", "sampler", "heads", "hidden", "batch", "lr", "wd", "dropout")


def sweep(
    config: RunConfig,
    dataset: Dataset,
    axis: str,
    values,
    k: int = 10,
    estimator_factory=None,
) -> list[MetricsReport]:
    """Vary exactly one config axis, holding everything else fixed."""
    if axis not in SWEEPABLE:
        raise ConfigError(f"cannot sweep {axis!r}; choose one of {SWEEPABLE}")
    reports = []
    for value in values:
        variant = dataclasses.replace(config, **{axis: value})
        reports.append(cross_validate(variant, dataset, k=k, estimator_factory=estimator_factory))
    return reports


def sweep_rows(axis: str, values, reports: list[MetricsReport]) -> list[dict]:
    """Table rows (one per swept value) for plotting or CSV export."""
    return [
        {
            "axis": axis,
            "value": value,
            "mean_accuracy": report.mean_accuracy,
            "std_accuracy": report.std_accuracy,
            "folds_ok": len(report.accuracies),
        }
        for value, report in zip(values, reports)
    ]
