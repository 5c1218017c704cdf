"""Hyperparameter grid search and k-fold cross-validation.

Both derive per-task seeds from the master seed with a counter-based scheme:
task i of kind K uses SeedSequence(master_seed, spawn_key=(K, i)) collapsed
to one 32-bit integer (kind 0 = grid cell, kind 1 = CV fold). Tasks share
nothing mutable, so running them serially or across N workers produces
identical results.
"""

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from wellqc.errors import ConfigError, NonFiniteGradient, WellQcError
from wellqc.data.manifest import load_examples
from wellqc.data.splits import kfold_split
from wellqc.metrics import confusion, evaluate_checkpoint, metrics
from wellqc.training.config import RunConfig
from wellqc.training.loop import train

log = logging.getLogger(__name__)

_KIND_GRID_CELL = 0
_KIND_CV_FOLD = 1


def derive_seed(master_seed: int, kind: int, index: int) -> int:
    """Decorrelated child seed for task ``index`` of task family ``kind``."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(kind, index))
    return int(ss.generate_state(1, np.uint32)[0])


@dataclass(frozen=True)
class GridSpec:
    """Candidate values per hyperparameter; the search covers the product."""

    learning_rate: tuple[float, ...] = ()
    batch_size: tuple[int, ...] = ()
    dropout_rate: tuple[float, ...] = ()
    l2_lambda: tuple[float, ...] = ()

    AXES = ("learning_rate", "batch_size", "dropout_rate", "l2_lambda")

    def __post_init__(self):
        for axis in self.AXES:
            object.__setattr__(self, axis, tuple(getattr(self, axis)))

    def cells(self, base) -> list[dict]:
        """All combinations in row-major order over the axes above.

        Axes with no candidates use the base config's value.
        """
        axes = []
        for axis in self.AXES:
            values = getattr(self, axis)
            axes.append(values if values else (getattr(base, axis),))
        out = []
        for lr in axes[0]:
            for bs in axes[1]:
                for dr in axes[2]:
                    for l2 in axes[3]:
                        out.append(
                            {"learning_rate": lr, "batch_size": bs, "dropout_rate": dr, "l2_lambda": l2}
                        )
        if not out:
            raise ConfigError("grid is empty")
        return out

    def to_dict(self) -> dict:
        return {axis: list(getattr(self, axis)) for axis in self.AXES if getattr(self, axis)}

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        extra = set(d) - set(cls.AXES)
        if extra:
            raise ConfigError(f"unknown grid axes: {sorted(extra)}")
        return cls(**{k: tuple(v) for k, v in d.items()})

    @classmethod
    def from_file(cls, path) -> "GridSpec":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class CellResult:
    index: int
    values: dict
    seed: int
    val_accuracy: float | None = None
    val_loss: float | None = None
    best_epoch: int | None = None
    epochs_run: int | None = None
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "values": self.values,
            "seed": self.seed,
            "val_accuracy": self.val_accuracy,
            "val_loss": self.val_loss,
            "best_epoch": self.best_epoch,
            "epochs_run": self.epochs_run,
            "error": self.error,
        }


def _run_cell(index: int, values: dict, base_config: RunConfig, train_set, val_set) -> CellResult:
    seed = derive_seed(base_config.seed, _KIND_GRID_CELL, index)
    result = CellResult(index=index, values=values, seed=seed)
    config = replace(base_config.with_hyperparams(**values), seed=seed)
    try:
        checkpoint, history = train(config, train_set, val_set)
        best = next(r for r in history if r.epoch == checkpoint.best_epoch)
        result.val_accuracy = best.val_accuracy
        result.val_loss = best.val_loss
        result.best_epoch = checkpoint.best_epoch
        result.epochs_run = len(history)
    except (NonFiniteGradient, WellQcError) as exc:
        result.error = f"{type(exc).__name__}: {exc}"
        log.warning("grid cell %d failed: %s", index, result.error)
    return result


def grid_search(grid: GridSpec, base_config: RunConfig, train_set, val_set, jobs: int = 1):
    """Train one model per grid cell; returns (ranked results, best config).

    Ranking: validation accuracy (desc), then validation loss (asc), then
    cell order. Failed cells rank last and carry their error instead of
    aborting the sweep.
    """
    cells = grid.cells(base_config.hyperparams)
    if jobs <= 1:
        results = [_run_cell(i, values, base_config, train_set, val_set) for i, values in enumerate(cells)]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(_run_cell, i, values, base_config, train_set, val_set)
                for i, values in enumerate(cells)
            ]
            results = [f.result() for f in futures]

    def rank_key(r: CellResult):
        if r.failed:
            return (1, 0.0, 0.0, r.index)
        return (0, -r.val_accuracy, r.val_loss, r.index)

    ranked = sorted(results, key=rank_key)
    best = next((r for r in ranked if not r.failed), None)
    if best is None:
        raise NonFiniteGradient("every grid cell failed; see the result table")
    best_config = replace(base_config.with_hyperparams(**best.values), seed=best.seed)
    return ranked, best_config


def grid_table_csv(results) -> str:
    lines = ["rank,index,learning_rate,batch_size,dropout_rate,l2_lambda,val_accuracy,val_loss,best_epoch,error"]
    for rank, r in enumerate(results, start=1):
        v = r.values
        acc = "" if r.val_accuracy is None else f"{r.val_accuracy:.6f}"
        loss = "" if r.val_loss is None else f"{r.val_loss:.6f}"
        best = "" if r.best_epoch is None else str(r.best_epoch)
        err = r.error or ""
        lines.append(
            f"{rank},{r.index},{v['learning_rate']},{v['batch_size']},{v['dropout_rate']},"
            f"{v['l2_lambda']},{acc},{loss},{best},{err}"
        )
    return "\n".join(lines) + "\n"


@dataclass
class FoldResult:
    fold: int
    seed: int
    accuracy: float
    precision: float | None
    recall: float | None
    f1: float | None
    val_loss: float
    best_epoch: int

    def to_dict(self) -> dict:
        return {
            "fold": self.fold,
            "seed": self.seed,
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "val_loss": self.val_loss,
            "best_epoch": self.best_epoch,
        }


@dataclass
class CvReport:
    folds: list[FoldResult]
    mean: dict[str, float]
    std: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "folds": [f.to_dict() for f in self.folds],
            "mean": self.mean,
            "std": self.std,
        }


def _run_fold(fold: int, base_config: RunConfig, train_manifest, val_manifest) -> FoldResult:
    seed = derive_seed(base_config.seed, _KIND_CV_FOLD, fold)
    config = replace(base_config, seed=seed)
    train_set = load_examples(train_manifest)
    val_set = load_examples(val_manifest)
    checkpoint, history = train(config, train_set, val_set)
    report = evaluate_checkpoint(checkpoint, val_set)
    best = next(r for r in history if r.epoch == checkpoint.best_epoch)
    return FoldResult(
        fold=fold,
        seed=seed,
        accuracy=report.accuracy,
        precision=report.precision,
        recall=report.recall,
        f1=report.f1,
        val_loss=best.val_loss,
        best_epoch=checkpoint.best_epoch,
    )


def cross_validate(config: RunConfig, manifest, k: int, jobs: int = 1) -> CvReport:
    """Train k independent models on stratified folds and aggregate metrics."""
    pairs = kfold_split(manifest, k, config.seed)
    if jobs <= 1:
        folds = [_run_fold(i, config, tr, va) for i, (tr, va) in enumerate(pairs)]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_fold, i, config, tr, va) for i, (tr, va) in enumerate(pairs)]
            folds = [f.result() for f in futures]

    mean: dict[str, float] = {}
    std: dict[str, float] = {}
    for name in ("accuracy", "precision", "recall", "f1", "val_loss"):
        values = [getattr(f, name) for f in folds if getattr(f, name) is not None]
        if values:
            mean[name] = float(np.mean(values))
            std[name] = float(np.std(values))
    return CvReport(folds=folds, mean=mean, std=std)
