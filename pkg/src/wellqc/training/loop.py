"""Mini-batch training driver with early stopping and best-epoch restoration.

The recorded train loss is the optimized objective (mean cross-entropy plus
the L2 penalty); the pure cross-entropy component is kept alongside it.
Validation loss is pure cross-entropy, which is also what early stopping
monitors by default.

Epoch wall time is measured for the run log only: it is excluded from the
history CSV and checkpoints so identically-configured runs serialize to
identical bytes.
"""

import logging
import time
from dataclasses import dataclass, replace

import numpy as np

from wellqc.errors import NonFiniteGradient
from wellqc.nn.arch import ArchitectureSpec, LayerSpec, logistic_architecture
from wellqc.nn.model import INFER, TRAIN, Model, init_model, model_backward, model_forward, model_loss
from wellqc.optim import adam_step, apply_l2, init_adam_state, l2_penalty
from wellqc.training.checkpoint import Checkpoint
from wellqc.training.config import RunConfig

log = logging.getLogger(__name__)

HISTORY_COLUMNS = ("epoch", "train_loss", "train_ce", "train_accuracy", "val_loss", "val_accuracy")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int  # 1-based
    train_loss: float  # cross-entropy + L2 penalty (the optimized objective)
    train_ce: float
    train_accuracy: float
    val_loss: float  # pure cross-entropy
    val_accuracy: float
    wall_time: float = 0.0  # seconds; log-only, never serialized

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in HISTORY_COLUMNS}

    @classmethod
    def from_dict(cls, d: dict) -> "EpochRecord":
        return cls(**{name: d[name] for name in HISTORY_COLUMNS})


def history_csv(history) -> str:
    lines = [",".join(HISTORY_COLUMNS)]
    for r in history:
        lines.append(
            f"{r.epoch},{r.train_loss:.8f},{r.train_ce:.8f},{r.train_accuracy:.8f},"
            f"{r.val_loss:.8f},{r.val_accuracy:.8f}"
        )
    return "\n".join(lines) + "\n"


def early_stop_check(history, metric: str = "val_loss", patience: int = 5):
    """None to continue; otherwise the 1-based epoch whose weights to keep.

    Stops once the monitored metric has gone ``patience`` consecutive epochs
    without strictly improving on its best value. Ties are not improvements,
    and the best epoch is the earliest one achieving the best value.
    """
    if not history:
        raise ValueError("history must be non-empty")
    values = [getattr(r, metric) for r in history]
    best = min(range(len(values)), key=lambda i: (values[i] if metric == "val_loss" else -values[i], i))
    stalled = len(values) - 1 - best
    if stalled >= patience:
        return history[best].epoch
    return None


def batch_slices(n: int, batch_size: int):
    """Index ranges covering 0..n in batches; the last partial batch is kept."""
    for start in range(0, n, batch_size):
        yield start, min(start + batch_size, n)


def evaluate_model(model: Model, images, labels, batch_size: int = 64):
    """(mean cross-entropy, accuracy) over a dataset, in infer mode."""
    frozen = Model(model.spec, model.params, INFER, model.layer_names)
    n = images.shape[0]
    total_ce = 0.0
    correct = 0
    for start, stop in batch_slices(n, batch_size):
        probs, cache = model_forward(frozen, images[start:stop])
        total_ce += model_loss(cache, labels[start:stop]) * (stop - start)
        correct += int((probs.argmax(axis=1) == labels[start:stop]).sum())
    return total_ce / n, correct / n


def train(config: RunConfig, train_set, val_set):
    """Train on ``train_set``, monitor ``val_set``; returns (Checkpoint, history).

    The checkpoint carries the weights of the best monitored epoch, not the
    last one. All randomness (init, shuffling, dropout) comes from one
    generator seeded with config.seed, so a rerun is bit-identical.
    """
    if len(train_set) == 0 or len(val_set) == 0:
        raise ValueError("train and validation sets must be non-empty")
    hp = config.hyperparams.validate()
    arch = _with_dropout_rate(config.architecture, hp.dropout_rate)
    es = config.early_stopping

    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    model = init_model(arch, rng, dtype=np.float32, mode=TRAIN)
    state = init_adam_state(model.params)
    reg_keys = model.regularized_keys()

    n = len(train_set)
    history: list[EpochRecord] = []
    best_value = None
    best_epoch = 0
    best_params = {k: v.copy() for k, v in model.params.items()}

    for epoch in range(1, hp.epochs + 1):
        t0 = time.perf_counter()
        order = rng.permutation(n)
        ce_sum = 0.0
        obj_sum = 0.0
        correct = 0
        model.mode = TRAIN
        with np.errstate(over="ignore", invalid="ignore", under="ignore"):
            for batch_index, (start, stop) in enumerate(batch_slices(n, hp.batch_size)):
                idx = order[start:stop]
                images = train_set.images[idx]
                labels = train_set.labels[idx]
                probs, cache = model_forward(model, images, rng=rng)
                ce = model_loss(cache, labels)
                penalty = l2_penalty(model.params, hp.l2_lambda, reg_keys)
                grads = model_backward(model, cache, labels)
                grads = apply_l2(grads, model.params, hp.l2_lambda, reg_keys)
                try:
                    adam_step(model.params, grads, state, hp.learning_rate)
                except NonFiniteGradient as exc:
                    raise NonFiniteGradient(f"epoch {epoch}, batch {batch_index}: {exc}") from exc
                size = stop - start
                ce_sum += ce * size
                obj_sum += (ce + penalty) * size
                correct += int((probs.argmax(axis=1) == labels).sum())

        val_loss, val_accuracy = evaluate_model(model, val_set.images, val_set.labels)
        record = EpochRecord(
            epoch=epoch,
            train_loss=obj_sum / n,
            train_ce=ce_sum / n,
            train_accuracy=correct / n,
            val_loss=val_loss,
            val_accuracy=val_accuracy,
            wall_time=time.perf_counter() - t0,
        )
        history.append(record)
        log.info(
            "epoch %d: train_loss=%.4f train_acc=%.4f val_loss=%.4f val_acc=%.4f (%.2fs)",
            record.epoch, record.train_loss, record.train_accuracy,
            record.val_loss, record.val_accuracy, record.wall_time,
        )

        monitored = val_loss if es.metric == "val_loss" else val_accuracy
        improved = (
            best_value is None
            or (es.metric == "val_loss" and monitored < best_value)
            or (es.metric == "val_accuracy" and monitored > best_value)
        )
        if improved:
            best_value = monitored
            best_epoch = epoch
            best_params = {k: v.copy() for k, v in model.params.items()}

        if es.enabled and early_stop_check(history, es.metric, es.patience) is not None:
            log.info("early stop after epoch %d; keeping epoch %d", epoch, best_epoch)
            break

    return (
        Checkpoint(
            spec=arch,
            params=best_params,
            hyperparams=hp,
            history=history,
            best_epoch=best_epoch,
        ),
        history,
    )


def _with_dropout_rate(arch: ArchitectureSpec, rate: float) -> ArchitectureSpec:
    """The dropout-rate hyperparameter governs every Dropout layer."""
    layers = tuple(
        replace(layer, rate=rate) if layer.kind == "Dropout" else layer for layer in arch.layers
    )
    return replace(arch, layers=layers)


def train_logistic_baseline(config: RunConfig, train_set, val_set):
    """The comparison baseline: softmax regression on raw pixels.

    Identical training machinery with the architecture fixed to
    Flatten -> Dense(num_classes) -> Softmax and no dropout; loss, optimizer,
    and L2 are unchanged, so it differs from the main model only in
    architecture.
    """
    arch = logistic_architecture(config.architecture.input_shape, config.architecture.num_classes)
    logistic_config = replace(
        config,
        architecture=arch,
        hyperparams=replace(config.hyperparams, dropout_rate=0.0),
    )
    return train(logistic_config, train_set, val_set)
