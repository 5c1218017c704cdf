"""Adam optimizer with L2 weight regularization.

The update follows the bias-corrected form:

    t <- t + 1
    m <- b1*m + (1-b1)*g        v <- b2*v + (1-b2)*g^2
    m_hat = m / (1 - b1^t)      v_hat = v / (1 - b2^t)
    theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)

L2 regularization adds lambda * sum(W^2) to the optimized loss, i.e. 2*lambda*W
to the weight gradients; bias gradients are never regularized.
"""

from dataclasses import dataclass, field

import numpy as np

from wellqc.errors import ConfigError, NonFiniteGradient

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class Hyperparams:
    """Training knobs; the defaults are the shipped configuration."""

    learning_rate: float = 0.001
    optimizer: str = "adam"
    epochs: int = 40
    batch_size: int = 16
    dropout_rate: float = 0.2
    l2_lambda: float = 0.3
    loss: str = "sparse_categorical_cross_entropy"

    def validate(self) -> "Hyperparams":
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.l2_lambda < 0:
            raise ConfigError(f"l2_lambda must be >= 0, got {self.l2_lambda}")
        if self.optimizer != "adam":
            raise ConfigError(f"unsupported optimizer {self.optimizer!r}")
        if self.loss != "sparse_categorical_cross_entropy":
            raise ConfigError(f"unsupported loss {self.loss!r}")
        return self

    def to_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "optimizer": self.optimizer,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "dropout_rate": self.dropout_rate,
            "l2_lambda": self.l2_lambda,
            "loss": self.loss,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Hyperparams":
        known = set(cls().to_dict())
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown hyperparameter keys: {sorted(extra)}")
        return cls(**d).validate()


@dataclass
class AdamState:
    """Per-parameter first/second moments and the shared step counter."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS


def init_adam_state(params: dict[str, np.ndarray]) -> AdamState:
    return AdamState(
        m={k: np.zeros_like(v) for k, v in params.items()},
        v={k: np.zeros_like(v) for k, v in params.items()},
    )


def adam_step(params, grads, state: AdamState, lr: float):
    """One Adam update, in place; returns (params, state).

    Raises NonFiniteGradient if any gradient element is NaN/Inf, naming the
    offending tensors, which is how a diverged run surfaces.
    """
    bad = [k for k, g in grads.items() if not np.all(np.isfinite(g))]
    if bad:
        raise NonFiniteGradient(f"non-finite gradient in {', '.join(sorted(bad))}")
    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    for key, g in grads.items():
        m, v = state.m[key], state.v[key]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * np.square(g)
        m_hat = m / bc1
        v_hat = v / bc2
        params[key] -= (lr * m_hat / (np.sqrt(v_hat) + state.eps)).astype(params[key].dtype)
    return params, state


def apply_l2(grads, params, l2_lambda: float, keys=None):
    """Add 2*lambda*W to the regularized weight gradients; biases untouched.

    ``keys`` selects which weight tensors the penalty covers; None means every
    ".W" entry. The training loop covers dense-layer weights only (see
    Model.regularized_keys), which is where nearly all of the parameters live;
    conv filters and biases are never regularized. Non-mutating: returns a new
    gradient dict.
    """
    if keys is None:
        keys = [k for k in grads if k.endswith(".W")]
    if l2_lambda == 0.0:
        return dict(grads)
    covered = set(keys)
    out = {}
    for key, g in grads.items():
        if key in covered:
            if key.endswith(".b"):
                raise ConfigError(f"bias tensor {key} cannot be L2-regularized")
            out[key] = g + (2.0 * l2_lambda) * params[key]
        else:
            out[key] = g
    return out


def l2_penalty(params, l2_lambda: float, keys=None) -> float:
    """The regularization term of the optimized loss: lambda * sum(W^2)."""
    if l2_lambda == 0.0:
        return 0.0
    if keys is None:
        keys = [k for k in params if k.endswith(".W")]
    total = 0.0
    for key in keys:
        w = params[key]
        total += float(np.dot(w.reshape(-1), w.reshape(-1)))
    return l2_lambda * total
