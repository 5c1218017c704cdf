"""Run configuration: architecture + hyperparameters + split/seed/stopping.

Precedence when resolving a run is built-in defaults < config file <
command-line overrides; the CLI logs the fully-resolved result before doing
anything, and a resolved config re-runs to identical artifacts.
"""

import json
from dataclasses import dataclass, field, replace

from wellqc.errors import ConfigError
from wellqc.nn.arch import ArchitectureSpec, default_architecture
from wellqc.optim import Hyperparams


@dataclass(frozen=True)
class EarlyStoppingConfig:
    enabled: bool = True
    metric: str = "val_loss"  # or "val_accuracy"
    patience: int = 5

    def __post_init__(self):
        if self.metric not in ("val_loss", "val_accuracy"):
            raise ConfigError(f"early stopping metric must be val_loss or val_accuracy, got {self.metric!r}")
        if self.patience < 1:
            raise ConfigError(f"early stopping patience must be >= 1, got {self.patience}")

    def to_dict(self) -> dict:
        return {"enabled": self.enabled, "metric": self.metric, "patience": self.patience}

    @classmethod
    def from_dict(cls, d: dict) -> "EarlyStoppingConfig":
        known = {"enabled", "metric", "patience"}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown early_stopping keys: {sorted(extra)}")
        return cls(**d)


@dataclass(frozen=True)
class RunConfig:
    architecture: ArchitectureSpec
    hyperparams: Hyperparams
    split_fraction: float = 0.2
    seed: int = 0
    early_stopping: EarlyStoppingConfig = field(default_factory=EarlyStoppingConfig)

    def __post_init__(self):
        if not 0.0 < self.split_fraction < 1.0:
            raise ConfigError(f"split_fraction must be in (0, 1), got {self.split_fraction}")
        self.hyperparams.validate()
        self.architecture.validate()

    def to_dict(self) -> dict:
        return {
            "architecture": self.architecture.to_dict(),
            "hyperparams": self.hyperparams.to_dict(),
            "split_fraction": self.split_fraction,
            "seed": self.seed,
            "early_stopping": self.early_stopping.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {"architecture", "hyperparams", "split_fraction", "seed", "early_stopping"}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown run config keys: {sorted(extra)}")
        base = default_run_config()
        return cls(
            architecture=ArchitectureSpec.from_dict(d["architecture"]) if "architecture" in d else base.architecture,
            hyperparams=Hyperparams.from_dict(d["hyperparams"]) if "hyperparams" in d else base.hyperparams,
            split_fraction=float(d.get("split_fraction", base.split_fraction)),
            seed=int(d.get("seed", base.seed)),
            early_stopping=(
                EarlyStoppingConfig.from_dict(d["early_stopping"]) if "early_stopping" in d else base.early_stopping
            ),
        )

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_file(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    def with_hyperparams(self, **updates) -> "RunConfig":
        return replace(self, hyperparams=replace(self.hyperparams, **updates).validate())


def default_run_config() -> RunConfig:
    """The shipped defaults: default architecture and training knobs."""
    return RunConfig(architecture=default_architecture(), hyperparams=Hyperparams())


def _merge_dicts(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge_dicts(out[key], value)
        else:
            out[key] = value
    return out


def _parse_override_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(config_dict: dict, overrides) -> dict:
    """Apply ``dotted.path=value`` strings on top of a config dict.

    Values parse as JSON when possible ("0.01" -> 0.01, "true" -> True),
    otherwise stay strings.
    """
    out = json.loads(json.dumps(config_dict))  # deep copy
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        dotted, _, raw = item.partition("=")
        keys = dotted.split(".")
        target = out
        for key in keys[:-1]:
            if not isinstance(target.get(key), dict):
                target[key] = {}
            target = target[key]
        target[keys[-1]] = _parse_override_value(raw)
    return out


def resolve_run_config(config_path=None, overrides=None) -> RunConfig:
    """defaults < file < overrides, returned as a validated RunConfig."""
    resolved = default_run_config().to_dict()
    if config_path is not None:
        with open(config_path, encoding="utf-8") as fh:
            try:
                file_dict = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{config_path}: invalid JSON: {exc}") from exc
        resolved = _merge_dicts(resolved, file_dict)
    resolved = apply_overrides(resolved, overrides)
    return RunConfig.from_dict(resolved)
