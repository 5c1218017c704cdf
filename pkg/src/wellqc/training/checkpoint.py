"""Versioned checkpoint container.

Byte layout (documented for cross-implementation compatibility):

    line 1:  ASCII "WELLQC-CKPT v1 <header_bytes>\\n"
    header:  exactly <header_bytes> bytes of UTF-8 JSON with sorted keys:
             architecture, best_epoch, format_version, history, hyperparams,
             params (an ordered list of {"name", "shape"})
    blocks:  for each params entry in listed order, the tensor's values as
             raw little-endian 32-bit floats in row-major (C) order

Weights round-trip bit-exactly, so a loaded checkpoint predicts identically
to the in-memory model it was saved from.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from wellqc.errors import FormatError
from wellqc.nn.arch import ArchitectureSpec
from wellqc.nn.model import INFER, Model, _layer_names
from wellqc.optim import Hyperparams

CHECKPOINT_VERSION = 1
_MAGIC = "WELLQC-CKPT"


@dataclass
class Checkpoint:
    spec: ArchitectureSpec
    params: dict[str, np.ndarray]  # float32
    hyperparams: Hyperparams
    history: list = field(default_factory=list)
    best_epoch: int = 0
    version: int = CHECKPOINT_VERSION

    def to_model(self, mode: str = INFER) -> Model:
        return Model(
            spec=self.spec,
            params={k: v.copy() for k, v in self.params.items()},
            mode=mode,
            layer_names=_layer_names(self.spec),
        )

    def save(self, path) -> None:
        from wellqc.training.loop import EpochRecord  # local: avoid import cycle

        header = {
            "format_version": self.version,
            "architecture": self.spec.to_dict(),
            "hyperparams": self.hyperparams.to_dict(),
            "history": [
                r.to_dict() if isinstance(r, EpochRecord) else dict(r) for r in self.history
            ],
            "best_epoch": self.best_epoch,
            "params": [
                {"name": name, "shape": list(self.params[name].shape)} for name in self.params
            ],
        }
        header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(f"{_MAGIC} v{self.version} {len(header_bytes)}\n".encode("ascii"))
            fh.write(header_bytes)
            for name in self.params:
                fh.write(np.ascontiguousarray(self.params[name], dtype="<f4").tobytes())

    @classmethod
    def load(cls, path) -> "Checkpoint":
        from wellqc.training.loop import EpochRecord

        data = Path(path).read_bytes()
        nl = data.find(b"\n")
        if nl < 0:
            raise FormatError(f"{path}: missing checkpoint magic line", offset=0)
        parts = data[:nl].decode("ascii", errors="replace").split()
        if len(parts) != 3 or parts[0] != _MAGIC:
            raise FormatError(f"{path}: bad magic line {data[:nl]!r}", offset=0)
        if parts[1] != f"v{CHECKPOINT_VERSION}":
            raise FormatError(f"{path}: unsupported checkpoint version {parts[1]}")
        try:
            header_len = int(parts[2])
        except ValueError:
            raise FormatError(f"{path}: bad header length {parts[2]!r}", offset=0) from None

        header_start = nl + 1
        header_bytes = data[header_start : header_start + header_len]
        if len(header_bytes) < header_len:
            raise FormatError(f"{path}: truncated header", offset=header_start + len(header_bytes))
        try:
            header = json.loads(header_bytes.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise FormatError(f"{path}: invalid header JSON: {exc}", offset=header_start) from None

        spec = ArchitectureSpec.from_dict(header["architecture"])
        hyperparams = Hyperparams.from_dict(header["hyperparams"])
        history = [EpochRecord.from_dict(r) for r in header.get("history", [])]

        params: dict[str, np.ndarray] = {}
        offset = header_start + header_len
        for entry in header["params"]:
            shape = tuple(int(d) for d in entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            nbytes = count * 4
            block = data[offset : offset + nbytes]
            if len(block) < nbytes:
                raise FormatError(
                    f"{path}: truncated weight block for {entry['name']}",
                    offset=offset + len(block),
                )
            params[entry["name"]] = (
                np.frombuffer(block, dtype="<f4").reshape(shape).astype(np.float32)
            )
            offset += nbytes
        if offset != len(data):
            raise FormatError(f"{path}: {len(data) - offset} trailing bytes", offset=offset)

        return cls(
            spec=spec,
            params=params,
            hyperparams=hyperparams,
            history=history,
            best_epoch=int(header.get("best_epoch", 0)),
            version=int(header["format_version"]),
        )
