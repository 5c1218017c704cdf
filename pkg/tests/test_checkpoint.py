"""Checkpoint container: byte layout, round trips, bit-exact predictions."""

import json
from dataclasses import replace

import numpy as np
import numpy.testing as npt
import pytest

from wellqc.errors import FormatError
from wellqc.nn.model import init_model, predict_probs
from wellqc.optim import Hyperparams
from wellqc.training.checkpoint import Checkpoint
from wellqc.training.loop import EpochRecord

from tests.test_model import toy_spec


def toy_checkpoint(seed=0):
    model = init_model(toy_spec(), np.random.default_rng(seed))
    history = [
        EpochRecord(epoch=1, train_loss=1.2, train_ce=1.0, train_accuracy=0.6,
                    val_loss=0.9, val_accuracy=0.7),
        EpochRecord(epoch=2, train_loss=1.0, train_ce=0.8, train_accuracy=0.7,
                    val_loss=0.8, val_accuracy=0.8),
    ]
    return Checkpoint(
        spec=toy_spec(), params=model.params, hyperparams=Hyperparams(),
        history=history, best_epoch=2,
    )


class TestRoundTrip:
    def test_load_save_preserves_everything(self, tmp_path):
        ckpt = toy_checkpoint()
        path = tmp_path / "model.bin"
        ckpt.save(path)
        loaded = Checkpoint.load(path)
        assert loaded.spec == ckpt.spec
        assert loaded.hyperparams == ckpt.hyperparams
        assert loaded.best_epoch == 2
        assert loaded.history == ckpt.history
        for key in ckpt.params:
            npt.assert_array_equal(loaded.params[key], ckpt.params[key])
            assert loaded.params[key].dtype == np.float32

    def test_predictions_bit_identical_after_reload(self, tmp_path):
        ckpt = toy_checkpoint(seed=1)
        path = tmp_path / "model.bin"
        ckpt.save(path)
        loaded = Checkpoint.load(path)
        rng = np.random.default_rng(2)
        images = rng.random((20, 12, 12, 1), dtype=np.float32)
        npt.assert_array_equal(
            predict_probs(ckpt.to_model(), images), predict_probs(loaded.to_model(), images)
        )

    def test_save_is_byte_deterministic(self, tmp_path):
        ckpt = toy_checkpoint(seed=3)
        a, b = tmp_path / "a.bin", tmp_path / "b.bin"
        ckpt.save(a)
        ckpt.save(b)
        assert a.read_bytes() == b.read_bytes()

    def test_weights_stored_as_le_float32_blocks(self, tmp_path):
        ckpt = toy_checkpoint(seed=4)
        path = tmp_path / "model.bin"
        ckpt.save(path)
        data = path.read_bytes()
        nl = data.find(b"\n")
        magic = data[:nl].split()
        assert magic[0] == b"WELLQC-CKPT" and magic[1] == b"v1"
        header_len = int(magic[2])
        header = json.loads(data[nl + 1 : nl + 1 + header_len])
        blob = data[nl + 1 + header_len :]
        expected = sum(int(np.prod(p["shape"])) for p in header["params"]) * 4
        assert len(blob) == expected
        first = header["params"][0]
        count = int(np.prod(first["shape"]))
        block = np.frombuffer(blob[: count * 4], dtype="<f4").reshape(first["shape"])
        npt.assert_array_equal(block, ckpt.params[first["name"]])


class TestMalformed:
    def test_truncated_weights_detected(self, tmp_path):
        ckpt = toy_checkpoint()
        path = tmp_path / "model.bin"
        ckpt.save(path)
        data = path.read_bytes()
        (tmp_path / "cut.bin").write_bytes(data[:-8])
        with pytest.raises(FormatError, match="truncated"):
            Checkpoint.load(tmp_path / "cut.bin")

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"not a checkpoint\n")
        with pytest.raises(FormatError):
            Checkpoint.load(path)

    def test_trailing_garbage_detected(self, tmp_path):
        ckpt = toy_checkpoint()
        path = tmp_path / "model.bin"
        ckpt.save(path)
        (tmp_path / "extra.bin").write_bytes(path.read_bytes() + b"xx")
        with pytest.raises(FormatError, match="trailing"):
            Checkpoint.load(tmp_path / "extra.bin")
