"""Architecture spec validation and shape inference."""

import pytest

from wellqc.errors import ConfigError, ShapeError
from wellqc.nn.arch import (
    ArchitectureSpec,
    LayerSpec,
    default_architecture,
    infer_shapes,
    logistic_architecture,
)


class TestInferShapes:
    def test_conv_relu_pool_chain(self):
        spec = ArchitectureSpec(
            input_shape=(111, 111, 1),
            layers=(
                LayerSpec("Conv2D", out_channels=8, kernel_size=3, stride=1),
                LayerSpec("ReLU"),
                LayerSpec("MaxPool2D", window=2, stride=2),
                LayerSpec("Flatten"),
                LayerSpec("Dense", units=2),
                LayerSpec("Softmax"),
            ),
        )
        shapes = infer_shapes(spec)
        assert shapes[:3] == [(109, 109, 8), (109, 109, 8), (54, 54, 8)]

    def test_flatten_dense_softmax(self):
        spec = ArchitectureSpec(
            input_shape=(4, 4, 1),
            layers=(LayerSpec("Flatten"), LayerSpec("Dense", units=2), LayerSpec("Softmax")),
        )
        assert infer_shapes(spec) == [(16,), (2,), (2,)]

    def test_pool_window_exceeding_input_names_layer(self):
        spec = ArchitectureSpec(
            input_shape=(2, 2, 1),
            layers=(LayerSpec("MaxPool2D", window=3, stride=1),),
        )
        with pytest.raises(ShapeError, match="layer 0 .MaxPool2D."):
            infer_shapes(spec)

    def test_dense_on_unflattened_input_raises(self):
        spec = ArchitectureSpec(
            input_shape=(4, 4, 1),
            layers=(LayerSpec("Dense", units=2), LayerSpec("Softmax")),
        )
        with pytest.raises(ShapeError, match="layer 0 .Dense."):
            infer_shapes(spec)

    def test_conv_kernel_too_large_names_layer(self):
        spec = ArchitectureSpec(
            input_shape=(4, 4, 1),
            layers=(LayerSpec("Conv2D", out_channels=1, kernel_size=5),),
        )
        with pytest.raises(ShapeError, match="layer 0 .Conv2D."):
            infer_shapes(spec)


class TestArchitectureSpec:
    def test_default_architecture_validates(self):
        arch = default_architecture()
        shapes = arch.validate()
        assert shapes[-1] == (2,)
        assert arch.layer_count() == len(arch.layers)

    def test_default_dense_width_is_editable(self):
        arch = default_architecture(dense_units=64)
        dense = [l for l in arch.layers if l.kind == "Dense"]
        assert dense[0].units == 64

    def test_logistic_architecture_is_flat_affine_softmax(self):
        arch = logistic_architecture()
        assert [l.kind for l in arch.layers] == ["Flatten", "Dense", "Softmax"]
        assert arch.validate() == [(12321,), (2,), (2,)]

    def test_missing_softmax_tail_rejected(self):
        spec = ArchitectureSpec(
            input_shape=(4, 4, 1),
            layers=(LayerSpec("Flatten"), LayerSpec("Dense", units=2)),
        )
        with pytest.raises(ShapeError):
            spec.validate()

    def test_head_width_must_match_num_classes(self):
        spec = ArchitectureSpec(
            input_shape=(4, 4, 1),
            num_classes=2,
            layers=(LayerSpec("Flatten"), LayerSpec("Dense", units=3), LayerSpec("Softmax")),
        )
        with pytest.raises(ShapeError):
            spec.validate()

    def test_round_trip_through_dict(self):
        arch = default_architecture()
        assert ArchitectureSpec.from_dict(arch.to_dict()) == arch

    def test_file_round_trip(self, tmp_path):
        arch = default_architecture()
        arch.to_file(tmp_path / "arch.json")
        assert ArchitectureSpec.from_file(tmp_path / "arch.json") == arch


class TestLayerSpecValidation:
    def test_unknown_kind_rejected(self):
        with pytest.raises(ConfigError):
            LayerSpec("BatchNorm")

    def test_missing_required_param_rejected(self):
        with pytest.raises(ConfigError):
            LayerSpec("Conv2D", out_channels=8)

    def test_dropout_rate_range(self):
        with pytest.raises(ConfigError):
            LayerSpec("Dropout", rate=1.0)
        LayerSpec("Dropout", rate=0.0)  # boundary is allowed

    def test_pool_default_stride_is_window(self):
        layer = LayerSpec("MaxPool2D", window=3)
        assert layer.effective_stride == 3

    def test_conv_default_stride_is_one(self):
        layer = LayerSpec("Conv2D", out_channels=4, kernel_size=3)
        assert layer.effective_stride == 1

    def test_dict_round_trip_drops_unset_fields(self):
        layer = LayerSpec("Dense", units=48)
        assert layer.to_dict() == {"kind": "Dense", "units": 48}
        assert LayerSpec.from_dict(layer.to_dict()) == layer
