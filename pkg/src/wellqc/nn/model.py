"""Sequential model assembled from an ArchitectureSpec.

The model owns a flat named parameter collection (keys like "conv1.W",
"dense2.b"); layers themselves are stateless. Forward passes return an
explicit cache instead of storing activations on the model, so a frozen model
can evaluate disjoint batches concurrently. Parameters are only ever mutated
by the optimizer.
"""

from dataclasses import dataclass, field

import numpy as np

from wellqc.errors import ShapeError
from wellqc.nn import ops
from wellqc.nn.arch import ArchitectureSpec, infer_shapes

TRAIN = "train"
INFER = "infer"


def _layer_names(spec: ArchitectureSpec) -> list[str]:
    counts: dict[str, int] = {}
    short = {
        "Conv2D": "conv",
        "ReLU": "relu",
        "MaxPool2D": "pool",
        "Flatten": "flatten",
        "Dense": "dense",
        "Dropout": "dropout",
        "Softmax": "softmax",
    }
    names = []
    for layer in spec.layers:
        base = short[layer.kind]
        counts[base] = counts.get(base, 0) + 1
        names.append(f"{base}{counts[base]}")
    return names


@dataclass
class Model:
    spec: ArchitectureSpec
    params: dict[str, np.ndarray]
    mode: str = INFER
    layer_names: list[str] = field(default_factory=list)

    @property
    def dtype(self):
        for value in self.params.values():
            return value.dtype
        return np.dtype(np.float32)

    def weight_keys(self) -> list[str]:
        """Names of weight tensors (the ".W" entries; biases are ".b")."""
        return [k for k in self.params if k.endswith(".W")]

    def regularized_keys(self) -> list[str]:
        """Weight tensors the L2 penalty covers: dense layers only.

        Conv filters are shared across every spatial position, so a decay
        term sized against their per-position magnitude overwhelms them;
        the dense weights carry nearly all parameters and are where the
        penalty meaningfully constrains capacity.
        """
        return [k for k in self.params if k.startswith("dense") and k.endswith(".W")]

    def param_count(self) -> int:
        return sum(int(v.size) for v in self.params.values())

    def clone(self) -> "Model":
        return Model(
            spec=self.spec,
            params={k: v.copy() for k, v in self.params.items()},
            mode=self.mode,
            layer_names=list(self.layer_names),
        )

    def astype(self, dtype) -> "Model":
        return Model(
            spec=self.spec,
            params={k: v.astype(dtype) for k, v in self.params.items()},
            mode=self.mode,
            layer_names=list(self.layer_names),
        )


def init_model(spec: ArchitectureSpec, rng, dtype=np.float32, mode: str = TRAIN) -> Model:
    """He-uniform weights and zero biases, drawn in layer order from ``rng``."""
    shapes = spec.validate()
    names = _layer_names(spec)
    params: dict[str, np.ndarray] = {}
    in_shape = spec.input_shape
    for layer, name, out_shape in zip(spec.layers, names, shapes):
        if layer.kind == "Conv2D":
            k, cin, cout = layer.kernel_size, in_shape[2], layer.out_channels
            fan_in = k * k * cin
            params[f"{name}.W"] = ops.he_uniform((k, k, cin, cout), fan_in, rng, dtype)
            params[f"{name}.b"] = np.zeros(cout, dtype=dtype)
        elif layer.kind == "Dense":
            din, dout = in_shape[0], layer.units
            params[f"{name}.W"] = ops.he_uniform((din, dout), din, rng, dtype)
            params[f"{name}.b"] = np.zeros(dout, dtype=dtype)
        in_shape = out_shape
    return Model(spec=spec, params=params, mode=mode, layer_names=names)


def _check_batch(model: Model, batch) -> np.ndarray:
    batch = np.asarray(batch)
    if batch.ndim == 3:
        batch = batch[None, ...]
    if batch.ndim != 4 or batch.shape[1:] != tuple(model.spec.input_shape):
        raise ShapeError(
            f"batch shape {batch.shape} does not match input shape {model.spec.input_shape}"
        )
    return batch


def model_forward(model: Model, batch, rng=None):
    """Run the batch through every layer; returns (probabilities, cache).

    ``cache`` holds per-layer values needed by model_backward. In train mode
    dropout draws its masks from ``rng``; in infer mode the pass is a pure
    deterministic function of (model, batch).
    """
    x = _check_batch(model, batch).astype(model.dtype, copy=False)
    cache = []
    for layer, name in zip(model.spec.layers, model.layer_names):
        kind = layer.kind
        if kind == "Conv2D":
            w, b = model.params[f"{name}.W"], model.params[f"{name}.b"]
            out = ops.conv2d_forward(x, w, b, layer.effective_stride)
            cache.append((x,))
        elif kind == "ReLU":
            out = ops.relu(x)
            cache.append((x,))
        elif kind == "MaxPool2D":
            out, arg = ops.maxpool2d_forward(x, layer.window, layer.effective_stride)
            cache.append((x.shape, arg))
        elif kind == "Flatten":
            out = ops.flatten(x, batched=True)
            cache.append((x.shape,))
        elif kind == "Dense":
            w, b = model.params[f"{name}.W"], model.params[f"{name}.b"]
            out = ops.dense_forward(x, w, b)
            cache.append((x,))
        elif kind == "Dropout":
            out, mask = ops.dropout_forward(x, layer.rate, rng, model.mode)
            cache.append((mask,))
        elif kind == "Softmax":
            log_probs = ops.log_softmax(x)
            out = ops.softmax(x)
            cache.append((out, log_probs))
        x = out
    return x, cache


def model_loss(cache, labels) -> float:
    """Mean cross-entropy from the cached fused log-softmax values."""
    _, log_probs = cache[-1]
    return ops.sparse_ce_from_log_probs(log_probs, labels)


def model_backward(model: Model, cache, labels) -> dict[str, np.ndarray]:
    """Gradient of the mean cross-entropy loss w.r.t. every parameter.

    The softmax layer and the loss differentiate jointly: the walk starts from
    (p - onehot)/N at the logits and visits the remaining layers in reverse.
    """
    if model.spec.layers[-1].kind != "Softmax":
        raise ShapeError("model must end with a Softmax layer")
    probs, _ = cache[-1]
    grads: dict[str, np.ndarray] = {}
    g = ops.sparse_ce_grad_logits(probs, labels)
    for idx in range(len(model.spec.layers) - 2, -1, -1):
        layer = model.spec.layers[idx]
        name = model.layer_names[idx]
        kind = layer.kind
        if kind == "Conv2D":
            (x,) = cache[idx]
            w = model.params[f"{name}.W"]
            g, gw, gb = ops.conv2d_backward(g, x, w, layer.effective_stride)
            grads[f"{name}.W"] = gw
            grads[f"{name}.b"] = gb
        elif kind == "ReLU":
            (x,) = cache[idx]
            g = ops.relu_backward(g, x)
        elif kind == "MaxPool2D":
            in_shape, arg = cache[idx]
            g = ops.maxpool2d_backward(g, arg, in_shape, layer.window, layer.effective_stride)
        elif kind == "Flatten":
            (in_shape,) = cache[idx]
            g = ops.flatten_backward(g, in_shape)
        elif kind == "Dense":
            (x,) = cache[idx]
            w = model.params[f"{name}.W"]
            g, gw, gb = ops.dense_backward(g, x, w)
            grads[f"{name}.W"] = gw
            grads[f"{name}.b"] = gb
        elif kind == "Dropout":
            (mask,) = cache[idx]
            g = ops.dropout_backward(g, mask, layer.rate)
    return grads


def predict_probs(model: Model, images, batch_size: int = 64) -> np.ndarray:
    """Class probabilities for a stack of images, evaluated in infer mode."""
    images = np.asarray(images)
    if images.ndim == 3:
        images = images[None, ...]
    frozen = model if model.mode == INFER else Model(model.spec, model.params, INFER, model.layer_names)
    chunks = []
    for start in range(0, images.shape[0], batch_size):
        probs, _ = model_forward(frozen, images[start : start + batch_size])
        chunks.append(probs)
    return np.concatenate(chunks, axis=0)
