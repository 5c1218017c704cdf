"""Forward and backward kernels for the layers the classifier is built from.

All kernels are plain functions over numpy arrays. Images and activations use
channels-last layout: a single image is (H, W, C) and a batch is (N, H, W, C).
Convolution weights are (KH, KW, C_in, C_out); dense weights are (D_in, D_out).

Kernels compute in the dtype of their inputs. Training runs them in float32;
the gradient-check harness runs the identical code in float64.

Convolutions are "valid" (no padding): output side = input side - kernel
side + 1 for stride 1, and (input - kernel) // stride + 1 in general.
"""

import numpy as np

from wellqc.errors import LabelError, ShapeError


def _as_batch(x, rank):
    """Add a leading batch axis if ``x`` is a single example of rank-1 lower.

    Returns (batched array, had_batch_axis).
    """
    x = np.asarray(x)
    if x.ndim == rank:
        return x, True
    if x.ndim == rank - 1:
        return x[None, ...], False
    raise ShapeError(f"expected a rank-{rank - 1} or rank-{rank} array, got shape {x.shape}")


def _unbatch(y, had_batch):
    return y if had_batch else y[0]


# ---------------------------------------------------------------------------
# convolution
# ---------------------------------------------------------------------------

def conv_output_hw(h, w, kh, kw, stride):
    if kh > h or kw > w:
        raise ShapeError(f"kernel {kh}x{kw} exceeds input {h}x{w}")
    if stride < 1:
        raise ShapeError(f"stride must be >= 1, got {stride}")
    return (h - kh) // stride + 1, (w - kw) // stride + 1


def _im2col(x, kh, kw, stride):
    """Gather sliding windows of ``x`` (N,H,W,C) into (N, OH, OW, KH*KW*C).

    The last axis is ordered (dy, dx, c) row-major, matching the flattening
    of a (KH, KW, C_in, C_out) weight tensor into (KH*KW*C_in, C_out).
    """
    n, h, w, c = x.shape
    oh, ow = conv_output_hw(h, w, kh, kw, stride)
    cols = np.empty((n, oh, ow, kh, kw, c), dtype=x.dtype)
    for dy in range(kh):
        ylim = dy + (oh - 1) * stride + 1
        for dx in range(kw):
            xlim = dx + (ow - 1) * stride + 1
            cols[:, :, :, dy, dx, :] = x[:, dy:ylim:stride, dx:xlim:stride, :]
    return cols.reshape(n, oh, ow, kh * kw * c)


def _col2im(gcols, input_shape, kh, kw, stride):
    """Scatter-add window gradients (N, OH, OW, KH*KW*C) back onto the input."""
    n, h, w, c = input_shape
    oh, ow = conv_output_hw(h, w, kh, kw, stride)
    gcols = gcols.reshape(n, oh, ow, kh, kw, c)
    gx = np.zeros(input_shape, dtype=gcols.dtype)
    for dy in range(kh):
        ylim = dy + (oh - 1) * stride + 1
        for dx in range(kw):
            xlim = dx + (ow - 1) * stride + 1
            gx[:, dy:ylim:stride, dx:xlim:stride, :] += gcols[:, :, :, dy, dx, :]
    return gx


def conv2d_forward(x, weights, bias, stride=1):
    """Valid (unpadded) 2-D convolution.

    out[y, x, o] = bias[o] + sum_{dy,dx,c} in[y*s+dy, x*s+dx, c] * w[dy,dx,c,o]

    ``x`` is (H, W, C) or (N, H, W, C); the result has matching rank.
    """
    x, had_batch = _as_batch(x, 4)
    weights = np.asarray(weights)
    bias = np.asarray(bias)
    if weights.ndim != 4:
        raise ShapeError(f"conv weights must be (KH, KW, C_in, C_out), got shape {weights.shape}")
    kh, kw, cin, cout = weights.shape
    if x.shape[3] != cin:
        raise ShapeError(f"input has {x.shape[3]} channels but weights expect {cin}")
    if bias.shape != (cout,):
        raise ShapeError(f"bias must have shape ({cout},), got {bias.shape}")
    n = x.shape[0]
    oh, ow = conv_output_hw(x.shape[1], x.shape[2], kh, kw, stride)
    cols = _im2col(x, kh, kw, stride)
    out = cols.reshape(-1, kh * kw * cin) @ weights.reshape(kh * kw * cin, cout)
    out = out.reshape(n, oh, ow, cout) + bias
    return _unbatch(out.astype(x.dtype, copy=False), had_batch)


def conv2d_backward(grad_out, cached_input, weights, stride=1):
    """Gradients of conv2d_forward: (grad_input, grad_weights, grad_bias)."""
    x, had_batch = _as_batch(cached_input, 4)
    g, g_had_batch = _as_batch(grad_out, 4)
    if had_batch != g_had_batch or g.shape[0] != x.shape[0]:
        raise ShapeError(f"grad batch {g.shape} inconsistent with input batch {x.shape}")
    weights = np.asarray(weights)
    kh, kw, cin, cout = weights.shape
    oh, ow = conv_output_hw(x.shape[1], x.shape[2], kh, kw, stride)
    if g.shape[1:] != (oh, ow, cout):
        raise ShapeError(f"grad_out shape {g.shape[1:]} does not match forward output ({oh}, {ow}, {cout})")

    gb = g.sum(axis=(0, 1, 2))
    cols = _im2col(x, kh, kw, stride)
    gflat = g.reshape(-1, cout)
    gw = cols.reshape(-1, kh * kw * cin).T @ gflat
    gcols = gflat @ weights.reshape(kh * kw * cin, cout).T
    gx = _col2im(gcols.reshape(x.shape[0], oh, ow, -1), x.shape, kh, kw, stride)
    return _unbatch(gx, had_batch), gw.reshape(weights.shape), gb


# ---------------------------------------------------------------------------
# max pooling
# ---------------------------------------------------------------------------

def _pool_windows(x, window, stride):
    """Gather pooling windows into (N, OH, OW, window*window, C)."""
    n, h, w, c = x.shape
    oh, ow = conv_output_hw(h, w, window, window, stride)
    wins = np.empty((n, oh, ow, window, window, c), dtype=x.dtype)
    for dy in range(window):
        ylim = dy + (oh - 1) * stride + 1
        for dx in range(window):
            xlim = dx + (ow - 1) * stride + 1
            wins[:, :, :, dy, dx, :] = x[:, dy:ylim:stride, dx:xlim:stride, :]
    return wins.reshape(n, oh, ow, window * window, c)


def maxpool2d_forward(x, window, stride=None):
    """Max pooling; returns (output, argmax_indices).

    Argmax indices are positions within each window flattened row-major, so
    ties resolve to the first maximum in row-major scan order, which makes the
    backward pass deterministic.
    """
    if stride is None:
        stride = window
    x, had_batch = _as_batch(x, 4)
    wins = _pool_windows(x, window, stride)
    arg = wins.argmax(axis=3)
    out = np.take_along_axis(wins, arg[:, :, :, None, :], axis=3)[:, :, :, 0, :]
    return _unbatch(out, had_batch), _unbatch(arg, had_batch)


def maxpool2d_backward(grad_out, argmax, input_shape, window, stride=None):
    """Route each output gradient to the input cell that produced the max."""
    if stride is None:
        stride = window
    g, had_batch = _as_batch(grad_out, 4)
    arg, _ = _as_batch(argmax, 4)
    if not had_batch:
        input_shape = (1,) + tuple(input_shape)
    n, h, w, c = input_shape
    oh, ow = conv_output_hw(h, w, window, window, stride)
    gwin = np.zeros((n, oh, ow, window * window, c), dtype=g.dtype)
    np.put_along_axis(gwin, arg[:, :, :, None, :], g[:, :, :, None, :], axis=3)
    gwin = gwin.reshape(n, oh, ow, window, window, c)
    gx = np.zeros(input_shape, dtype=g.dtype)
    for dy in range(window):
        ylim = dy + (oh - 1) * stride + 1
        for dx in range(window):
            xlim = dx + (ow - 1) * stride + 1
            gx[:, dy:ylim:stride, dx:xlim:stride, :] += gwin[:, :, :, dy, dx, :]
    return gx if had_batch else gx[0]


# ---------------------------------------------------------------------------
# elementwise / shape layers
# ---------------------------------------------------------------------------

def relu(x):
    return np.maximum(np.asarray(x), 0)


def relu_backward(grad_out, cached_input):
    return grad_out * (np.asarray(cached_input) > 0)


def flatten(x, batched=False):
    """Flatten to a vector (row-major); keeps the batch axis when ``batched``."""
    x = np.asarray(x)
    return x.reshape(x.shape[0], -1) if batched else x.reshape(-1)


def flatten_backward(grad_out, input_shape):
    return np.asarray(grad_out).reshape(input_shape)


def dense_forward(x, weights, bias):
    """Affine map: out = x @ W + b with W of shape (D_in, D_out)."""
    x, had_batch = _as_batch(x, 2)
    weights = np.asarray(weights)
    bias = np.asarray(bias)
    if weights.ndim != 2 or x.shape[1] != weights.shape[0]:
        raise ShapeError(f"dense input of width {x.shape[1]} does not match weights {weights.shape}")
    if bias.shape != (weights.shape[1],):
        raise ShapeError(f"dense bias must have shape ({weights.shape[1]},), got {bias.shape}")
    return _unbatch(x @ weights + bias, had_batch)


def dense_backward(grad_out, cached_input, weights):
    """Gradients of dense_forward: (grad_input, grad_weights, grad_bias)."""
    x, had_batch = _as_batch(cached_input, 2)
    g, _ = _as_batch(grad_out, 2)
    gw = x.T @ g
    gb = g.sum(axis=0)
    gx = g @ np.asarray(weights).T
    return _unbatch(gx, had_batch), gw, gb


def dropout_forward(x, rate, rng, mode):
    """Inverted dropout; returns (output, mask).

    Train mode zeroes each element with probability ``rate`` and scales the
    survivors by 1/(1-rate) so inference is the identity. Infer mode (and rate
    0) returns the input unchanged with mask None.
    """
    x = np.asarray(x)
    if mode == "infer" or rate == 0.0:
        return x, None
    if rng is None:
        raise ValueError("dropout in train mode requires the run's generator")
    mask = rng.random(x.shape) >= rate
    scale = x.dtype.type(1.0 / (1.0 - rate))
    return x * mask * scale, mask


def dropout_backward(grad_out, mask, rate):
    if mask is None:
        return grad_out
    scale = grad_out.dtype.type(1.0 / (1.0 - rate))
    return grad_out * mask * scale


# ---------------------------------------------------------------------------
# softmax and loss
# ---------------------------------------------------------------------------

def softmax(logits):
    """Max-shifted softmax: p_i = exp(z_i - max z) / sum_j exp(z_j - max z)."""
    z, had_batch = _as_batch(logits, 2)
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return _unbatch(e / e.sum(axis=1, keepdims=True), had_batch)


def log_softmax(logits):
    """log p in the fused form z - max - log(sum exp(z - max))."""
    z, had_batch = _as_batch(logits, 2)
    shifted = z - z.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    return _unbatch(shifted - lse, had_batch)


def _check_labels(labels, num_classes):
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        bad = labels[(labels < 0) | (labels >= num_classes)][0]
        raise LabelError(f"label {bad} outside [0, {num_classes})")
    return labels


def sparse_ce_loss(probabilities, labels):
    """Mean -ln p(true class) over the batch, from softmax probabilities."""
    p, had_batch = _as_batch(probabilities, 2)
    labels = np.atleast_1d(_check_labels(labels, p.shape[1]))
    return float(-np.log(p[np.arange(p.shape[0]), labels]).mean())


def sparse_ce_from_log_probs(log_probs, labels):
    """Mean -log p(true class) from log-softmax output (the fused path)."""
    lp, had_batch = _as_batch(log_probs, 2)
    labels = np.atleast_1d(_check_labels(labels, lp.shape[1]))
    return float(-lp[np.arange(lp.shape[0]), labels].mean())


def sparse_ce_grad_logits(probabilities, labels):
    """Gradient of the mean loss w.r.t. the logits: (p - onehot) / N."""
    p, had_batch = _as_batch(probabilities, 2)
    labels = np.atleast_1d(_check_labels(labels, p.shape[1]))
    g = p.copy()
    g[np.arange(p.shape[0]), labels] -= 1
    g /= p.shape[0]
    return _unbatch(g, had_batch)


# ---------------------------------------------------------------------------
# initialization
# ---------------------------------------------------------------------------

def he_uniform(shape, fan_in, rng, dtype):
    """He-uniform draw: U(-sqrt(6/fan_in), +sqrt(6/fan_in))."""
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape).astype(dtype)
