"""Forward and reverse-mode kernels on rank-4 tensors.

A tensor here is a plain numpy floating array of shape
(batch, channels, height, width), row-major with batch outermost.  Network
math runs in float32; every kernel preserves the dtype of its inputs so the
finite-difference checker can drive the same code in float64.

Each forward kernel has a reverse-mode counterpart that maps the upstream
gradient to gradients w.r.t. its inputs.  All kernels are pure functions:
reductions happen in a fixed order (numpy vectorization), so results do not
depend on thread count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DomainError, NumericError, ShapeError


@dataclass(frozen=True)
class ConvParams:
    """One layer's learnable tensors.

    weights: (out_channels, in_channels, kh, kw) for conv2d,
             (in_channels, out_channels, 2, 2) for upconv2.
    bias:    (out_channels,)
    """

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        if self.weights.ndim != 4:
            raise ShapeError(f"weights must be rank 4, got shape {self.weights.shape}")
        if self.bias.ndim != 1:
            raise ShapeError(f"bias must be rank 1, got shape {self.bias.shape}")


def _check_tensor4(x: np.ndarray, name: str = "input") -> None:
    if not isinstance(x, np.ndarray) or x.ndim != 4:
        raise ShapeError(f"{name} must be a rank-4 array (n, c, h, w), got "
                         f"{getattr(x, 'shape', type(x).__name__)}")
    if min(x.shape) < 1:
        raise ShapeError(f"{name} has an empty dimension: {x.shape}")


def _im2col(padded: np.ndarray, kh: int, kw: int) -> np.ndarray:
    """Window-extract a padded (n, c, H, W) array into (n*h*w, c*kh*kw)."""
    win = sliding_window_view(padded, (kh, kw), axis=(2, 3))  # (n, c, h, w, kh, kw)
    n, c, h, w = win.shape[:4]
    return win.transpose(0, 2, 3, 1, 4, 5).reshape(n * h * w, c * kh * kw)


def _conv_same(x: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Stride-1 cross-correlation with zero same-padding, no bias."""
    n, c, h, w = x.shape
    oc, ic, kh, kw = weights.shape
    ph, pw = (kh - 1) // 2, (kw - 1) // 2
    padded = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    cols = _im2col(padded, kh, kw)
    out = cols @ weights.reshape(oc, ic * kh * kw).T
    return out.reshape(n, h, w, oc).transpose(0, 3, 1, 2)


def conv2d(x: np.ndarray, p: ConvParams) -> np.ndarray:
    """3x3 / 1x1 convolution, stride 1, zero same-padding.

    Output spatial size equals input spatial size; each output pixel is the
    kernel dotted with the zero-padded input window, plus the channel bias.
    """
    _check_tensor4(x)
    oc, ic, kh, kw = p.weights.shape
    if x.shape[1] != ic:
        raise ShapeError(f"conv2d channel mismatch: input {x.shape} expects "
                         f"{ic} channels for kernel {p.weights.shape}")
    if kh % 2 == 0 or kw % 2 == 0:
        raise ShapeError(f"conv2d needs odd kernel sides for same-padding, got {(kh, kw)}")
    return _conv_same(x, p.weights) + p.bias[None, :, None, None]


def conv2d_backward(x: np.ndarray, p: ConvParams, grad_out: np.ndarray):
    """Gradients of conv2d w.r.t. (input, weights, bias)."""
    n, c, h, w = x.shape
    oc, ic, kh, kw = p.weights.shape
    if grad_out.shape != (n, oc, h, w):
        raise ShapeError(f"conv2d upstream gradient {grad_out.shape} does not match "
                         f"output shape {(n, oc, h, w)}")
    ph, pw = (kh - 1) // 2, (kw - 1) // 2
    padded = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    cols = _im2col(padded, kh, kw)                       # (n*h*w, c*kh*kw)
    g = grad_out.transpose(0, 2, 3, 1).reshape(n * h * w, oc)
    grad_w = (g.T @ cols).reshape(oc, ic, kh, kw)
    grad_b = grad_out.sum(axis=(0, 2, 3))
    # input gradient = same-padded correlation with the flipped, transposed kernel
    w_flip = p.weights[:, :, ::-1, ::-1].transpose(1, 0, 2, 3)
    grad_x = _conv_same(grad_out, np.ascontiguousarray(w_flip))
    return grad_x, grad_w, grad_b


def maxpool2(x: np.ndarray):
    """2x2 max-pool with stride 2.

    Returns the pooled tensor and the argmax index of each window in
    row-major window order (0..3); ties resolve to the first maximum.
    """
    _check_tensor4(x)
    n, c, h, w = x.shape
    if h % 2 or w % 2:
        raise ShapeError(f"maxpool2 needs even spatial dims, got {h}x{w}")
    hp, wp = h // 2, w // 2
    windows = x.reshape(n, c, hp, 2, wp, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, hp, wp, 4)
    idx = windows.argmax(axis=4)
    out = np.take_along_axis(windows, idx[..., None], axis=4)[..., 0]
    return out, idx


def maxpool2_backward(idx: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    """Route the upstream gradient to each window's recorded argmax."""
    if idx.shape != grad_out.shape:
        raise ShapeError(f"pool indices {idx.shape} do not match upstream "
                         f"gradient {grad_out.shape}")
    n, c, hp, wp = idx.shape
    spread = np.zeros((n, c, hp, wp, 4), dtype=grad_out.dtype)
    np.put_along_axis(spread, idx[..., None], grad_out[..., None], axis=4)
    windows = spread.reshape(n, c, hp, wp, 2, 2).transpose(0, 1, 2, 4, 3, 5)
    return windows.reshape(n, c, 2 * hp, 2 * wp)


def upconv2(x: np.ndarray, p: ConvParams) -> np.ndarray:
    """2x2 transposed convolution with stride 2, no padding.

    Each input pixel scatters value*kernel into its own 2x2 output block
    (no overlap at this kernel/stride), then bias is added; spatial size
    doubles.
    """
    _check_tensor4(x)
    ic, oc, kh, kw = p.weights.shape
    if (kh, kw) != (2, 2):
        raise ShapeError(f"upconv2 kernel must be 2x2, got {(kh, kw)}")
    if x.shape[1] != ic:
        raise ShapeError(f"upconv2 channel mismatch: input {x.shape} expects "
                         f"{ic} channels for kernel {p.weights.shape}")
    n, _, h, w = x.shape
    blocks = np.tensordot(x, p.weights, axes=([1], [0]))  # (n, h, w, oc, 2, 2)
    out = blocks.transpose(0, 3, 1, 4, 2, 5).reshape(n, oc, 2 * h, 2 * w)
    return out + p.bias[None, :, None, None]


def upconv2_backward(x: np.ndarray, p: ConvParams, grad_out: np.ndarray):
    """Gradients of upconv2 w.r.t. (input, weights, bias)."""
    ic, oc, _, _ = p.weights.shape
    n, _, h, w = x.shape
    if grad_out.shape != (n, oc, 2 * h, 2 * w):
        raise ShapeError(f"upconv2 upstream gradient {grad_out.shape} does not match "
                         f"output shape {(n, oc, 2 * h, 2 * w)}")
    g = grad_out.reshape(n, oc, h, 2, w, 2)
    grad_b = grad_out.sum(axis=(0, 2, 3))
    grad_x = np.einsum("nohuwv,iouv->nihw", g, p.weights, optimize=True)
    grad_w = np.einsum("nihw,nohuwv->iouv", x, g, optimize=True)
    return grad_x, grad_w, grad_b


def relu(x: np.ndarray) -> np.ndarray:
    """Elementwise max(x, 0)."""
    return np.maximum(x, 0)


def relu_backward(x: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    """Pass the gradient where x > 0; the derivative at exactly 0 is 0."""
    return grad_out * (x > 0)


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Elementwise logistic function, branch on sign so neither tail overflows."""
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def sigmoid_backward(y: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    """Reverse mode from the forward output y = sigmoid(x)."""
    return grad_out * y * (1.0 - y)


def concat_channels(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Stack b's channels after a's; batch and spatial dims must agree."""
    _check_tensor4(a, "first operand")
    _check_tensor4(b, "second operand")
    if a.shape[0] != b.shape[0] or a.shape[2:] != b.shape[2:]:
        raise ShapeError(f"concat_channels operands disagree outside the channel "
                         f"axis: {a.shape} vs {b.shape}")
    return np.concatenate([a, b], axis=1)


def split_channels(x: np.ndarray, channels: int):
    """Undo concat_channels: split at a channel index into two views."""
    _check_tensor4(x)
    if not 1 <= channels < x.shape[1]:
        raise ShapeError(f"split point {channels} outside channel range of {x.shape}")
    return x[:, :channels], x[:, channels:]


def bce_with_logits(logits: np.ndarray, targets: np.ndarray) -> float:
    """Mean binary cross-entropy on logits, in the numerically stable form
    max(z, 0) - z*y + log(1 + exp(-|z|))."""
    if logits.shape != targets.shape:
        raise ShapeError(f"logits {logits.shape} and targets {targets.shape} differ")
    if not np.all((targets == 0) | (targets == 1)):
        raise DomainError("targets must be exactly 0 or 1")
    terms = np.maximum(logits, 0) - logits * targets + np.log1p(np.exp(-np.abs(logits)))
    return float(terms.mean())


def bce_with_logits_backward(logits: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Per-element gradient (sigmoid(z) - y) / count."""
    if logits.shape != targets.shape:
        raise ShapeError(f"logits {logits.shape} and targets {targets.shape} differ")
    return (sigmoid(logits) - targets) / logits.size


def finite_diff_errors(f, theta: np.ndarray, step: float = 1e-3) -> np.ndarray:
    """Per-coordinate relative error between analytic and central-difference
    gradients.

    f maps a float64 parameter vector to (scalar loss, analytic gradient);
    all checker arithmetic runs in 64-bit.  The error at coordinate i is
    |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
    """
    if step <= 0:
        raise DomainError(f"step must be positive, got {step}")
    theta = np.asarray(theta, dtype=np.float64).ravel()
    loss, grad = f(theta)
    if not np.isfinite(loss):
        raise NumericError(f"loss is not finite at the base point: {loss}")
    grad = np.asarray(grad, dtype=np.float64).ravel()
    if grad.shape != theta.shape:
        raise ShapeError(f"gradient length {grad.shape} does not match "
                         f"parameters {theta.shape}")
    numeric = np.empty_like(theta)
    probe = theta.copy()
    for i in range(theta.size):
        probe[i] = theta[i] + step
        hi = float(f(probe)[0])
        probe[i] = theta[i] - step
        lo = float(f(probe)[0])
        probe[i] = theta[i]
        if not (np.isfinite(hi) and np.isfinite(lo)):
            raise NumericError(f"loss is not finite near coordinate {i}")
        numeric[i] = (hi - lo) / (2.0 * step)
    return np.abs(grad - numeric) / np.maximum(1e-8, np.abs(grad) + np.abs(numeric))


def finite_diff_check(f, theta: np.ndarray, step: float = 1e-3) -> float:
    """Max relative error between analytic and central-difference gradients."""
    errors = finite_diff_errors(f, theta, step)
    return float(errors.max()) if errors.size else 0.0
