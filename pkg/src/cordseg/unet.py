"""U-Net assembly: configuration, deterministic init, forward/backward, and
a bit-exact binary checkpoint format.

The network is the classic contracting/expansive shape: each encoder level
is two (conv 3x3 -> relu) then a 2x2 max-pool; the bottleneck is two
(conv -> relu); each decoder level is a 2x2 transposed conv, channel-concat
with the matching encoder skip, then two (conv -> relu); a final 1x1 conv
produces one logit plane per output channel.  Same-padding keeps the output
spatial size equal to the input everywhere, so masks align with tiles.

Parameters live in one canonical order: encoder blocks top-down (conv1,
conv2 per level), bottleneck (conv1, conv2), decoder blocks bottom-up
(upconv, conv1, conv2 per level), final 1x1 conv.  The flat tensor stream
(weights, bias per layer, in that order) is what the optimizer, the
gradient checker, and the checkpoint file all share.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from . import ops
from .errors import CordsegError, DomainError, NumericError, ShapeError
from .ops import ConvParams
from .rng import SplitMix64, derive


@dataclass(frozen=True)
class UNetConfig:
    depth: int = 4
    base_channels: int = 64
    in_channels: int = 1
    out_channels: int = 1

    def __post_init__(self):
        for name in ("depth", "base_channels", "in_channels", "out_channels"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise DomainError(f"{name} must be a positive integer, got {v!r}")


def layer_plan(cfg: UNetConfig) -> list[tuple[str, int, int, int]]:
    """Canonical layer list as (kind, in_channels, out_channels, kernel_side)."""
    plan: list[tuple[str, int, int, int]] = []
    base = cfg.base_channels
    prev = cfg.in_channels
    for i in range(cfg.depth):
        c = base << i
        plan.append(("conv", prev, c, 3))
        plan.append(("conv", c, c, 3))
        prev = c
    c = base << cfg.depth
    plan.append(("conv", prev, c, 3))
    plan.append(("conv", c, c, 3))
    prev = c
    for i in range(cfg.depth - 1, -1, -1):
        c = base << i
        plan.append(("upconv", prev, c, 2))
        plan.append(("conv", 2 * c, c, 3))
        plan.append(("conv", c, c, 3))
        prev = c
    plan.append(("conv", base, cfg.out_channels, 1))
    return plan


def init_params(cfg: UNetConfig, seed: int) -> list[ConvParams]:
    """He-initialized parameters, bit-reproducible for a given (cfg, seed).

    Weights are normal draws with std sqrt(2/fan_in) consumed from one
    splitmix64 stream in canonical parameter order; biases start at zero.
    fan_in counts the inputs feeding one output unit: in_channels*kh*kw for
    a convolution, in_channels for the non-overlapping transposed
    convolution.
    """
    stream = SplitMix64(seed)
    params = []
    for kind, c_in, c_out, k in layer_plan(cfg):
        shape = (c_in, c_out, k, k) if kind == "upconv" else (c_out, c_in, k, k)
        fan_in = c_in if kind == "upconv" else c_in * k * k
        scale = np.sqrt(2.0 / fan_in)
        w = (stream.normal_array(int(np.prod(shape))) * scale).astype(np.float32).reshape(shape)
        b = np.zeros(c_out, dtype=np.float32)
        params.append(ConvParams(w, b))
    return params


def parameter_count(params: list[ConvParams]) -> int:
    return sum(p.weights.size + p.bias.size for p in params)


def config_from_params(params: list[ConvParams]) -> UNetConfig:
    """Recover the structural config from a canonical parameter list."""
    n = len(params)
    if n < 8 or (n - 3) % 5:
        raise ShapeError(f"parameter list of length {n} does not match any "
                         f"U-Net plan (expected 5*depth + 3 layers)")
    depth = (n - 3) // 5
    cfg = UNetConfig(
        depth=depth,
        base_channels=params[0].weights.shape[0],
        in_channels=params[0].weights.shape[1],
        out_channels=params[-1].weights.shape[0],
    )
    for i, ((kind, c_in, c_out, k), p) in enumerate(zip(layer_plan(cfg), params)):
        expect = (c_in, c_out, k, k) if kind == "upconv" else (c_out, c_in, k, k)
        if p.weights.shape != expect or p.bias.shape != (c_out,):
            raise ShapeError(f"layer {i} has shapes {p.weights.shape}/{p.bias.shape}, "
                             f"expected {expect}/({c_out},) for the canonical plan")
    return cfg


def param_tensors(params: list[ConvParams]) -> list[np.ndarray]:
    """The canonical flat tensor stream: weights, bias for each layer."""
    out = []
    for p in params:
        out.append(p.weights)
        out.append(p.bias)
    return out


def tensors_to_params(tensors: list[np.ndarray]) -> list[ConvParams]:
    """Regroup a canonical tensor stream back into per-layer parameters."""
    if len(tensors) % 2:
        raise ShapeError(f"tensor stream of length {len(tensors)} is not (weights, bias) pairs")
    return [ConvParams(tensors[i], tensors[i + 1]) for i in range(0, len(tensors), 2)]


def flatten_params(params: list[ConvParams]) -> np.ndarray:
    """All parameters as one float64 vector in canonical order."""
    return np.concatenate([t.astype(np.float64).ravel() for t in param_tensors(params)])


def unflatten_params(vector: np.ndarray, like: list[ConvParams]) -> list[ConvParams]:
    """Rebuild a parameter list with like's shapes from a flat vector."""
    vector = np.asarray(vector)
    tensors = []
    pos = 0
    for t in param_tensors(like):
        tensors.append(vector[pos:pos + t.size].reshape(t.shape))
        pos += t.size
    if pos != vector.size:
        raise ShapeError(f"vector of length {vector.size} does not match "
                         f"parameter count {pos}")
    return tensors_to_params(tensors)


@dataclass
class ActivationCache:
    """Intermediates recorded by one forward pass, consumed by one backward."""

    records: list = field(repr=False)
    batch_shape: tuple
    logits_shape: tuple
    consumed: bool = False


def forward(params: list[ConvParams], batch: np.ndarray):
    """Run the network; returns (logits, cache for the matching backward)."""
    cfg = config_from_params(params)
    ops._check_tensor4(batch, "batch")
    n, c, h, w = batch.shape
    if c != cfg.in_channels:
        raise ShapeError(f"batch has {c} channels, model expects {cfg.in_channels}")
    divisor = 1 << cfg.depth
    if h % divisor or w % divisor:
        raise ShapeError(f"spatial size {h}x{w} must be divisible by {divisor} "
                         f"(2^depth for depth {cfg.depth})")

    records = []
    k = 0

    def conv_relu(t):
        nonlocal k
        z = ops.conv2d(t, params[k])
        records.append(("conv_relu", t, z))
        k += 1
        return ops.relu(z)

    skips = []
    t = batch
    for level in range(cfg.depth):
        t = conv_relu(conv_relu(t))
        skips.append(t)
        t, idx = ops.maxpool2(t)
        records.append(("pool", level, idx))
    t = conv_relu(conv_relu(t))
    for level in range(cfg.depth - 1, -1, -1):
        up = ops.upconv2(t, params[k])
        records.append(("upconv", t))
        k += 1
        t = ops.concat_channels(up, skips[level])
        records.append(("concat", level, up.shape[1]))
        t = conv_relu(conv_relu(t))
    logits = ops.conv2d(t, params[k])
    records.append(("conv", t))
    return logits, ActivationCache(records, batch.shape, logits.shape)


def backward(params: list[ConvParams], cache: ActivationCache,
             grad_logits: np.ndarray) -> list[ConvParams]:
    """Exact reverse traversal of forward; gradients align with params."""
    if cache.consumed:
        raise DomainError("activation cache was already consumed by a backward pass")
    if grad_logits.shape != cache.logits_shape:
        raise ShapeError(f"grad_logits {grad_logits.shape} does not match the "
                         f"cached logits shape {cache.logits_shape}")
    grads: list[ConvParams | None] = [None] * len(params)
    k = len(params) - 1
    g = grad_logits
    skip_grads: dict[int, np.ndarray] = {}
    for record in reversed(cache.records):
        tag = record[0]
        if tag == "conv":
            g, gw, gb = ops.conv2d_backward(record[1], params[k], g)
            grads[k] = ConvParams(gw, gb)
            k -= 1
        elif tag == "conv_relu":
            _, x_in, z = record
            g = ops.relu_backward(z, g)
            g, gw, gb = ops.conv2d_backward(x_in, params[k], g)
            grads[k] = ConvParams(gw, gb)
            k -= 1
        elif tag == "concat":
            _, level, up_channels = record
            g, skip_grads[level] = ops.split_channels(g, up_channels)
        elif tag == "upconv":
            g, gw, gb = ops.upconv2_backward(record[1], params[k], g)
            grads[k] = ConvParams(gw, gb)
            k -= 1
        else:  # pool
            _, level, idx = record
            g = ops.maxpool2_backward(idx, g) + skip_grads.pop(level)
    cache.consumed = True
    return grads  # type: ignore[return-value]


def _kink_margin(cache: ActivationCache) -> float:
    """Distance from the nearest non-smooth point of the forward pass.

    Covers the two kink sources: relu pre-activations near 0, and pool
    windows whose top two values nearly tie (which would flip the argmax
    routing under perturbation).
    """
    margin = np.inf
    prev_z = None
    for record in cache.records:
        if record[0] == "conv_relu":
            prev_z = record[2]
            margin = min(margin, float(np.abs(prev_z).min()))
        elif record[0] == "pool":
            pooled_in = ops.relu(prev_z)
            n, c, h, w = pooled_in.shape
            windows = pooled_in.reshape(n, c, h // 2, 2, w // 2, 2)
            windows = windows.transpose(0, 1, 2, 4, 3, 5).reshape(-1, 4)
            top2 = np.sort(windows, axis=1)[:, -2:]
            gaps = top2[:, 1] - top2[:, 0]
            live = top2[:, 1] > 0  # all-zero windows stay flat under small nudges
            if live.any():
                margin = min(margin, float(gaps[live].min()))
    return margin


def gradient_check(cfg: UNetConfig | None = None, side: int = 8, seed: int = 42,
                   step: float = 1e-5):
    """Finite-difference sweep over every parameter of a small model.

    Builds a seeded model, evaluates loss and analytic gradients in
    float64, and compares against central differences.  The seeded input is
    drawn by deterministic rejection until the forward pass sits at least a
    small margin away from every relu/pool kink, so the comparison happens
    where the loss is actually differentiable; with the margin in place the
    small step cannot cross a kink.  Returns (max relative error, flat
    index of the worst coordinate).
    """
    cfg = cfg or UNetConfig(depth=1, base_channels=2)
    params = init_params(cfg, seed)
    params = tensors_to_params([t.astype(np.float64) for t in param_tensors(params)])
    margin_needed = 200.0 * step
    for attempt in range(500):
        stream = SplitMix64(derive(seed, 0xDA7A, attempt))
        x = stream.normal_array(cfg.in_channels * side * side)
        x = x.reshape(1, cfg.in_channels, side, side)
        y = (stream.f64_array(cfg.out_channels * side * side) < 0.5).astype(np.float64)
        y = y.reshape(1, cfg.out_channels, side, side)
        _, cache = forward(params, x)
        if _kink_margin(cache) >= margin_needed:
            break
    else:
        raise NumericError("no seeded input found with a safe differentiability margin")

    def f(theta):
        ps = unflatten_params(theta, params)
        logits, cache = forward(ps, x)
        loss = ops.bce_with_logits(logits, y)
        grads = backward(ps, cache, ops.bce_with_logits_backward(logits, y))
        return loss, flatten_params(grads)

    errors = ops.finite_diff_errors(f, flatten_params(params), step)
    worst = int(errors.argmax())
    return float(errors[worst]), worst


# --- checkpoint format -------------------------------------------------------
#
# Little-endian throughout: magic "UNET"; u32 version = 1; u32 depth,
# base_channels, in_channels, out_channels; then each tensor of the canonical
# stream as u32 rank, rank * u32 dims, row-major float32 values.  No padding.

CHECKPOINT_MAGIC = b"UNET"
CHECKPOINT_VERSION = 1
_MAX_DIM = 1 << 31


class CheckpointError(CordsegError):
    """Base class for checkpoint file problems."""


class CheckpointMagicError(CheckpointError):
    """File does not start with the expected magic bytes."""


class CheckpointVersionError(CheckpointError):
    """File declares a version this code does not read."""


class CheckpointTruncatedError(CheckpointError):
    """File ends before the declared data."""


class CheckpointDimError(CheckpointError):
    """A declared rank or dimension is out of range."""


def save_checkpoint(params: list[ConvParams], cfg: UNetConfig, path) -> None:
    if config_from_params(params) != cfg:
        raise ShapeError(f"parameters do not match config {cfg}")
    blob = bytearray(CHECKPOINT_MAGIC)
    blob += struct.pack("<5I", CHECKPOINT_VERSION, cfg.depth, cfg.base_channels,
                        cfg.in_channels, cfg.out_channels)
    for tensor in param_tensors(params):
        if any(d >= _MAX_DIM for d in tensor.shape):
            raise CheckpointDimError(f"dimension too large to store: {tensor.shape}")
        blob += struct.pack("<I", tensor.ndim)
        blob += struct.pack(f"<{tensor.ndim}I", *tensor.shape)
        blob += np.ascontiguousarray(tensor, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(blob)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, count: int, what: str) -> bytes:
        if self.pos + count > len(self.data):
            raise CheckpointTruncatedError(f"file ends inside {what}")
        chunk = self.data[self.pos:self.pos + count]
        self.pos += count
        return chunk

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]


def load_checkpoint(path):
    """Read a checkpoint; returns (params, cfg). Round trip is bitwise exact."""
    with open(path, "rb") as fh:
        reader = _Reader(fh.read())
    magic = reader.take(4, "magic")
    if magic != CHECKPOINT_MAGIC:
        raise CheckpointMagicError(f"bad magic {magic!r}, expected {CHECKPOINT_MAGIC!r}")
    version = reader.u32("version")
    if version != CHECKPOINT_VERSION:
        raise CheckpointVersionError(f"unsupported version {version}")
    header = [reader.u32(f) for f in ("depth", "base_channels", "in_channels", "out_channels")]
    if any(v < 1 or v > 0xFFFF for v in header):
        raise CheckpointDimError(f"config fields out of range: {header}")
    cfg = UNetConfig(*header)
    plan = layer_plan(cfg)
    tensors = []
    for i in range(2 * len(plan)):
        rank = reader.u32(f"tensor {i} rank")
        if rank not in (1, 4):
            raise CheckpointDimError(f"tensor {i} has rank {rank}, expected 1 or 4")
        dims = tuple(reader.u32(f"tensor {i} dims") for _ in range(rank))
        if any(d < 1 or d >= _MAX_DIM for d in dims):
            raise CheckpointDimError(f"tensor {i} dims out of range: {dims}")
        count = math.prod(dims)  # exact, cannot wrap on adversarial dims
        if count >= _MAX_DIM:
            raise CheckpointDimError(f"tensor {i} element count overflows: {dims}")
        raw = reader.take(4 * count, f"tensor {i} data")
        tensors.append(np.frombuffer(raw, dtype="<f4").reshape(dims).copy())
    if reader.pos != len(reader.data):
        extra = len(reader.data) - reader.pos
        raise CheckpointError(f"{extra} trailing bytes after the last tensor")
    params = tensors_to_params(tensors)
    for i, ((kind, c_in, c_out, k), p) in enumerate(zip(plan, params)):
        expect = (c_in, c_out, k, k) if kind == "upconv" else (c_out, c_in, k, k)
        if p.weights.shape != expect or p.bias.shape != (c_out,):
            raise CheckpointError(f"layer {i} tensors {p.weights.shape}/{p.bias.shape} "
                                  f"do not match the declared config (expected {expect})")
    return params, cfg
