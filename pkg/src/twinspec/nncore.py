"""Reverse-mode automatic differentiation over numpy, sized for this model.

A Tape records operation outputs in execution order; backward walks the list
in reverse, so execution order doubles as the topological order. Parameters
are DiffArrays that live off-tape and accumulate gradients through the pulls
registered by each operation. Ops run at the dtype of their inputs (float32
in training, float64 for finite-difference checks) and accumulate reductions
in float64.

Convolutions are gathered into column matrices with stride tricks and applied
as single matrix products; time padding is causal (past side only) and
frequency padding is symmetric (kernel - 1) / 2.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import ConfigError, DataError, DimensionError, NumericError, StateError

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

CHECKPOINT_MAGIC = b"TBSE"
CHECKPOINT_VERSION = 1


class DiffArray:
    """A numeric array plus its gradient slot and tape position."""

    __slots__ = ("data", "grad", "node_id", "pulls")

    def __init__(self, data: np.ndarray):
        self.data = data
        self.grad: np.ndarray | None = None
        self.node_id: int | None = None
        self.pulls: list[tuple[DiffArray, object]] = []

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def __repr__(self) -> str:
        return f"DiffArray(shape={self.data.shape}, dtype={self.data.dtype})"


def constant(x, dtype=None) -> DiffArray:
    """Wrap an array as an off-tape leaf."""
    return DiffArray(np.asarray(x, dtype=dtype))


class Tape:
    """Single-use record of one forward pass."""

    def __init__(self):
        self.nodes: list[DiffArray] = []
        self._finished = False

    def record(self, out: DiffArray, pulls) -> DiffArray:
        if self._finished:
            raise StateError("tape already swept by backward; build a new one")
        out.node_id = len(self.nodes)
        out.pulls = list(pulls)
        self.nodes.append(out)
        return out

    def backward(self, loss: DiffArray) -> None:
        """Accumulate d(loss)/d(leaf) into .grad of every contributing array."""
        if self._finished:
            raise StateError("tape already swept by backward; build a new one")
        if loss.node_id is None or loss.node_id >= len(self.nodes) or self.nodes[loss.node_id] is not loss:
            raise StateError("loss is not a node of this tape")
        if loss.data.size != 1:
            raise DimensionError(f"backward needs a scalar, got shape {loss.data.shape}")
        self._finished = True
        loss.grad = np.ones_like(loss.data)
        for node in reversed(self.nodes):
            if node.grad is None:
                continue
            for parent, vjp in node.pulls:
                g = vjp(node.grad)
                if parent.grad is None:
                    parent.grad = g
                else:
                    parent.grad = parent.grad + g


def _emit(tape: Tape | None, data: np.ndarray, pulls) -> DiffArray:
    out = DiffArray(data)
    if tape is not None:
        tape.record(out, pulls)
    return out


@dataclass(frozen=True)
class ConvSpec:
    """Geometry of one 2-D convolution over (time, frequency)."""

    in_channels: int
    out_channels: int
    kernel: tuple[int, int]
    stride: tuple[int, int] = (1, 1)
    dilation: tuple[int, int] = (1, 1)
    causal_time: bool = True

    def __post_init__(self):
        if min(self.in_channels, self.out_channels) < 1:
            raise ConfigError(f"channel counts must be positive: {self}")
        if min(self.kernel) < 1 or min(self.stride) < 1 or min(self.dilation) < 1:
            raise ConfigError(f"kernel/stride/dilation must be positive: {self}")
        if self.kernel[1] > 1 and self.kernel[1] % 2 == 0:
            raise ConfigError(f"frequency kernel must be odd for symmetric padding: {self}")

    @property
    def pad_f(self) -> int:
        return self.dilation[1] * (self.kernel[1] - 1) // 2

    @property
    def pad_t(self) -> int:
        return self.dilation[0] * (self.kernel[0] - 1) if self.causal_time else 0

    def weight_shape(self) -> tuple[int, int, int, int]:
        return (self.out_channels, self.in_channels, *self.kernel)

    def out_frames(self, t: int) -> int:
        reach = self.dilation[0] * (self.kernel[0] - 1)
        return (t + self.pad_t - reach - 1) // self.stride[0] + 1

    def out_bins(self, f: int) -> int:
        reach = self.dilation[1] * (self.kernel[1] - 1)
        return (f + 2 * self.pad_f - reach - 1) // self.stride[1] + 1


def _check_conv_args(x: DiffArray, weight: DiffArray, bias: DiffArray, spec: ConvSpec) -> None:
    if x.data.ndim != 4:
        raise DimensionError(f"conv input must be (B, C, T, F), got {x.data.shape}")
    if x.data.shape[1] != spec.in_channels:
        raise DimensionError(
            f"conv input has {x.data.shape[1]} channels, spec wants {spec.in_channels}"
        )
    if weight.data.shape != spec.weight_shape():
        raise DimensionError(
            f"weight shape {weight.data.shape} does not match spec {spec.weight_shape()}"
        )
    if bias.data.shape != (spec.out_channels,):
        raise DimensionError(f"bias shape {bias.data.shape} != ({spec.out_channels},)")


def conv(tape: Tape | None, x: DiffArray, weight: DiffArray, bias: DiffArray, spec: ConvSpec) -> DiffArray:
    """Strided/dilated 2-D convolution, causal along time.

    Causal mode pads only the past side of the time axis, so output frame t
    never sees input frames beyond t; frequency is padded symmetrically.
    """
    _check_conv_args(x, weight, bias, spec)
    b, c, t, f = x.data.shape
    (kt, kf), (st, sf), (dt, df) = spec.kernel, spec.stride, spec.dilation
    pt, pf = spec.pad_t, spec.pad_f
    xp = x.data
    if pt or pf:
        xp = np.pad(xp, ((0, 0), (0, 0), (pt, 0), (pf, pf)))
    t_out = spec.out_frames(t)
    f_out = spec.out_bins(f)
    if t_out < 1 or f_out < 1:
        raise DimensionError(f"input (T={t}, F={f}) too small for {spec}")

    sb, sc, stt, sff = xp.strides
    patches = np.lib.stride_tricks.as_strided(
        xp,
        shape=(b, c, kt, kf, t_out, f_out),
        strides=(sb, sc, dt * stt, df * sff, st * stt, sf * sff),
    )
    k = c * kt * kf
    cols = patches.reshape(b, k, t_out * f_out)
    w2 = weight.data.reshape(spec.out_channels, k)
    out = np.matmul(w2, cols).reshape(b, spec.out_channels, t_out, f_out)
    out = out + bias.data.reshape(1, -1, 1, 1)

    def pull_x(go):
        gcols = np.matmul(w2.T, go.reshape(b, spec.out_channels, -1))
        gcols = gcols.reshape(b, c, kt, kf, t_out, f_out)
        gx = np.zeros_like(xp)
        for i in range(kt):
            for j in range(kf):
                gx[
                    :,
                    :,
                    i * dt : i * dt + t_out * st : st,
                    j * df : j * df + f_out * sf : sf,
                ] += gcols[:, :, i, j]
        return gx[:, :, pt:, pf : pf + f] if (pt or pf) else gx

    def pull_w(go):
        gw = np.matmul(go.reshape(b, spec.out_channels, -1), cols.transpose(0, 2, 1))
        return gw.sum(axis=0).reshape(weight.data.shape)

    def pull_b(go):
        return go.sum(axis=(0, 2, 3))

    return _emit(tape, out, [(x, pull_x), (weight, pull_w), (bias, pull_b)])


def _freq_upsample(tape: Tape | None, x: DiffArray, factor: int) -> DiffArray:
    """Insert factor-1 zeros between frequency bins: F -> (F-1)*factor + 1."""
    b, c, t, f = x.data.shape
    up = np.zeros((b, c, t, (f - 1) * factor + 1), dtype=x.data.dtype)
    up[..., ::factor] = x.data

    def pull(go):
        return go[..., ::factor]

    return _emit(tape, up, [(x, pull)])


def transposed_conv(tape: Tape | None, x: DiffArray, weight: DiffArray, bias: DiffArray, spec: ConvSpec) -> DiffArray:
    """Frequency-upsampling counterpart of conv, causal along time.

    Realized as zero-stuffing along frequency followed by a unit-stride causal
    conv, which makes output bins (F - 1) * stride_f + 1 + 2*pad_f - kernel_f + 1
    and mirrors the paired downsampling conv exactly for odd kernels.
    """
    if spec.stride[0] != 1:
        raise ConfigError(f"transposed conv supports unit time stride only, got {spec}")
    if spec.dilation != (1, 1):
        raise ConfigError(f"transposed conv does not support dilation, got {spec}")
    inner = ConvSpec(
        in_channels=spec.in_channels,
        out_channels=spec.out_channels,
        kernel=spec.kernel,
        stride=(1, 1),
        dilation=(1, 1),
        causal_time=spec.causal_time,
    )
    up = _freq_upsample(tape, x, spec.stride[1]) if spec.stride[1] > 1 else x
    return conv(tape, up, weight, bias, inner)


def sigmoid_gate(tape: Tape | None, a: DiffArray, b: DiffArray) -> DiffArray:
    """Elementwise a * sigmoid(b) with a numerically stable sigmoid."""
    if a.data.shape != b.data.shape:
        raise DimensionError(f"gate shapes differ: {a.data.shape} vs {b.data.shape}")
    sig = expit(b.data)
    out = a.data * sig

    def pull_a(go):
        return go * sig

    def pull_b(go):
        return go * a.data * sig * (1.0 - sig)

    return _emit(tape, out, [(a, pull_a), (b, pull_b)])


def channel_norm(tape: Tape | None, x: DiffArray, gain: DiffArray, bias: DiffArray) -> DiffArray:
    """Normalize each (item, channel, frame) row over frequency, then affine.

    Statistics never pool across frames, which keeps the op causal; pooled
    over all frames the output still has zero mean and unit variance per
    channel. Epsilon 1e-8 under the square root.
    """
    if x.data.ndim != 4:
        raise DimensionError(f"channel_norm input must be (B, C, T, F), got {x.data.shape}")
    c = x.data.shape[1]
    if gain.data.shape != (c,) or bias.data.shape != (c,):
        raise DimensionError(f"gain/bias must have shape ({c},)")
    dtype = x.data.dtype
    mu = x.data.mean(axis=-1, keepdims=True, dtype=np.float64)
    var = np.square(x.data.astype(np.float64) - mu).mean(axis=-1, keepdims=True)
    inv = (1.0 / np.sqrt(var + 1e-8)).astype(dtype)
    xhat = (x.data - mu.astype(dtype)) * inv
    g4 = gain.data.reshape(1, c, 1, 1)
    out = g4 * xhat + bias.data.reshape(1, c, 1, 1)

    def pull_x(go):
        gxh = go * g4
        m1 = gxh.mean(axis=-1, keepdims=True, dtype=np.float64).astype(dtype)
        m2 = (gxh * xhat).mean(axis=-1, keepdims=True, dtype=np.float64).astype(dtype)
        return (gxh - m1 - xhat * m2) * inv

    def pull_gain(go):
        return (go * xhat).sum(axis=(0, 2, 3))

    def pull_bias(go):
        return go.sum(axis=(0, 2, 3))

    return _emit(tape, out, [(x, pull_x), (gain, pull_gain), (bias, pull_bias)])


def prelu(tape: Tape | None, x: DiffArray, alpha: DiffArray) -> DiffArray:
    """Per-channel PReLU: x for x > 0, alpha[c] * x otherwise."""
    if x.data.ndim != 4 or alpha.data.shape != (x.data.shape[1],):
        raise DimensionError(
            f"prelu wants (B, C, T, F) input and (C,) slopes, got {x.data.shape} "
            f"and {alpha.data.shape}"
        )
    a4 = alpha.data.reshape(1, -1, 1, 1)
    pos = x.data > 0
    out = np.where(pos, x.data, a4 * x.data)

    def pull_x(go):
        return np.where(pos, go, a4 * go)

    def pull_alpha(go):
        return np.where(pos, 0.0, go * x.data).sum(axis=(0, 2, 3)).astype(alpha.data.dtype)

    return _emit(tape, out, [(x, pull_x), (alpha, pull_alpha)])


def softplus(tape: Tape | None, x: DiffArray) -> DiffArray:
    """log(1 + exp(x)) via logaddexp, so large inputs do not overflow."""
    out = np.logaddexp(np.asarray(0.0, dtype=x.data.dtype), x.data)

    def pull(go):
        return go * expit(x.data)

    return _emit(tape, out, [(x, pull)])


def add(tape: Tape | None, a: DiffArray, b: DiffArray) -> DiffArray:
    """Elementwise sum of two same-shape arrays."""
    if a.data.shape != b.data.shape:
        raise DimensionError(f"add shapes differ: {a.data.shape} vs {b.data.shape}")
    out = a.data + b.data

    def pull(go):
        return go

    return _emit(tape, out, [(a, pull), (b, pull)])


def scale(tape: Tape | None, x: DiffArray, factor: float) -> DiffArray:
    """Multiply by a python scalar constant."""
    factor = float(factor)
    out = x.data * x.data.dtype.type(factor)

    def pull(go):
        return go * factor

    return _emit(tape, out, [(x, pull)])


def reshape(tape: Tape | None, x: DiffArray, shape: tuple[int, ...]) -> DiffArray:
    out = x.data.reshape(shape)

    def pull(go):
        return go.reshape(x.data.shape)

    return _emit(tape, out, [(x, pull)])


def permute(tape: Tape | None, x: DiffArray, axes: tuple[int, ...]) -> DiffArray:
    inverse = tuple(np.argsort(axes))
    out = x.data.transpose(axes)

    def pull(go):
        return go.transpose(inverse)

    return _emit(tape, out, [(x, pull)])


def masked_abs_sum(tape: Tape | None, pred: DiffArray, target: np.ndarray, weight: np.ndarray | None = None) -> DiffArray:
    """Scalar sum of |pred - target|, optionally weighted (e.g. by a frame mask).

    The weight must broadcast against pred; accumulation runs in float64 and
    the scalar is returned at pred's dtype.
    """
    if pred.data.shape != target.shape:
        raise DimensionError(f"pred {pred.data.shape} and target {target.shape} shapes differ")
    diff = pred.data - target
    sgn = np.sign(diff)
    if weight is not None:
        weight = np.broadcast_to(weight, diff.shape)
        total = np.sum(np.abs(diff) * weight, dtype=np.float64)
    else:
        total = np.sum(np.abs(diff), dtype=np.float64)
    out = np.asarray(total, dtype=pred.data.dtype)

    def pull(go):
        g = go * sgn
        return g * weight if weight is not None else g

    return _emit(tape, out, [(pred, pull)])


def square_sum(tape: Tape | None, x: DiffArray) -> DiffArray:
    """Scalar sum of squares; a smooth functional for gradient probes."""
    out = np.asarray(np.sum(np.square(x.data, dtype=np.float64)), dtype=x.data.dtype)

    def pull(go):
        return go * 2.0 * x.data

    return _emit(tape, out, [(x, pull)])


class ParamStore:
    """Ordered map of named parameters plus Adam moment state."""

    def __init__(self):
        self._params: dict[str, DiffArray] = {}
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.step = 0

    def add(self, name: str, data: np.ndarray) -> DiffArray:
        if name in self._params:
            raise ConfigError(f"duplicate parameter name {name!r}")
        p = DiffArray(np.asarray(data, dtype=np.float32))
        self._params[name] = p
        return p

    def __getitem__(self, name: str) -> DiffArray:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    def zero_grad(self) -> None:
        for p in self._params.values():
            p.grad = None

    def count_params(self) -> int:
        return sum(p.data.size for p in self._params.values())

    def promote(self, dtype=np.float64) -> None:
        """Cast parameters in place (used for finite-difference checks)."""
        for p in self._params.values():
            p.data = p.data.astype(dtype)
            p.grad = None


def adam_step(store: ParamStore, lr: float, beta1: float = ADAM_BETA1, beta2: float = ADAM_BETA2, eps: float = ADAM_EPS) -> None:
    """One bias-corrected Adam update; gradients are consumed and cleared."""
    missing = [name for name, p in store.items() if p.grad is None]
    if missing:
        raise StateError(f"adam_step before backward: no gradient for {missing[:4]}")
    store.step += 1
    t = store.step
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    for name, p in store.items():
        g = p.grad.astype(p.data.dtype, copy=False)
        m = store.m.get(name)
        v = store.v.get(name)
        if m is None:
            m = np.zeros_like(p.data)
            v = np.zeros_like(p.data)
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * np.square(g)
        store.m[name] = m
        store.v[name] = v
        mhat = m / c1
        vhat = v / c2
        p.data = p.data - lr * mhat / (np.sqrt(vhat) + eps)
        p.grad = None


def grad_check(fn, inputs: list[DiffArray], rng: np.random.Generator | None = None, max_samples: int = 16) -> float:
    """Worst relative error between reverse-mode and central-difference gradients.

    fn(tape, inputs) must return a scalar DiffArray and be deterministic. The
    base step is 1e-5 for float64 inputs and 1e-3 for float32; up to
    max_samples coordinates are probed per input. Two failure modes of the
    difference itself are handled, neither of which can hide a wrong gradient:

    - Coordinates where both gradients sit below the noise floor (roundoff of
      the objective divided by the step) are treated as matching: a true-zero
      gradient, e.g. a bias that a following normalization cancels exactly,
      yields nothing but roundoff on both sides.
    - A disagreeing coordinate is re-probed at step/10 and step/100 and the
      best agreement wins. When the base step straddles a subgradient kink (a
      gate pre-activation or an absolute-error residual crossing zero inside
      the interval) the difference quotient is corrupted there but recovers at
      smaller steps; an incorrect gradient disagrees at every step. Shrinking
      stops before the step where roundoff would swamp the gradient being
      measured.
    - An absolute disagreement below the noise floor is accepted outright:
      for gradients within an order of magnitude of the floor (saturated
      gates deep in a long graph) the relative quotient measures roundoff,
      not correctness, and no central difference can distinguish the two.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    tape = Tape()
    out = fn(tape, inputs)
    if out.data.size != 1:
        raise DimensionError(f"grad_check needs a scalar objective, got {out.data.shape}")
    for inp in inputs:
        inp.grad = None
    tape.backward(out)
    analytic = [np.zeros_like(p.data) if p.grad is None else np.array(p.grad) for p in inputs]

    worst = 0.0
    f_scale = max(1.0, abs(float(out.data)))
    for inp, ana in zip(inputs, analytic):
        base_h = 1e-5 if inp.data.dtype == np.float64 else 1e-3
        eps = float(np.finfo(inp.data.dtype).eps)
        size = inp.data.size
        if size <= max_samples:
            coords = np.arange(size)
        else:
            coords = rng.choice(size, size=max_samples, replace=False)
        flat = inp.data.reshape(-1)
        for idx in coords:
            a = float(ana.reshape(-1)[idx])
            orig = flat[idx]
            best = None
            gauge = None
            for h in (base_h, base_h / 10.0, base_h / 100.0):
                floor = 50.0 * eps * f_scale / h
                if gauge is not None and gauge <= 10.0 * floor:
                    break
                flat[idx] = orig + h
                f_plus = float(fn(None, inputs).data)
                flat[idx] = orig - h
                f_minus = float(fn(None, inputs).data)
                flat[idx] = orig
                numeric = (f_plus - f_minus) / (2.0 * h)
                if gauge is None:
                    gauge = max(abs(a), abs(numeric))
                    if gauge <= floor:
                        best = 0.0
                        break
                err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-12)
                if abs(a - numeric) <= floor:
                    err = 0.0
                best = err if best is None else min(best, err)
                if best <= 1e-7:
                    break
            worst = max(worst, best)
    return worst


def save_checkpoint(path, tensors: dict[str, np.ndarray], text: str = "") -> None:
    """Write named float32 tensors (magic, version, count, entries, text section)."""
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<H", CHECKPOINT_VERSION))
        fh.write(struct.pack("<I", len(tensors)))
        for name, arr in tensors.items():
            raw = name.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            a = np.asarray(arr, dtype="<f4")
            fh.write(struct.pack("<B", a.ndim))
            if a.ndim:
                fh.write(struct.pack(f"<{a.ndim}I", *a.shape))
            fh.write(a.tobytes())
        raw = text.encode("utf-8")
        fh.write(struct.pack("<I", len(raw)))
        fh.write(raw)


def _read_exact(fh, n: int, path) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise DataError(f"{path}: truncated checkpoint")
    return buf


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], str]:
    """Read a checkpoint back as ({name: float32 array}, text section)."""
    try:
        fh = open(path, "rb")
    except FileNotFoundError:
        raise DataError(f"no such checkpoint: {path}") from None
    with fh:
        if _read_exact(fh, 4, path) != CHECKPOINT_MAGIC:
            raise DataError(f"{path}: not a checkpoint file (bad magic)")
        (version,) = struct.unpack("<H", _read_exact(fh, 2, path))
        if version != CHECKPOINT_VERSION:
            raise DataError(f"{path}: unsupported checkpoint version {version}")
        (count,) = struct.unpack("<I", _read_exact(fh, 4, path))
        tensors: dict[str, np.ndarray] = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<H", _read_exact(fh, 2, path))
            name = _read_exact(fh, name_len, path).decode("utf-8")
            (ndim,) = struct.unpack("<B", _read_exact(fh, 1, path))
            shape = struct.unpack(f"<{ndim}I", _read_exact(fh, 4 * ndim, path)) if ndim else ()
            n_items = int(np.prod(shape)) if ndim else 1
            raw = _read_exact(fh, 4 * n_items, path)
            tensors[name] = np.frombuffer(raw, dtype="<f4").reshape(shape).copy()
        (text_len,) = struct.unpack("<I", _read_exact(fh, 4, path))
        text = _read_exact(fh, text_len, path).decode("utf-8")
    return tensors, text


def store_state(store: ParamStore) -> dict[str, np.ndarray]:
    """Parameters plus optimizer state under the reserved adam/ prefix."""
    out: dict[str, np.ndarray] = {name: p.data for name, p in store.items()}
    out["adam/step"] = np.asarray(float(store.step), dtype=np.float32)
    for name in store.names():
        if name in store.m:
            out[f"adam/m/{name}"] = store.m[name]
            out[f"adam/v/{name}"] = store.v[name]
    return out


def load_store_state(store: ParamStore, tensors: dict[str, np.ndarray]) -> None:
    """Restore parameters and optimizer state saved by store_state."""
    for name, p in store.items():
        if name not in tensors:
            raise DataError(f"checkpoint is missing parameter {name!r}")
        arr = tensors[name]
        if arr.shape != p.data.shape:
            raise DataError(
                f"checkpoint parameter {name!r} has shape {arr.shape}, expected {p.data.shape}"
            )
        p.data = arr.astype(np.float32)
        p.grad = None
    extras = [
        k for k in tensors
        if not k.startswith("adam/") and k not in store and not k.startswith("meta/")
    ]
    if extras:
        raise DataError(f"checkpoint has unknown parameters {extras[:4]}")
    step_arr = tensors.get("adam/step")
    store.step = int(step_arr.reshape(-1)[0]) if step_arr is not None else 0
    store.m.clear()
    store.v.clear()
    for name in store.names():
        mk, vk = f"adam/m/{name}", f"adam/v/{name}"
        if mk in tensors:
            if tensors[mk].shape != store[name].data.shape or tensors[vk].shape != store[name].data.shape:
                raise DataError(f"optimizer state for {name!r} has mismatched shape")
            store.m[name] = tensors[mk].astype(np.float32)
            store.v[name] = tensors[vk].astype(np.float32)


def check_finite(name: str, arr: np.ndarray) -> None:
    """Raise NumericError naming the layer if arr contains non-finite values."""
    if not np.isfinite(arr).all():
        raise NumericError(f"non-finite values in {name}")
