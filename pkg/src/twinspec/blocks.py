"""Network building blocks.

Three block families make up each branch: a squeeze/excite pair of cross-gated
expert convolutions (optionally steered by a compensatory feature added into
the gate controls), gated temporal conv units with exponentially growing
dilation, and the five-stage encoder/decoder that halves or doubles the
frequency axis per stage while time stays causal and unstrided.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError
from .nncore import (
    ConvSpec,
    DiffArray,
    ParamStore,
    Tape,
    add,
    channel_norm,
    conv,
    prelu,
    reshape,
    sigmoid_gate,
    transposed_conv,
)

PRELU_INIT = 0.25


@dataclass
class ConvLayer:
    """One convolution's spec and parameters."""

    spec: ConvSpec
    weight: DiffArray
    bias: DiffArray


@dataclass
class ConvBlock:
    """Conv (or its transposed form) with optional frame norm and PReLU."""

    layer: ConvLayer
    norm_gain: DiffArray | None = None
    norm_bias: DiffArray | None = None
    act_alpha: DiffArray | None = None
    transposed: bool = False


@dataclass
class CebParams:
    """Cross-gated expert block; com_proj present only in the compensated form."""

    squeeze: ConvBlock
    expert_a: ConvLayer
    expert_b: ConvLayer
    excite: ConvBlock
    com_proj: ConvLayer | None = None


@dataclass
class StcmUnit:
    """Residual gated temporal conv unit at one dilation."""

    in_proj: ConvLayer
    in_alpha: DiffArray
    gate_main: ConvLayer
    gate_ctrl: ConvLayer
    out_proj: ConvLayer


@dataclass
class EncoderStage:
    expert: CebParams | ConvBlock
    down: ConvBlock


@dataclass
class DecoderStage:
    up: ConvBlock
    expert: CebParams | ConvBlock


@dataclass
class EncoderParams:
    in_proj: ConvBlock
    stages: list[EncoderStage]


@dataclass
class DecoderParams:
    stages: list[DecoderStage]
    head: ConvLayer


def build_conv_layer(store: ParamStore, prefix: str, spec: ConvSpec, rng: np.random.Generator) -> ConvLayer:
    """Uniform fan-in init for the weight, zeros for the bias."""
    fan_in = spec.in_channels * spec.kernel[0] * spec.kernel[1]
    bound = 1.0 / float(np.sqrt(fan_in))
    weight = store.add(
        f"{prefix}/weight",
        rng.uniform(-bound, bound, size=spec.weight_shape()).astype(np.float32),
    )
    bias = store.add(f"{prefix}/bias", np.zeros(spec.out_channels, dtype=np.float32))
    return ConvLayer(spec=spec, weight=weight, bias=bias)


def build_conv_block(
    store: ParamStore,
    prefix: str,
    spec: ConvSpec,
    rng: np.random.Generator,
    norm: bool = True,
    act: bool = True,
    transposed: bool = False,
) -> ConvBlock:
    layer = build_conv_layer(store, prefix, spec, rng)
    c = spec.out_channels
    norm_gain = store.add(f"{prefix}/norm/gain", np.ones(c, dtype=np.float32)) if norm else None
    norm_bias = store.add(f"{prefix}/norm/bias", np.zeros(c, dtype=np.float32)) if norm else None
    act_alpha = (
        store.add(f"{prefix}/act/alpha", np.full(c, PRELU_INIT, dtype=np.float32)) if act else None
    )
    return ConvBlock(
        layer=layer,
        norm_gain=norm_gain,
        norm_bias=norm_bias,
        act_alpha=act_alpha,
        transposed=transposed,
    )


def apply_conv_layer(tape: Tape | None, x: DiffArray, layer: ConvLayer, transposed: bool = False) -> DiffArray:
    op = transposed_conv if transposed else conv
    return op(tape, x, layer.weight, layer.bias, layer.spec)


def apply_conv_block(tape: Tape | None, x: DiffArray, blk: ConvBlock) -> DiffArray:
    h = apply_conv_layer(tape, x, blk.layer, blk.transposed)
    if blk.norm_gain is not None:
        h = channel_norm(tape, h, blk.norm_gain, blk.norm_bias)
    if blk.act_alpha is not None:
        h = prelu(tape, h, blk.act_alpha)
    return h


def build_ceb(
    store: ParamStore,
    prefix: str,
    channels: int,
    hidden: int,
    kernel: tuple[int, int],
    rng: np.random.Generator,
    com_channels: int | None = None,
) -> CebParams:
    squeeze = build_conv_block(store, f"{prefix}/squeeze", ConvSpec(channels, hidden, (1, 1)), rng)
    expert_a = build_conv_layer(store, f"{prefix}/expert_a", ConvSpec(hidden, hidden, kernel), rng)
    expert_b = build_conv_layer(store, f"{prefix}/expert_b", ConvSpec(hidden, hidden, kernel), rng)
    com_proj = None
    if com_channels is not None:
        com_proj = build_conv_layer(
            store, f"{prefix}/com_proj", ConvSpec(com_channels, hidden, (1, 1)), rng
        )
    excite = build_conv_block(store, f"{prefix}/excite", ConvSpec(hidden, channels, (1, 1)), rng)
    return CebParams(
        squeeze=squeeze, expert_a=expert_a, expert_b=expert_b, excite=excite, com_proj=com_proj
    )


def ceb(tape: Tape | None, x: DiffArray, p: CebParams) -> DiffArray:
    """Squeeze, cross-gate the two experts, sum the gated pair, excite.

    Each expert's output gates the other: out_a = a * sigmoid(b) and
    out_b = b * sigmoid(a).
    """
    if p.com_proj is not None:
        raise ConfigError("params carry a com projection; call cceb with a tap")
    h = apply_conv_block(tape, x, p.squeeze)
    a = apply_conv_layer(tape, h, p.expert_a)
    b = apply_conv_layer(tape, h, p.expert_b)
    gated = add(tape, sigmoid_gate(tape, a, b), sigmoid_gate(tape, b, a))
    return apply_conv_block(tape, gated, p.excite)


def cceb(tape: Tape | None, x: DiffArray, com: DiffArray, p: CebParams) -> DiffArray:
    """Compensated variant: the projected com feature joins each gate control."""
    if p.com_proj is None:
        raise ConfigError("params have no com projection; call ceb instead")
    if com.data.shape[0] != x.data.shape[0] or com.data.shape[2:] != x.data.shape[2:]:
        raise DimensionError(
            f"com shape {com.data.shape} does not align with input {x.data.shape}"
        )
    h = apply_conv_block(tape, x, p.squeeze)
    a = apply_conv_layer(tape, h, p.expert_a)
    b = apply_conv_layer(tape, h, p.expert_b)
    c = apply_conv_layer(tape, com, p.com_proj)
    gated = add(
        tape,
        sigmoid_gate(tape, a, add(tape, b, c)),
        sigmoid_gate(tape, b, add(tape, a, c)),
    )
    return apply_conv_block(tape, gated, p.excite)


def build_stcm_unit(
    store: ParamStore,
    prefix: str,
    width: int,
    hidden: int,
    dilation: int,
    rng: np.random.Generator,
) -> StcmUnit:
    in_proj = build_conv_layer(store, f"{prefix}/in_proj", ConvSpec(width, hidden, (1, 1)), rng)
    in_alpha = store.add(f"{prefix}/in_act/alpha", np.full(hidden, PRELU_INIT, dtype=np.float32))
    kern = ConvSpec(hidden, hidden, (3, 1), dilation=(dilation, 1))
    gate_main = build_conv_layer(store, f"{prefix}/gate_main", kern, rng)
    gate_ctrl = build_conv_layer(store, f"{prefix}/gate_ctrl", kern, rng)
    out_proj = build_conv_layer(store, f"{prefix}/out_proj", ConvSpec(hidden, width, (1, 1)), rng)
    return StcmUnit(
        in_proj=in_proj, in_alpha=in_alpha, gate_main=gate_main, gate_ctrl=gate_ctrl,
        out_proj=out_proj,
    )


def build_stcm_group(
    store: ParamStore,
    prefix: str,
    width: int,
    hidden: int,
    dilations: tuple[int, ...],
    rng: np.random.Generator,
) -> list[StcmUnit]:
    return [
        build_stcm_unit(store, f"{prefix}/u{i + 1}", width, hidden, d, rng)
        for i, d in enumerate(dilations)
    ]


def stcm_unit(tape: Tape | None, x: DiffArray, unit: StcmUnit) -> DiffArray:
    """Residual self-gated unit on (B, C, T) features."""
    if x.data.ndim != 3:
        raise DimensionError(f"stcm input must be (B, C, T), got {x.data.shape}")
    b, c, t = x.data.shape
    x4 = reshape(tape, x, (b, c, t, 1))
    h = apply_conv_layer(tape, x4, unit.in_proj)
    h = prelu(tape, h, unit.in_alpha)
    gated = sigmoid_gate(
        tape,
        apply_conv_layer(tape, h, unit.gate_main),
        apply_conv_layer(tape, h, unit.gate_ctrl),
    )
    y = add(tape, x4, apply_conv_layer(tape, gated, unit.out_proj))
    return reshape(tape, y, (b, c, t))


def stcm_stack(tape: Tape | None, x: DiffArray, units: list[StcmUnit]) -> DiffArray:
    for unit in units:
        x = stcm_unit(tape, x, unit)
    return x


def _build_expert(store, prefix, channels, hidden, kernel, rng, experts, com_channels):
    if experts:
        return build_ceb(store, prefix, channels, hidden, kernel, rng, com_channels=com_channels)
    return build_conv_block(store, prefix, ConvSpec(channels, channels, kernel), rng)


def _apply_expert(tape, x, expert, com):
    if isinstance(expert, ConvBlock):
        return apply_conv_block(tape, x, expert)
    if expert.com_proj is not None:
        if com is None:
            raise DimensionError("compensated expert block called without a tap")
        return cceb(tape, x, com, expert)
    return ceb(tape, x, expert)


def build_encoder(
    store: ParamStore,
    prefix: str,
    in_channels: int,
    channels: int,
    hidden: int,
    kernel: tuple[int, int],
    n_stages: int,
    rng: np.random.Generator,
    experts: bool = True,
    compensated: bool = False,
) -> EncoderParams:
    in_proj = build_conv_block(
        store, f"{prefix}/in_proj", ConvSpec(in_channels, channels, (1, 1)), rng
    )
    stages = []
    for i in range(n_stages):
        expert = _build_expert(
            store,
            f"{prefix}/stage{i + 1}/expert",
            channels,
            hidden,
            kernel,
            rng,
            experts,
            channels if compensated else None,
        )
        down = build_conv_block(
            store,
            f"{prefix}/stage{i + 1}/down",
            ConvSpec(channels, channels, kernel, stride=(1, 2)),
            rng,
        )
        stages.append(EncoderStage(expert=expert, down=down))
    return EncoderParams(in_proj=in_proj, stages=stages)


def encoder(
    tape: Tape | None,
    x: DiffArray,
    p: EncoderParams,
    com_taps: list[DiffArray] | None = None,
) -> tuple[DiffArray, list[DiffArray]]:
    """Project input channels and run the stages.

    Returns the latent and one tap per stage (post expert block, before the
    downsampling conv). When com_taps is given, its length must equal the
    stage count and each tap steers that stage's compensated expert block.
    """
    if com_taps is not None and len(com_taps) != len(p.stages):
        raise DimensionError(
            f"got {len(com_taps)} taps for {len(p.stages)} stages"
        )
    h = apply_conv_block(tape, x, p.in_proj)
    taps: list[DiffArray] = []
    for i, stage in enumerate(p.stages):
        com = com_taps[i] if com_taps is not None else None
        h = _apply_expert(tape, h, stage.expert, com)
        taps.append(h)
        h = apply_conv_block(tape, h, stage.down)
    return h, taps


def build_decoder(
    store: ParamStore,
    prefix: str,
    channels: int,
    hidden: int,
    kernel: tuple[int, int],
    n_stages: int,
    out_channels: int,
    rng: np.random.Generator,
    experts: bool = True,
) -> DecoderParams:
    stages = []
    for i in range(n_stages):
        up = build_conv_block(
            store,
            f"{prefix}/stage{i + 1}/up",
            ConvSpec(channels, channels, kernel, stride=(1, 2)),
            rng,
            transposed=True,
        )
        expert = _build_expert(
            store, f"{prefix}/stage{i + 1}/expert", channels, hidden, kernel, rng, experts, None
        )
        stages.append(DecoderStage(up=up, expert=expert))
    head = build_conv_layer(
        store, f"{prefix}/head", ConvSpec(channels, out_channels, (1, 1)), rng
    )
    return DecoderParams(stages=stages, head=head)


def decoder(
    tape: Tape | None,
    latent: DiffArray,
    skips: list[DiffArray],
    p: DecoderParams,
) -> DiffArray:
    """Mirror the encoder: upsample, add the matching skip, run the expert block.

    Skips arrive in encoder order (widest first) and are consumed in reverse,
    so each addition sees exactly the stage shape it was taken at. The head is
    a linear 1x1 conv; any output nonlinearity belongs to the caller.
    """
    if len(skips) != len(p.stages):
        raise DimensionError(f"got {len(skips)} skips for {len(p.stages)} stages")
    h = latent
    for stage, skip in zip(p.stages, reversed(skips)):
        h = apply_conv_block(tape, h, stage.up)
        if h.data.shape != skip.data.shape:
            raise DimensionError(
                f"skip shape {skip.data.shape} does not match stage output {h.data.shape}"
            )
        h = add(tape, h, skip)
        h = _apply_expert(tape, h, stage.expert, None)
    return apply_conv_layer(tape, h, p.head)
