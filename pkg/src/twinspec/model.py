"""Two-branch enhancement network assembled from the encoder/decoder blocks.

One branch reconstructs the magnitude spectrum directly, the other maps the
real and imaginary planes; both read the same two-plane complex input. The
magnitude branch exports its per-stage encoder features to the complex branch,
where they calibrate the gated expert blocks. Waveforms come back through
magnitude-plus-estimated-phase resynthesis.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .blocks import (
    DecoderParams,
    EncoderParams,
    StcmUnit,
    build_decoder,
    build_encoder,
    build_stcm_group,
    decoder,
    encoder,
    stcm_stack,
)
from .dsp import Magnitude, StftConfig, UnitPhase, _mag_phase_arrays, istft, polar_combine, stft
from .errors import ConfigError, DataError, DimensionError
from .nncore import (
    DiffArray,
    ParamStore,
    Tape,
    add,
    check_finite,
    constant,
    load_checkpoint,
    load_store_state,
    masked_abs_sum,
    permute,
    reshape,
    save_checkpoint,
    scale,
    softplus,
    store_state,
)

TCM_DILATIONS = (1, 2, 4, 8, 16, 32)


@dataclass(frozen=True)
class ModelConfig:
    """Network hyperparameters; the defaults give the full-size model."""

    n_bins: int = 161
    stages: int = 5
    channels: int = 64
    expert_channels: int = 32
    kernel_t: int = 2
    kernel_f: int = 3
    tcm_groups: int = 3
    tcm_units: int = 6
    tcm_hidden: int = 64
    alpha: float = 0.5
    no_phase: bool = False
    no_experts: bool = False
    no_compensation: bool = False

    def __post_init__(self):
        if self.stages < 1:
            raise ConfigError(f"need at least one encoder stage, got {self.stages}")
        for name in ("channels", "expert_channels", "tcm_groups", "tcm_units", "tcm_hidden"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.tcm_units > len(TCM_DILATIONS):
            raise ConfigError(
                f"tcm_units may not exceed {len(TCM_DILATIONS)}, got {self.tcm_units}"
            )
        if self.kernel_t < 1 or self.kernel_f < 1 or self.kernel_f % 2 == 0:
            raise ConfigError(f"kernel ({self.kernel_t},{self.kernel_f}) is invalid")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in [0,1], got {self.alpha}")
        # Each stride-2 stage maps F to (F-1)//2+1; the transposed mirror
        # restores F exactly only when F is odd at the top of every stage.
        for size in self.bin_sizes()[:-1]:
            if size % 2 == 0 or size < 3:
                raise ConfigError(
                    f"n_bins {self.n_bins} does not halve cleanly over "
                    f"{self.stages} stages (hit {size})"
                )

    def bin_sizes(self) -> list[int]:
        """Frequency sizes entering each stage, ending with the latent width."""
        sizes = [self.n_bins]
        for _ in range(self.stages):
            sizes.append((sizes[-1] - 1) // 2 + 1)
        return sizes

    @property
    def latent_bins(self) -> int:
        return self.bin_sizes()[-1]

    @property
    def kernel(self) -> tuple[int, int]:
        return (self.kernel_t, self.kernel_f)

    @property
    def dilations(self) -> tuple[int, ...]:
        return TCM_DILATIONS[: self.tcm_units]


@dataclass
class Branch:
    enc: EncoderParams
    tcm: list[StcmUnit]
    dec: DecoderParams


@dataclass
class TwoBranchModel:
    cfg: ModelConfig
    store: ParamStore
    mag: Branch
    cplx: Branch | None


@dataclass
class Estimates:
    """Batched network outputs.

    mag is (B,T,F,1) and nonnegative; ri is (B,T,F,2) or None when the phase
    branch is disabled. The unit phase comes from ri when present, otherwise
    from the input spectrum.
    """

    mag: DiffArray
    ri: DiffArray | None
    phase: UnitPhase


def _build_branch(store, prefix, cfg: ModelConfig, rng, out_channels, compensated) -> Branch:
    enc = build_encoder(
        store,
        f"{prefix}/enc",
        in_channels=2,
        channels=cfg.channels,
        hidden=cfg.expert_channels,
        kernel=cfg.kernel,
        n_stages=cfg.stages,
        rng=rng,
        experts=not cfg.no_experts,
        compensated=compensated,
    )
    units: list[StcmUnit] = []
    width = cfg.channels * cfg.latent_bins
    for g in range(cfg.tcm_groups):
        units.extend(
            build_stcm_group(
                store, f"{prefix}/tcm/g{g + 1}", width, cfg.tcm_hidden, cfg.dilations, rng
            )
        )
    dec = build_decoder(
        store,
        f"{prefix}/dec",
        channels=cfg.channels,
        hidden=cfg.expert_channels,
        kernel=cfg.kernel,
        n_stages=cfg.stages,
        out_channels=out_channels,
        rng=rng,
        experts=not cfg.no_experts,
    )
    return Branch(enc=enc, tcm=units, dec=dec)


def build_model(cfg: ModelConfig, seed: int = 0) -> TwoBranchModel:
    """Initialize both branches (or just the magnitude branch under no_phase)."""
    rng = np.random.default_rng(seed)
    store = ParamStore()
    mag = _build_branch(store, "mag", cfg, rng, out_channels=1, compensated=False)
    cplx = None
    if not cfg.no_phase:
        compensated = not (cfg.no_compensation or cfg.no_experts)
        cplx = _build_branch(store, "cplx", cfg, rng, out_channels=2, compensated=compensated)
    return TwoBranchModel(cfg=cfg, store=store, mag=mag, cplx=cplx)


def count_params(model: TwoBranchModel) -> int:
    return model.store.count_params()


def _run_branch(tape, name, x, branch: Branch, com_taps):
    latent, taps = encoder(tape, x, branch.enc, com_taps=com_taps)
    check_finite(f"{name}/enc", latent.data)
    b, c, t, f = latent.data.shape
    flat = reshape(tape, permute(tape, latent, (0, 1, 3, 2)), (b, c * f, t))
    flat = stcm_stack(tape, flat, branch.tcm)
    check_finite(f"{name}/tcm", flat.data)
    latent = permute(tape, reshape(tape, flat, (b, c, f, t)), (0, 1, 3, 2))
    out = decoder(tape, latent, taps, branch.dec)
    check_finite(f"{name}/dec", out.data)
    return out, taps


def forward(tape: Tape | None, model: TwoBranchModel, noisy_ri: np.ndarray) -> Estimates:
    """Run both branches on a (B, 2, T, F) real/imaginary input batch."""
    arr = np.asarray(noisy_ri)
    if arr.ndim != 4 or arr.shape[1] != 2:
        raise DimensionError(f"expected a (B,2,T,F) input, got {arr.shape}")
    if arr.shape[3] != model.cfg.n_bins:
        raise DimensionError(
            f"input has {arr.shape[3]} bins, model expects {model.cfg.n_bins}"
        )
    check_finite("input", arr)
    x = constant(arr)

    mag_out, mag_taps = _run_branch(tape, "mag", x, model.mag, None)
    mag_est = permute(tape, softplus(tape, mag_out), (0, 2, 3, 1))

    if model.cplx is None:
        _, phase = _mag_phase_arrays(arr[:, 0], arr[:, 1])
        return Estimates(mag=mag_est, ri=None, phase=phase)

    compensated = not (model.cfg.no_compensation or model.cfg.no_experts)
    com = mag_taps if compensated else None
    cplx_out, _ = _run_branch(tape, "cplx", x, model.cplx, com)
    ri_est = permute(tape, cplx_out, (0, 2, 3, 1))
    _, phase = _mag_phase_arrays(ri_est.data[..., 0], ri_est.data[..., 1])
    return Estimates(mag=mag_est, ri=ri_est, phase=phase)


def compute_loss(
    tape: Tape | None,
    est: Estimates,
    ref_mag: np.ndarray,
    ref_real: np.ndarray,
    ref_imag: np.ndarray,
    mask: np.ndarray,
    alpha: float,
) -> tuple[DiffArray, DiffArray, DiffArray]:
    """Masked mean absolute errors blended as alpha*L_mag + (1-alpha)*L_RI.

    ref_mag/ref_real/ref_imag are (B,T,F); mask is (B,T) with ones on valid
    frames. Means run over valid bins only, so padded frames carry no signal.
    """
    b, t, f, _ = est.mag.data.shape
    if ref_mag.shape != (b, t, f):
        raise DimensionError(f"reference {ref_mag.shape} does not match ({b},{t},{f})")
    if mask.shape != (b, t):
        raise DimensionError(f"mask {mask.shape} does not match ({b},{t})")
    valid = float(mask.sum())
    if valid == 0.0:
        raise DataError("every frame in the batch is masked out")
    count = valid * f
    w = mask.astype(est.mag.data.dtype)[:, :, None, None]

    l_mag = scale(tape, masked_abs_sum(tape, est.mag, ref_mag[..., None], w), 1.0 / count)
    if est.ri is None:
        l_ri = constant(np.zeros((), dtype=est.mag.data.dtype))
    else:
        ref_ri = np.stack([ref_real, ref_imag], axis=-1)
        l_ri = scale(tape, masked_abs_sum(tape, est.ri, ref_ri, w), 1.0 / count)
    total = add(tape, scale(tape, l_mag, alpha), scale(tape, l_ri, 1.0 - alpha))
    return total, l_mag, l_ri


def enhance(model: TwoBranchModel, wav: np.ndarray, cfg: StftConfig) -> np.ndarray:
    """Waveform in, enhanced waveform out: stft, forward, recombine, istft."""
    spec = stft(wav, cfg)
    if spec.n_bins != model.cfg.n_bins:
        raise ConfigError(
            f"analysis yields {spec.n_bins} bins but the model expects {model.cfg.n_bins}"
        )
    batch = np.stack([spec.real, spec.imag])[None]
    est = forward(None, model, batch)
    mag = Magnitude(values=est.mag.data[0, :, :, 0], cfg=cfg)
    phase = UnitPhase(cos=est.phase.cos[0], sin=est.phase.sin[0])
    return istft(polar_combine(mag, phase))


def config_to_text(cfg: ModelConfig, extra: dict[str, str] | None = None) -> str:
    pairs = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
    if extra:
        overlap = set(extra) & set(pairs)
        if overlap:
            raise ConfigError(f"extra keys shadow model keys: {sorted(overlap)}")
        pairs.update(extra)
    return "".join(f"{k}={_fmt(v)}\n" for k, v in pairs.items())


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    return repr(v) if isinstance(v, float) else str(v)


def config_from_text(text: str) -> tuple[ModelConfig, dict[str, str]]:
    """Parse key=value lines; unknown keys are returned, not rejected."""
    known = {f.name: f.type for f in fields(ModelConfig)}
    kwargs: dict = {}
    extra: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError(f"line {lineno} is not a key=value pair: {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in known:
            extra[key] = value
            continue
        default = getattr(ModelConfig, key)
        try:
            if isinstance(default, bool):
                kwargs[key] = value not in ("0", "false", "False")
            elif isinstance(default, int):
                kwargs[key] = int(value)
            else:
                kwargs[key] = float(value)
        except ValueError as exc:
            raise DataError(f"bad value for {key!r}: {value!r}") from exc
    return ModelConfig(**kwargs), extra


def save_model(model: TwoBranchModel, path, extra: dict[str, str] | None = None) -> None:
    """Checkpoint parameters, optimizer state, and a self-describing text block."""
    save_checkpoint(path, store_state(model.store), text=config_to_text(model.cfg, extra))


def load_model(path) -> tuple[TwoBranchModel, dict[str, str]]:
    """Rebuild a model from a checkpoint written by save_model."""
    tensors, text = load_checkpoint(path)
    cfg, extra = config_from_text(text)
    model = build_model(cfg, seed=0)
    load_store_state(model.store, tensors)
    return model, extra
