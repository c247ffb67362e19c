"""Flat key=value run configuration shared by the CLI subcommands.

One file drives analysis parameters, architecture widths, loss weighting, and
trainer settings. Unknown keys are rejected so typos fail loudly instead of
silently training the wrong model.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .dsp import StftConfig
from .errors import ConfigError
from .model import ModelConfig

_TRUE = ("1", "true", "True", "yes")
_FALSE = ("0", "false", "False", "no")


@dataclass(frozen=True)
class RunConfig:
    sample_rate: int = 16000
    win_len: int = 320
    hop: int = 160
    fft_size: int = 320
    window: str = "hamming"
    stages: int = 5
    channels: int = 64
    expert_channels: int = 32
    kernel_t: int = 2
    kernel_f: int = 3
    tcm_groups: int = 3
    tcm_units: int = 6
    tcm_hidden: int = 64
    alpha: float = 0.5
    mask_padding: bool = True
    epochs: int = 30
    batch_size: int = 2
    lr: float = 0.0002
    seed: int = 0
    no_phase: bool = False
    no_experts: bool = False
    no_compensation: bool = False

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be positive, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be positive, got {self.batch_size}")
        if not self.lr > 0.0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        self.stft()
        self.model()

    def stft(self) -> StftConfig:
        return StftConfig(
            sample_rate=self.sample_rate,
            win_len=self.win_len,
            hop=self.hop,
            fft_size=self.fft_size,
            window=self.window,
        )

    def model(self) -> ModelConfig:
        return ModelConfig(
            n_bins=self.fft_size // 2 + 1,
            stages=self.stages,
            channels=self.channels,
            expert_channels=self.expert_channels,
            kernel_t=self.kernel_t,
            kernel_f=self.kernel_f,
            tcm_groups=self.tcm_groups,
            tcm_units=self.tcm_units,
            tcm_hidden=self.tcm_hidden,
            alpha=self.alpha,
            no_phase=self.no_phase,
            no_experts=self.no_experts,
            no_compensation=self.no_compensation,
        )

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool):
                v = "1" if v else "0"
            lines.append(f"{f.name}={v}")
        return "\n".join(lines) + "\n"


def parse_run_config(text: str, overrides: dict | None = None) -> RunConfig:
    """Build a RunConfig from key=value lines; unknown keys are an error."""
    defaults = {f.name: getattr(RunConfig, f.name) for f in fields(RunConfig)}
    kwargs: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno} is not a key=value pair: {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in defaults:
            raise ConfigError(f"unknown config key {key!r} on line {lineno}")
        if key in kwargs:
            raise ConfigError(f"duplicate config key {key!r} on line {lineno}")
        kwargs[key] = _coerce(key, value, defaults[key])
    if overrides:
        kwargs.update(overrides)
    return RunConfig(**kwargs)


def load_run_config(path, overrides: dict | None = None) -> RunConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_run_config(text, overrides)


def _coerce(key: str, value: str, default):
    try:
        if isinstance(default, bool):
            if value in _TRUE:
                return True
            if value in _FALSE:
                return False
            raise ValueError(f"expected a boolean, got {value!r}")
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float):
            return float(value)
        return value
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {value!r} ({exc})") from exc
