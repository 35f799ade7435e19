"""Experiment configuration: defaults, key-value files, env overrides.

Config files are plain text, one ``key = value`` pair per line, ``#``
comments allowed.  Every key has a default, so an empty (or absent) file
reproduces the standard benchmark experiment.  Environment variables
override file values: key ``gen.n_steps`` maps to ``QUACK_GEN_N_STEPS``
(dots to underscores, uppercased).  CLI flags override both.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from .errors import ConfigError
from .timeseries import GenSpec

ENV_PREFIX = "QUACK_"


@dataclass
class ExperimentConfig:
    gen: GenSpec = field(default_factory=GenSpec)
    window: int = 5
    train_overlap: int = 2
    train_frac: float = 0.75
    kernel: str = "iqp"
    matern_nu: float = 2.5
    matern_all: bool = False
    mean_lo: float = -1.0
    mean_hi: float = 1.0
    noise_lo: float = 0.0
    noise_hi: float = 1.0
    n0: int = 25
    n_query: int = 25
    restarts: int = 16
    seed_data: int = 0
    seed_bo: int = 0
    out_dir: str = "runs"
    qubit_ceiling: int = 24
    landscape_alpha: float = 0.243
    landscape_grid: int = 61
    ablate_n_steps: int = 480
    ablate_train_overlap: int = 4
    ablate_qubits: tuple[int, ...] = (5, 6, 7, 8, 9, 10)

    def validate(self) -> None:
        if self.window < 1:
            raise ConfigError(f"window must be >= 1, got {self.window}")
        if self.gen.n_steps < 2 * self.window:
            raise ConfigError(
                f"n_steps={self.gen.n_steps} must be at least twice the window "
                f"length {self.window}"
            )
        if not 0 <= self.train_overlap < self.window:
            raise ConfigError(
                f"train_overlap={self.train_overlap} must satisfy 0 <= overlap < window"
            )
        if not 0.0 < self.train_frac < 1.0:
            raise ConfigError(f"train_frac must be in (0, 1), got {self.train_frac}")
        if self.n0 < 1 or self.n_query < 1:
            raise ConfigError(f"n0={self.n0} and n_query={self.n_query} must be >= 1")
        if self.window > self.qubit_ceiling:
            raise ConfigError(
                f"window={self.window} exceeds qubit ceiling {self.qubit_ceiling}"
            )
        if not self.mean_lo < self.mean_hi:
            raise ConfigError("mean bounds must satisfy mean_lo < mean_hi")
        if self.noise_lo < 0 or not self.noise_lo < self.noise_hi:
            raise ConfigError("noise bounds must satisfy 0 <= noise_lo < noise_hi")
        if self.landscape_grid < 2:
            raise ConfigError(f"landscape_grid must be >= 2, got {self.landscape_grid}")


# key -> (target attribute path, parser)
def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_optional_float(text: str) -> float | None:
    return None if text.strip().lower() in ("auto", "none") else float(text)


def _parse_int_tuple(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(",") if part.strip())


_SCHEMA: dict[str, tuple[str, object]] = {
    "gen.n_steps": ("gen.n_steps", int),
    "gen.n_trend_changes": ("gen.n_trend_changes", int),
    "gen.slope": ("gen.slope", float),
    "gen.sine1_period": ("gen.sine1_period", float),
    "gen.sine1_amplitude": ("gen.sine1_amplitude", float),
    "gen.sine2_period": ("gen.sine2_period", _parse_optional_float),
    "gen.sine2_amplitude": ("gen.sine2_amplitude", float),
    "gen.noise_sd": ("gen.noise_sd", float),
    "window": ("window", int),
    "train_overlap": ("train_overlap", int),
    "train_frac": ("train_frac", float),
    "kernel": ("kernel", str),
    "matern_nu": ("matern_nu", float),
    "matern_all": ("matern_all", _parse_bool),
    "bounds.mean_lo": ("mean_lo", float),
    "bounds.mean_hi": ("mean_hi", float),
    "bounds.noise_lo": ("noise_lo", float),
    "bounds.noise_hi": ("noise_hi", float),
    "n0": ("n0", int),
    "n_query": ("n_query", int),
    "restarts": ("restarts", int),
    "seed_data": ("seed_data", int),
    "seed_bo": ("seed_bo", int),
    "out_dir": ("out_dir", str),
    "qubit_ceiling": ("qubit_ceiling", int),
    "landscape.alpha": ("landscape_alpha", float),
    "landscape.grid": ("landscape_grid", int),
    "ablate.n_steps": ("ablate_n_steps", int),
    "ablate.train_overlap": ("ablate_train_overlap", int),
    "ablate.qubits": ("ablate_qubits", _parse_int_tuple),
}


def _assign(cfg: ExperimentConfig, key: str, raw: str, origin: str) -> None:
    if key not in _SCHEMA:
        raise ConfigError(f"{origin}: unknown config key {key!r}")
    path, parser = _SCHEMA[key]
    try:
        value = parser(raw)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{origin}: bad value for {key!r}: {raw!r} ({exc})") from exc
    if "." in path:
        holder_name, attr = path.split(".", 1)
        setattr(getattr(cfg, holder_name), attr, value)
    else:
        setattr(cfg, path, value)
    # gen.seed follows seed_data unless the generator seed was set directly
    if key == "seed_data":
        cfg.gen.seed = value


def _env_name(key: str) -> str:
    return ENV_PREFIX + key.replace(".", "_").upper()


def load_config(path=None, env: dict[str, str] | None = None) -> ExperimentConfig:
    """Build a config from defaults, an optional file and the environment."""
    cfg = ExperimentConfig()
    cfg.gen.seed = cfg.seed_data
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                lines = fh.readlines()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        for lineno, raw in enumerate(lines, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, _, value = line.partition("=")
            _assign(cfg, key.strip(), value.strip(), origin=f"{path}:{lineno}")
    env = os.environ if env is None else env
    for key in _SCHEMA:
        name = _env_name(key)
        if name in env:
            _assign(cfg, key, env[name], origin=f"environment {name}")
    return cfg


def snapshot(cfg: ExperimentConfig) -> dict:
    """Flat, JSON-serializable view of every config key."""
    out: dict[str, object] = {}
    for key, (path, _) in _SCHEMA.items():
        if "." in path:
            holder_name, attr = path.split(".", 1)
            value = getattr(getattr(cfg, holder_name), attr)
        else:
            value = getattr(cfg, path)
        if isinstance(value, tuple):
            value = list(value)
        out[key] = value
    out["gen.seed"] = cfg.gen.seed
    return out


def describe_schema() -> str:
    """Human-readable key listing with defaults, for --help and the README."""
    cfg = ExperimentConfig()
    lines = []
    for key, (path, _) in sorted(_SCHEMA.items()):
        if "." in path:
            holder_name, attr = path.split(".", 1)
            default = getattr(getattr(cfg, holder_name), attr)
        else:
            default = getattr(cfg, path)
        lines.append(f"{key} (default {default!r}, env {_env_name(key)})")
    return "\n".join(lines)


__all__ = [
    "ExperimentConfig",
    "ENV_PREFIX",
    "load_config",
    "snapshot",
    "describe_schema",
]
