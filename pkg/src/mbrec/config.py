"""Run configuration: defaults, flat config files, and flag precedence.

Resolution order is command-line flags over config-file entries over
built-in defaults. Config files are flat ``key = value`` text; ``#``
lines are comments.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError

THREADS_ENV_VAR = "MBREC_THREADS"


@dataclass(frozen=True)
class RunConfig:
    input: str | None = None
    behaviors: tuple[str, ...] = ()
    alpha: int = 1
    epsilon: float = 1.0
    mode: str = "zscore"
    k_values: tuple[int, ...] = (10, 50)
    chunk_size: int = 1024
    split_seed: int = 0
    noise_seed: int = 0
    noise_fractions: tuple[float, ...] = (0.0, 0.1, 0.2, 0.3, 0.4)
    threads: int = 1
    share_prefixes: bool = False
    output: str | None = None
    json_output: bool = False

    def validate(self, require_input: bool = True) -> None:
        """Reject invalid settings before any data is read."""
        if len(self.behaviors) < 2:
            raise ConfigError(
                f"need at least 2 behaviors (target last), got {list(self.behaviors)}"
            )
        if len(set(self.behaviors)) != len(self.behaviors):
            raise ConfigError(f"behavior labels must be unique: {list(self.behaviors)}")
        if require_input and not self.input:
            raise ConfigError("no input file given (use --input)")
        if self.alpha < 0:
            raise ConfigError(f"alpha must be >= 0, got {self.alpha}")
        if self.epsilon < 0:
            raise ConfigError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.mode not in ("raw", "zscore"):
            raise ConfigError(f"mode must be 'raw' or 'zscore', got {self.mode!r}")
        if not self.k_values or any(k < 1 for k in self.k_values):
            raise ConfigError(f"K values must be >= 1, got {list(self.k_values)}")
        if self.chunk_size < 1:
            raise ConfigError(f"chunk_size must be >= 1, got {self.chunk_size}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        if any(not 0.0 <= f <= 1.0 for f in self.noise_fractions):
            raise ConfigError(
                f"noise fractions must lie in [0, 1], got {list(self.noise_fractions)}"
            )

    def echo(self) -> list[tuple[str, str]]:
        """Resolved settings as printable key/value pairs."""
        pairs = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = ",".join(str(v) for v in value)
            pairs.append((f.name, str(value)))
        return pairs


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _csv(text, convert):
    return tuple(convert(part.strip()) for part in str(text).split(",") if part.strip())


_KEY_SPECS = {
    "input": ("input", str),
    "behaviors": ("behaviors", lambda t: _csv(t, str)),
    "alpha": ("alpha", int),
    "epsilon": ("epsilon", float),
    "mode": ("mode", str),
    "k": ("k_values", lambda t: _csv(t, int)),
    "chunk_size": ("chunk_size", int),
    "split_seed": ("split_seed", int),
    "noise_seed": ("noise_seed", int),
    "fractions": ("noise_fractions", lambda t: _csv(t, float)),
    "threads": ("threads", int),
    "share_prefixes": ("share_prefixes", _parse_bool),
    "output": ("output", str),
    "json": ("json_output", _parse_bool),
}


def parse_config_file(path) -> dict[str, str]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    values: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = stripped.partition("=")
        values[key.strip()] = value.strip()
    return values


def build_run_config(
    flag_values: dict[str, object], config_file: str | None = None
) -> RunConfig:
    """Merge defaults, config-file entries, and already-typed flag values."""
    kwargs: dict[str, object] = {}
    if config_file:
        for key, raw in parse_config_file(config_file).items():
            if key not in _KEY_SPECS:
                raise ConfigError(f"unknown config key {key!r} in {config_file}")
            field_name, convert = _KEY_SPECS[key]
            try:
                kwargs[field_name] = convert(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r}: {exc}") from exc
    for field_name, value in flag_values.items():
        if value is not None:
            kwargs[field_name] = value
    if "threads" not in kwargs:
        env = os.environ.get(THREADS_ENV_VAR)
        if env:
            try:
                kwargs["threads"] = int(env)
            except ValueError as exc:
                raise ConfigError(f"bad {THREADS_ENV_VAR} value {env!r}") from exc
    return replace(RunConfig(), **kwargs)
