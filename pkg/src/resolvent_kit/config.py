"""Run configuration: flat key = value files plus command-line overrides.

Precedence: command line > config file > defaults. Unknown keys are
rejected rather than ignored so typos fail loudly.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from typing import Optional

from .errors import ConfigError

COMMANDS = ("smatrix", "resonances", "bound-states", "dos", "resolvent", "selftest")

THREADS_ENV_VAR = "RESOLVENT_KIT_THREADS"


@dataclass
class RunConfig:
    command: str = "smatrix"
    family: str = "laguerre"
    lam: float = 1.0
    ell: int = 0
    z_charge: float = 0.0
    size: int = 40
    potential: str = ""
    e_min: float = 0.1
    e_max: float = 8.0
    steps: int = 200
    method: str = "smoothing"
    delta: Optional[float] = None
    fit_height: float = 0.5
    fit_order: int = 8
    fit_threshold: float = 5e-2
    n_index: Optional[int] = None
    m_index: Optional[int] = None
    im_z: float = 0.0
    prominence: float = 0.15
    min_phase_gain: float = 0.5
    range_r: float = 50.0
    threads: Optional[int] = None
    csv: str = "out.csv"
    json: str = "out.json"
    gnuplot_script: str = ""

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}; expected one of {', '.join(COMMANDS)}")
        if self.family not in ("laguerre", "oscillator"):
            raise ConfigError(f"unknown basis family {self.family!r}")
        if not self.e_min < self.e_max:
            raise ConfigError(f"need e_min < e_max, got {self.e_min} >= {self.e_max}")
        if self.steps < 1:
            raise ConfigError(f"steps must be >= 1, got {self.steps}")
        if self.size < 2:
            raise ConfigError(f"N must be >= 2, got {self.size}")
        if self.lam <= 0:
            raise ConfigError(f"lambda must be positive, got {self.lam}")
        if self.ell < 0:
            raise ConfigError(f"ell must be >= 0, got {self.ell}")
        if self.threads is not None and self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        return self

    def effective_threads(self) -> int:
        if self.threads is not None:
            return self.threads
        env = os.environ.get(THREADS_ENV_VAR, "").strip()
        if env:
            try:
                n = int(env)
            except ValueError as exc:
                raise ConfigError(f"{THREADS_ENV_VAR} must be an integer, got {env!r}") from exc
            if n < 1:
                raise ConfigError(f"{THREADS_ENV_VAR} must be >= 1, got {n}")
            return n
        return 1

    def as_dict(self) -> dict:
        out = {}
        for f in fields(self):
            out[_FILE_KEYS[f.name]] = getattr(self, f.name)
        return out


# config-file / CLI spelling of each field
_FILE_KEYS = {
    "command": "command",
    "family": "family",
    "lam": "lambda",
    "ell": "ell",
    "z_charge": "Z",
    "size": "N",
    "potential": "potential",
    "e_min": "e_min",
    "e_max": "e_max",
    "steps": "steps",
    "method": "method",
    "delta": "delta",
    "fit_height": "fit_height",
    "fit_order": "fit_order",
    "fit_threshold": "fit_threshold",
    "n_index": "n_index",
    "m_index": "m_index",
    "im_z": "im_z",
    "prominence": "prominence",
    "min_phase_gain": "min_phase_gain",
    "range_r": "range_r",
    "threads": "threads",
    "csv": "csv",
    "json": "json",
    "gnuplot_script": "gnuplot_script",
}
_FIELD_BY_KEY = {v: k for k, v in _FILE_KEYS.items()}

_STR_FIELDS = {"command", "family", "potential", "method", "csv", "json", "gnuplot_script"}
_INT_FIELDS = {"ell", "size", "steps", "fit_order", "n_index", "m_index", "threads"}


def _convert(field_name: str, raw: str):
    raw = raw.strip()
    if field_name in _STR_FIELDS:
        return raw
    if raw.lower() in ("none", ""):
        return None
    try:
        if field_name in _INT_FIELDS:
            return int(raw)
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value {raw!r} for key {_FILE_KEYS[field_name]!r}") from exc


def parse_config_file(path: str) -> dict:
    """Read a flat ``key = value`` file; '#' starts a comment."""
    overrides = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {stripped!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in _FIELD_BY_KEY:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        field_name = _FIELD_BY_KEY[key]
        overrides[field_name] = _convert(field_name, raw)
    return overrides


def build_config(file_overrides: dict, cli_overrides: dict) -> RunConfig:
    cfg = RunConfig()
    for source in (file_overrides, cli_overrides):
        for name, value in source.items():
            if value is None:
                continue
            setattr(cfg, name, value)
    return cfg.validate()
