"""Experiment configuration: a flat ``key = value`` file plus command-line overrides.

Values use TOML-like literals (numbers, quoted strings, ``true``/``false``,
lists in brackets); ``#`` starts a comment and ``[section]`` headers are
accepted and ignored, so section names are only for readability.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .dmp import ALPHA_K, ALPHA_X, BETA_X, DEFAULT_DT


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Config:
    seed: int = 0
    jobs: int = 1
    # DMP and integrator
    alpha_x: float = ALPHA_X
    beta_x: float = BETA_X
    alpha_k: float = ALPHA_K
    dt: float = DEFAULT_DT
    # dataset
    scenarios: int = 100
    grid: int = 50
    alpha_min: float = 1.0
    alpha_max: float = 1000.0
    psi_min: float = 0.05
    psi_max: float = math.pi / 2
    kappa_min: float = 1.0
    kappa_max: float = 500.0
    semi_axis_min: float = 0.025
    semi_axis_max: float = 0.25
    baseline: float = 1.0
    max_convergence: float = 0.003
    # learning
    hidden: tuple = (10, 10)
    max_epochs: int = 500
    train_fraction: float = 0.7
    # suites
    familiar_n: int = 100
    novel_n: int = 1000
    novel_clearance: float = 0.15
    # paths
    dataset: str = "dataset.csv"
    model_dir: str = "models"
    out_dir: str = "results"
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        pos_int = ("jobs", "scenarios", "grid", "max_epochs", "familiar_n", "novel_n")
        pos = ("alpha_x", "beta_x", "alpha_k", "dt", "alpha_min", "alpha_max", "psi_min",
               "psi_max", "kappa_min", "kappa_max", "semi_axis_min", "semi_axis_max",
               "baseline", "max_convergence", "novel_clearance")
        for k in pos_int:
            v = getattr(self, k)
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise ConfigError(f"{k} must be a positive integer, got {v!r}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")
        for k in pos:
            v = getattr(self, k)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not (math.isfinite(v) and v > 0):
                raise ConfigError(f"{k} must be a finite positive number, got {v!r}")
            object.__setattr__(self, k, float(v))
        for lo, hi in (("alpha_min", "alpha_max"), ("psi_min", "psi_max"),
                       ("kappa_min", "kappa_max"), ("semi_axis_min", "semi_axis_max")):
            if getattr(self, lo) > getattr(self, hi):
                raise ConfigError(f"{lo} exceeds {hi}")
        if self.psi_max > math.pi:
            raise ConfigError("psi_max must not exceed pi")
        if self.alpha_k * self.dt >= 1.0:
            raise ConfigError("dt too large for the canonical system")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError("train_fraction must lie in (0, 1)")
        hidden = tuple(self.hidden) if isinstance(self.hidden, (list, tuple)) else (self.hidden,)
        if not hidden or any(isinstance(h, bool) or not isinstance(h, int) or h < 1 for h in hidden):
            raise ConfigError(f"hidden must list positive layer widths, got {self.hidden!r}")
        object.__setattr__(self, "hidden", hidden)
        if self.extra:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(self.extra))}")

    @property
    def gains(self) -> tuple[float, float, float]:
        return self.alpha_x, self.beta_x, self.alpha_k

    def param_grid(self):
        from .learning.dataset import GridAxis, ParamGrid
        return ParamGrid(GridAxis(self.alpha_min, self.alpha_max, self.grid, True),
                         GridAxis(self.psi_min, self.psi_max, self.grid),
                         GridAxis(self.kappa_min, self.kappa_max, self.grid, True))

    def stream(self, name: str) -> int:
        """Seed of a named sub-stream (``dataset``, ``split``, ``init``, ``suite``)."""
        key = [ord(c) for c in name]
        return int(np.random.SeedSequence([self.seed, *key]).generate_state(1)[0])

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            if f.name == "extra":
                continue
            v = getattr(self, f.name)
            lines.append(f"{f.name} = {_format(v)}")
        return "\n".join(lines) + "\n"


def _format(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_format(x) for x in v) + "]"
    return repr(v)


def parse_value(text: str):
    """One literal: number, quoted string, boolean or bracketed list."""
    t = text.strip()
    if t in ("true", "false"):
        return t == "true"
    t = t.replace("true", "True").replace("false", "False") if t.startswith("[") else t
    try:
        return ast.literal_eval(t)
    except (ValueError, SyntaxError):
        raise ConfigError(f"cannot parse value {text.strip()!r}") from None


def parse_text(text: str, source: str = "<config>") -> dict:
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = _strip_comment(raw).strip()
        if not line or (line.startswith("[") and line.endswith("]") and "=" not in line):
            continue
        key, sep, val = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{source}:{n}: expected key = value")
        try:
            out[key.strip()] = parse_value(val)
        except ConfigError as exc:
            raise ConfigError(f"{source}:{n}: {exc}") from None
    return out


def _strip_comment(line: str) -> str:
    quote = None
    for i, ch in enumerate(line):
        if quote:
            if ch == quote:
                quote = None
        elif ch in "\"'":
            quote = ch
        elif ch == "#":
            return line[:i]
    return line


def from_mapping(values: dict, base: Config | None = None) -> Config:
    names = {f.name for f in fields(Config)} - {"extra"}
    known = {k: v for k, v in values.items() if k in names}
    unknown = {k: v for k, v in values.items() if k not in names}
    base = base or Config()
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    try:
        return replace(base, **known)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> Config:
    """Defaults, then the file (if any), then ``overrides`` (``None`` entries skipped)."""
    values = {}
    if path is not None:
        p = Path(path)
        values.update(parse_text(p.read_text(), str(p)))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return from_mapping(values)
