"""Flat `section.key = value` run configuration.

The format is line oriented: one assignment per line, `#` starts a
comment, blank lines are ignored.  Parsing and serialization round-trip
losslessly on all recognized keys.
"""

from __future__ import annotations

from dataclasses import dataclass, fields


class ConfigError(Exception):
    """Malformed configuration text or inconsistent values."""


def _parse_bool(tok: str) -> bool:
    low = tok.lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {tok!r}")


@dataclass
class RunConfig:
    grid_d: int = 1
    grid_n: int = 128
    hamiltonian_kind: str = "example"
    hamiltonian_gamma: float = 1.25
    hamiltonian_a: str = "sin_bump"
    potential_b: str = "cos_bump"
    potential_sign: str = "paper_literal"
    congestion_alpha: float = 1.0
    newton_tol: float = 1e-10
    newton_max_iters: int = 30
    newton_min_m_floor: float = 1e-8
    continuation_step_init: float = 0.1
    continuation_step_min: float = 1e-4
    continuation_grow: float = 1.5
    continuation_shrink: float = 0.5
    output_dir: str = "out"
    output_formats: str = "csv,json"
    overrides_allow_inadmissible: bool = False


_KEYS = {
    "grid.d": ("grid_d", int),
    "grid.n": ("grid_n", int),
    "hamiltonian.kind": ("hamiltonian_kind", str),
    "hamiltonian.gamma": ("hamiltonian_gamma", float),
    "hamiltonian.a": ("hamiltonian_a", str),
    "potential.b": ("potential_b", str),
    "potential.sign": ("potential_sign", str),
    "congestion.alpha": ("congestion_alpha", float),
    "newton.tol": ("newton_tol", float),
    "newton.max_iters": ("newton_max_iters", int),
    "newton.min_m_floor": ("newton_min_m_floor", float),
    "continuation.step_init": ("continuation_step_init", float),
    "continuation.step_min": ("continuation_step_min", float),
    "continuation.grow": ("continuation_grow", float),
    "continuation.shrink": ("continuation_shrink", float),
    "output.dir": ("output_dir", str),
    "output.formats": ("output_formats", str),
    "overrides.allow_inadmissible": ("overrides_allow_inadmissible", _parse_bool),
}

_FIELD_TO_KEY = {attr: key for key, (attr, _) in _KEYS.items()}


def parse_config_text(text: str) -> RunConfig:
    """Parse configuration text; errors carry the offending line number."""
    cfg = RunConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'section.key = value', "
                              f"got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unrecognized key {key!r}")
        attr, conv = _KEYS[key]
        try:
            setattr(cfg, attr, conv(value))
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)


def serialize_config(cfg: RunConfig) -> str:
    """Emit the canonical text form (round-trips through parse)."""
    lines = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if isinstance(value, bool):
            rendered = "true" if value else "false"
        elif isinstance(value, float):
            rendered = f"{value:.17g}"
        else:
            rendered = str(value)
        lines.append(f"{_FIELD_TO_KEY[f.name]} = {rendered}")
    return "\n".join(lines) + "\n"


def validate_config(cfg: RunConfig) -> None:
    """Structural checks independent of admissibility."""
    if cfg.grid_d not in (1, 2):
        raise ConfigError(f"grid.d must be 1 or 2, got {cfg.grid_d}")
    if cfg.grid_n < 8:
        raise ConfigError(f"grid.n must be at least 8, got {cfg.grid_n}")
    if cfg.hamiltonian_kind not in ("example", "power", "blend"):
        raise ConfigError(f"unknown hamiltonian.kind {cfg.hamiltonian_kind!r}")
    if not 1.0 < cfg.hamiltonian_gamma < 2.0:
        raise ConfigError(
            f"hamiltonian.gamma must lie in (1,2), got {cfg.hamiltonian_gamma}")
    if cfg.potential_sign not in ("paper_literal", "monotone"):
        raise ConfigError(f"unknown potential.sign {cfg.potential_sign!r}")
    if cfg.congestion_alpha <= 0.0:
        raise ConfigError(
            f"congestion.alpha must be positive, got {cfg.congestion_alpha}")
    for name in ("newton_tol", "newton_min_m_floor", "continuation_step_init",
                 "continuation_step_min"):
        if getattr(cfg, name) <= 0.0:
            raise ConfigError(f"{_FIELD_TO_KEY[name]} must be positive")
    if cfg.continuation_step_min > cfg.continuation_step_init:
        raise ConfigError("continuation.step_min exceeds continuation.step_init")
    for fmt in cfg.output_formats.split(","):
        if fmt.strip() not in ("csv", "json"):
            raise ConfigError(f"unknown output format {fmt.strip()!r}")
