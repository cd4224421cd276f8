"""Flat ``key = value`` configuration files for the tracker.

Every tunable lives at the top level so that two ablation configs differ
by a single line. Lines starting with ``#`` and blank lines are ignored.
"""

from __future__ import annotations

from pathlib import Path

from .errors import ConfigError
from .features import FeatureConfig
from .solver import AdmmParams
from .tracker import TrackerConfig

# key -> (section, field, type); section None means a TrackerConfig field
_FIELDS = {
    "cell_size": ("features", "cell_size", int),
    "orientation_bins": ("features", "orientation_bins", int),
    "include_gray": ("features", "include_gray", bool),
    "window": ("features", "window", str),
    "mu": ("admm", "mu", float),
    "gamma0": ("admm", "gamma0", float),
    "gamma_max": ("admm", "gamma_max", float),
    "rho": ("admm", "rho", float),
    "admm_iters": ("admm", "iters", int),
    "template_px": (None, "template_px", int),
    "sigma_factor": (None, "sigma_factor", float),
    "w_min": (None, "w_min", float),
    "w_alpha": (None, "w_alpha", float),
    "num_scales": (None, "num_scales", int),
    "scale_step": (None, "scale_step", float),
    "scale_lr": (None, "scale_lr", float),
    "penalty_eps": (None, "penalty_eps", float),
    "interp_eta": (None, "interp_eta", float),
}

KEYS = tuple(sorted(_FIELDS))


def _parse_value(key: str, kind, text: str):
    text = text.strip()
    try:
        if kind is bool:
            low = text.lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ValueError(text)
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r} as {kind.__name__}") from None


def from_mapping(values: dict) -> TrackerConfig:
    """Build a validated config from ``{key: value}``; missing keys take defaults."""
    unknown = set(values) - set(_FIELDS)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    sections = {"features": {}, "admm": {}, None: {}}
    for key, value in values.items():
        section, name, _ = _FIELDS[key]
        sections[section][name] = value
    try:
        return TrackerConfig(
            features=FeatureConfig(**sections["features"]),
            admm=AdmmParams(**sections["admm"]),
            **sections[None],
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def to_mapping(cfg: TrackerConfig) -> dict:
    out = {}
    for key, (section, name, _) in _FIELDS.items():
        owner = cfg if section is None else getattr(cfg, section)
        value = getattr(owner, name)
        out[key] = getattr(value, "value", value)
    return out


def loads(text: str, source: str = "<config>") -> TrackerConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _FIELDS:
            raise ConfigError(f"{source}:{lineno}: unknown config key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, _FIELDS[key][2], value)
    return from_mapping(values)


def dumps(cfg: TrackerConfig) -> str:
    lines = []
    for key, value in sorted(to_mapping(cfg).items()):
        if isinstance(value, bool):
            text = "true" if value else "false"
        else:
            text = repr(value) if isinstance(value, float) else str(value)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"


def load(path) -> TrackerConfig:
    path = Path(path)
    return loads(path.read_text(), str(path))
