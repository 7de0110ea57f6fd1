"""Experiment configuration: YAML in, frozen dataclasses out."""

from __future__ import annotations

import dataclasses
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from ..dataset import SplitSpec, SyntheticSpec
from ..errors import ConfigurationError
from ..protocol import ProtocolConfig

AXES = ("alpha", "temperature", "epsilon")

# Per-dataset protocol defaults. The synthetic profile is tuned for the
# bundled generator; the other two carry the published settings for their
# datasets (batch 1024, T=30, w=0.5).
PROFILES: dict[str, dict[str, Any]] = {
    "synthetic": {
        "rounds": 5,
        "batch_size": 512,
        "distill": {"t_sd": 30.0, "t_ed": 30.0, "beta": 10.0, "gamma": 1.0},
    },
    "hetrec": {
        "rounds": 5,
        "batch_size": 1024,
        "distill": {"t_sd": 30.0, "t_ed": 30.0, "beta": 10.0, "gamma": 10.0},
    },
    "criteo": {
        "rounds": 7,
        "batch_size": 1024,
        "distill": {"t_sd": 30.0, "t_ed": 30.0, "beta": 3.0, "gamma": 3.0},
    },
}


@dataclass(frozen=True)
class CsvSource:
    path: str
    schema: str


@dataclass(frozen=True)
class Sweep:
    alpha: tuple[float, ...] = ()
    temperature: tuple[float, ...] = ()
    # None stands for the noiseless exchange
    epsilon: tuple[float | None, ...] = ()

    def values(self, axis: str) -> tuple:
        if axis not in AXES:
            raise ConfigurationError(f"unknown sweep axis {axis!r}; expected one of {AXES}")
        return getattr(self, axis)


@dataclass(frozen=True)
class ExperimentConfig:
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
    synthetic: SyntheticSpec | None = field(default_factory=SyntheticSpec)
    csv: CsvSource | None = None
    split: SplitSpec = field(default_factory=SplitSpec)
    alpha: float = 0.1
    sweep: Sweep = field(default_factory=Sweep)
    seeds: tuple[int, ...] = (0,)
    output_dir: str = "runs/default"
    profile: str = "synthetic"

    def __post_init__(self):
        if not self.seeds:
            raise ConfigurationError("at least one seed is required")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigurationError("seeds must be distinct")
        if (self.synthetic is None) == (self.csv is None):
            raise ConfigurationError("exactly one dataset source (synthetic or csv) is required")
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigurationError(f"alpha must lie in (0, 1], got {self.alpha}")
        for a in self.sweep.alpha:
            if not 0.0 < a <= 1.0:
                raise ConfigurationError(f"sweep alpha {a} outside (0, 1]")
        for t in self.sweep.temperature:
            if not t > 0:
                raise ConfigurationError(f"sweep temperature {t} must be positive")
        for e in self.sweep.epsilon:
            if e is not None and not e > 0:
                raise ConfigurationError(f"sweep epsilon {e} must be positive or null")

    def require_axis(self, axis: str) -> tuple:
        values = self.sweep.values(axis)
        if not values:
            raise ConfigurationError(f"sweep over {axis!r} requested but its value list is empty")
        return values


# ------------------------------------------------------------------ building


def _deep_merge(base: Mapping, override: Mapping) -> dict:
    out = dict(base)
    for k, v in override.items():
        if isinstance(v, Mapping) and isinstance(out.get(k), Mapping):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = v
    return out


def _coerce(tp, value, where: str):
    origin = typing.get_origin(tp)
    if origin in (typing.Union, types.UnionType):
        args = typing.get_args(tp)
        if value is None:
            if type(None) in args:
                return None
            raise ConfigurationError(f"{where}: null not allowed")
        inner = [a for a in args if a is not type(None)]
        return _coerce(inner[0], value, where)
    if dataclasses.is_dataclass(tp):
        if not isinstance(value, Mapping):
            raise ConfigurationError(f"{where}: expected a mapping")
        return build(tp, value, where)
    if origin is tuple:
        if isinstance(value, (str, bytes)) or not isinstance(value, (list, tuple)):
            raise ConfigurationError(f"{where}: expected a list")
        args = typing.get_args(tp)
        elem = args[0] if args else Any
        return tuple(_coerce(elem, v, f"{where}[{i}]") for i, v in enumerate(value))
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigurationError(f"{where}: expected true/false, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigurationError(f"{where}: expected an integer, got {value!r}")
        return value
    if tp is float:
        # PyYAML reads exponent literals without a dot (1e-5) as strings
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigurationError(f"{where}: expected a number, got {value!r}") from None
    if tp is str:
        if not isinstance(value, str):
            raise ConfigurationError(f"{where}: expected a string, got {value!r}")
        return value
    return value


def build(cls, data: Mapping, where: str = "config"):
    """Instantiate dataclass ``cls`` from a plain mapping, rejecting unknown keys."""
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls) if f.init}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigurationError(f"{where}: unknown key(s) {unknown}")
    kwargs = {k: _coerce(hints[k], v, f"{where}.{k}") for k, v in data.items()}
    try:
        return cls(**kwargs)
    except ConfigurationError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{where}: {exc}") from exc


def from_dict(doc: Mapping, base_dir: str | Path = ".") -> ExperimentConfig:
    doc = dict(doc or {})
    profile = doc.pop("profile", "synthetic")
    if profile not in PROFILES:
        raise ConfigurationError(f"unknown profile {profile!r}; expected one of {sorted(PROFILES)}")
    protocol = _deep_merge(PROFILES[profile], doc.pop("protocol", None) or {})

    dataset = doc.pop("dataset", None) or {"synthetic": {}}
    if not isinstance(dataset, Mapping) or len(dataset) != 1:
        raise ConfigurationError("dataset: give exactly one of 'synthetic' or 'csv'")
    (kind, body), = dataset.items()
    synthetic = csv = None
    if kind == "synthetic":
        synthetic = build(SyntheticSpec, body or {}, "dataset.synthetic")
    elif kind == "csv":
        src = build(CsvSource, body or {}, "dataset.csv")
        base = Path(base_dir)
        csv = CsvSource(str(base / src.path), str(base / src.schema))
    else:
        raise ConfigurationError(f"dataset: unknown source {kind!r}")

    data = dict(doc)
    data["protocol"] = protocol
    cfg_fields = {f.name for f in dataclasses.fields(ExperimentConfig)} - {"synthetic", "csv", "profile"}
    unknown = sorted(set(data) - cfg_fields)
    if unknown:
        raise ConfigurationError(f"config: unknown key(s) {unknown}")
    hints = typing.get_type_hints(ExperimentConfig)
    kwargs = {k: _coerce(hints[k], v, k) for k, v in data.items()}
    return ExperimentConfig(synthetic=synthetic, csv=csv, profile=profile, **kwargs)


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{path}: invalid YAML: {exc}") from exc
    if doc is not None and not isinstance(doc, Mapping):
        raise ConfigurationError(f"{path}: top level must be a mapping")
    return from_dict(doc or {}, base_dir=path.parent)


def to_dict(cfg: ExperimentConfig) -> dict:
    """Plain nested mapping of the resolved config (tuples become lists)."""

    def plain(x):
        if dataclasses.is_dataclass(x):
            return {f.name: plain(getattr(x, f.name)) for f in dataclasses.fields(x)}
        if isinstance(x, (list, tuple)):
            return [plain(v) for v in x]
        return x

    return plain(cfg)


def with_point(cfg: ExperimentConfig, axis: str | None, value) -> tuple[ProtocolConfig, float]:
    """Protocol config and alpha for one sweep point."""
    proto, alpha = cfg.protocol, cfg.alpha
    if axis == "alpha":
        alpha = float(value)
    elif axis == "temperature":
        d = proto.distill
        proto = dataclasses.replace(
            proto, distill=dataclasses.replace(d, t_sd=float(value), t_ed=float(value))
        )
    elif axis == "epsilon":
        proto = dataclasses.replace(
            proto, privacy=dataclasses.replace(proto.privacy, epsilon=value)
        )
    elif axis is not None:
        raise ConfigurationError(f"unknown sweep axis {axis!r}")
    return proto, alpha


__all__ = [
    "AXES",
    "CsvSource",
    "ExperimentConfig",
    "PROFILES",
    "Sweep",
    "build",
    "from_dict",
    "load_config",
    "to_dict",
    "with_point",
]
