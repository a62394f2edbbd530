"""YAML experiment configuration.

Every key is optional; absent keys take the scenario defaults. A document
looks like::

    seed: 7
    realizations: 150
    env:
      p_bs: 20 dBm
      r_th: 1.0
    channel:
      beta: 0.05
    agent:
      episodes: 2000
    sweep:
      p_bs_dbm: [0, 5, 10, 15, 20, 25, 30]
      beta: [0.05, 0.1]
      retrain: per_beta

Powers accept a unit suffix (``dBm``, ``W`` or ``mW``); bare numbers are watts.
"""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .channel import ChannelParams, dbm_to_watt, watt_to_dbm
from .ddpg import AgentConfig
from .env import EnvConfig
from .geometry import RwpParams, WaveguideLayout

RETRAIN_MODES = ("per_beta", "never")


class ConfigError(ValueError):
    """Invalid configuration; ``problems`` lists every issue found."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("\n".join(self.problems))


@dataclass(frozen=True)
class SweepSettings:
    p_bs_dbm: tuple[float, ...] = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    beta: tuple[float, ...] = (0.05, 0.1)
    retrain: str = "per_beta"


@dataclass(frozen=True)
class TraceSettings:
    r_th: tuple[float, ...] = (1.0, 2.0)
    retrain: bool = True


@dataclass(frozen=True)
class OracleSettings:
    resolution: float = 1.0
    mode: str = "auto"


@dataclass(frozen=True)
class ExperimentConfig:
    env: EnvConfig = field(default_factory=EnvConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    seed: int = 0
    out: str | None = None
    realizations: int = 150
    sweep: SweepSettings = field(default_factory=SweepSettings)
    trace: TraceSettings = field(default_factory=TraceSettings)
    oracle: OracleSettings = field(default_factory=OracleSettings)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return dataclasses.replace(self, seed=int(seed))

    def with_env(self, **kw) -> "ExperimentConfig":
        """Copy with env fields replaced; ``beta`` is routed to the channel."""
        env = self.env
        if "beta" in kw:
            env = dataclasses.replace(env, channel=dataclasses.replace(env.channel, beta=kw.pop("beta")))
        return dataclasses.replace(self, env=dataclasses.replace(env, **kw))


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_POWER = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(dBm|mW|W)?\s*$")

_FLOAT = re.compile(r"^[-+]?(?:\d+\.?\d*|\.\d+)[eE][-+]?\d+$")
_ENV_KEYS = {"p_bs", "r_th", "min_spacing", "horizon", "pen1", "pen2", "pen3", "obs_ref_distance"}
_TUPLE_KEYS = {"lengths", "heights", "offsets", "pa_counts", "x_range", "y_range", "speed_range", "hidden", "p_bs_dbm", "beta", "r_th"}


def parse_power(value) -> float:
    """Watts from a number (watts) or a unit-tagged string like ``"-5 dBm"``."""
    if isinstance(value, bool):
        raise ValueError(f"not a power: {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    m = _POWER.match(str(value))
    if not m:
        raise ValueError(f"cannot parse power {value!r}; expected e.g. '20 dBm' or '0.1 W'")
    number, unit = float(m.group(1)), m.group(2) or "W"
    return {"dBm": dbm_to_watt, "mW": lambda v: v * 1e-3, "W": lambda v: v}[unit](number)


def _fields(cls) -> set[str]:
    return {f.name for f in dataclasses.fields(cls)}


_SECTIONS = {
    "env": _ENV_KEYS,
    "layout": _fields(WaveguideLayout),
    "channel": _fields(ChannelParams),
    "rwp": _fields(RwpParams),
    "agent": _fields(AgentConfig),
    "sweep": _fields(SweepSettings),
    "trace": _fields(TraceSettings),
    "oracle": _fields(OracleSettings),
}
_TOP = {"seed", "out", "realizations"}


def _to_python(node: yaml.Node, lines: dict, path: tuple):
    """Plain Python data from a composed YAML node, recording key lines."""
    if isinstance(node, yaml.MappingNode):
        out = {}
        for k, v in node.value:
            key = k.value
            if key in out:
                raise ConfigError([f"line {k.start_mark.line + 1}: duplicate key {'.'.join(path + (key,))!r}"])
            lines[path + (key,)] = k.start_mark.line + 1
            out[key] = _to_python(v, lines, path + (key,))
        return out
    if isinstance(node, yaml.SequenceNode):
        return [_to_python(v, lines, path) for v in node.value]
    value = yaml.SafeLoader("").construct_object(node, deep=True)
    if isinstance(value, str) and _FLOAT.match(value):
        # YAML 1.1 reads "1e6" as a string
        return float(value)
    return value


def _parse(text: str, source: str) -> tuple[dict, dict]:
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        raise ConfigError([f"{source}: parse error at {where}: {exc.problem or exc}"]) from None
    if node is None:
        return {}, {}
    if not isinstance(node, yaml.MappingNode):
        raise ConfigError([f"{source}: line {node.start_mark.line + 1}: top level must be a mapping"])
    lines: dict = {}
    return _to_python(node, lines, ()), lines


def _where(lines, *path) -> str:
    line = lines.get(tuple(path))
    return f"line {line}: " if line else ""


def build_config(data: dict, lines: dict | None = None) -> ExperimentConfig:
    """Validate a nested mapping into an :class:`ExperimentConfig`.

    Problems are collected across all sections before raising.
    """
    lines = lines or {}
    problems: list[str] = []
    sections: dict[str, dict] = {}
    top: dict[str, Any] = {}

    for key, value in data.items():
        if key in _TOP:
            top[key] = value
        elif key in _SECTIONS:
            if value is None:
                value = {}
            if not isinstance(value, dict):
                problems.append(f"{_where(lines, key)}section {key!r} must be a mapping")
                continue
            clean = {}
            for k, v in value.items():
                if k not in _SECTIONS[key]:
                    problems.append(f"{_where(lines, key, k)}unknown key '{key}.{k}'")
                    continue
                if k in _TUPLE_KEYS and isinstance(v, list):
                    v = tuple(v)
                clean[k] = v
            sections[key] = clean
        else:
            problems.append(f"{_where(lines, key)}unknown key {key!r}")

    def build(name, cls, kw):
        try:
            return cls(**kw)
        except (TypeError, ValueError) as exc:
            for msg in str(exc).split("; "):
                problems.append(f"{name}: {msg}")
            return None

    env_kw = dict(sections.get("env", {}))
    if "p_bs" in env_kw:
        try:
            env_kw["p_bs"] = parse_power(env_kw["p_bs"])
        except ValueError as exc:
            problems.append(f"{_where(lines, 'env', 'p_bs')}env.p_bs: {exc}")
            del env_kw["p_bs"]

    layout = build("layout", WaveguideLayout, sections.get("layout", {}))
    channel = build("channel", ChannelParams, sections.get("channel", {}))
    rwp = build("rwp", RwpParams, sections.get("rwp", {}))
    agent = build("agent", AgentConfig, sections.get("agent", {}))
    sweep = build("sweep", SweepSettings, sections.get("sweep", {}))
    trace = build("trace", TraceSettings, sections.get("trace", {}))
    oracle = build("oracle", OracleSettings, sections.get("oracle", {}))
    env = None
    if layout and channel and rwp:
        env = build("env", EnvConfig, dict(env_kw, layout=layout, channel=channel, rwp=rwp))

    if sweep is not None:
        if sweep.retrain not in RETRAIN_MODES:
            problems.append(f"sweep: retrain must be one of {RETRAIN_MODES}, got {sweep.retrain!r}")
        if not sweep.p_bs_dbm or not sweep.beta:
            problems.append("sweep: p_bs_dbm and beta lists must be non-empty")
        if any(b < 0 for b in sweep.beta):
            problems.append("sweep: beta values must be non-negative")
    if trace is not None and (not trace.r_th or any(r < 0 for r in trace.r_th)):
        problems.append("trace: r_th must be a non-empty list of non-negative values")
    if oracle is not None:
        if not oracle.resolution > 0:
            problems.append("oracle: resolution must be positive")
        if oracle.mode not in ("auto", "exact", "coordinate"):
            problems.append(f"oracle: unknown mode {oracle.mode!r}")

    seed = top.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        problems.append(f"{_where(lines, 'seed')}seed must be a non-negative integer")
    realizations = top.get("realizations", 150)
    if isinstance(realizations, bool) or not isinstance(realizations, int) or realizations < 1:
        problems.append(f"{_where(lines, 'realizations')}realizations must be an integer >= 1")
    out = top.get("out")
    if out is not None and not isinstance(out, str):
        problems.append(f"{_where(lines, 'out')}out must be a path string")

    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(env, agent, seed, out, realizations, sweep, trace, oracle)


def load_config(path) -> ExperimentConfig:
    """Read a YAML config file; an empty file yields the defaults."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([f"{path}: {exc.strerror or exc}"]) from None
    data, lines = _parse(text, str(path))
    try:
        return build_config(data, lines)
    except ConfigError as exc:
        raise ConfigError([f"{path}: {p}" for p in exc.problems]) from None


def loads_config(text: str) -> ExperimentConfig:
    data, lines = _parse(text, "<string>")
    return build_config(data, lines)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Fully resolved, reloadable mapping (powers written with units)."""

    def plain(obj):
        d = {}
        for f in dataclasses.fields(obj):
            v = getattr(obj, f.name)
            d[f.name] = list(v) if isinstance(v, tuple) else v
        return d

    env = cfg.env
    env_section = {k: getattr(env, k) for k in sorted(_ENV_KEYS)}
    env_section["p_bs"] = f"{env.p_bs!r} W"
    return {
        "seed": cfg.seed,
        "out": cfg.out,
        "realizations": cfg.realizations,
        "env": env_section,
        "layout": plain(env.layout),
        "channel": plain(env.channel),
        "rwp": plain(env.rwp),
        "agent": plain(cfg.agent),
        "sweep": plain(cfg.sweep),
        "trace": plain(cfg.trace),
        "oracle": plain(cfg.oracle),
    }


def dump_config(cfg: ExperimentConfig, path) -> Path:
    path = Path(path)
    path.write_text(yaml.safe_dump(config_to_dict(cfg), sort_keys=False))
    return path


def p_bs_dbm(cfg: ExperimentConfig) -> float:
    return watt_to_dbm(cfg.env.p_bs)
