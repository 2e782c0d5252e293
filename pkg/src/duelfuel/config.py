"""YAML run configuration: game parameters, functional arguments and run settings.

Example::

    game:
      lambda_a: 2.0
      lambda_b: 1.0
      capacity_a: 4
      capacity_b: 4
      exit_rule: exhaustion
      step_law: {family: exponential, rate: 1.0}
      delay_law: {family: exponential, rate: 1.0}
      cdf_a: {family: exponential, rate: 1.0}
      cdf_b: {family: exponential, rate: 1.0}
    functional: {zeta: 1.0, z0: 1.0, z1: 1.0, theta0: 0.0, theta1: 0.0}
    run: {n_replications: 100000, master_seed: 20230817, j_max: 1000, output_path: out.csv}
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .model import (ExitRule, FunctionalParams, GameSpec, HittingCdf, MarkedProcessSpec,
                    ObservationSpec, validate_spec)
from .transforms import LstFamily


class ConfigError(ValueError):
    """Raised with a message naming the offending field."""


@dataclass(frozen=True)
class RunSettings:
    n_replications: int
    master_seed: int
    j_max: int = 1000
    output_path: str | None = None


@dataclass(frozen=True)
class RunConfig:
    game: GameSpec
    functional: FunctionalParams = field(default_factory=FunctionalParams)
    run: RunSettings = field(default_factory=lambda: RunSettings(100_000, 0))


def _require(table: dict, key: str, where: str):
    if not isinstance(table, dict):
        raise ConfigError(f"{where}: expected a mapping")
    if key not in table:
        raise ConfigError(f"missing required field '{where}.{key}'")
    return table[key]


def _number(table, key, where, default=None):
    v = table.get(key, default) if default is not None else _require(table, key, where)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"field '{where}.{key}' must be a number, got {v!r}")
    return float(v)


def _integer(table, key, where, default=None):
    v = table.get(key, default) if default is not None else _require(table, key, where)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"field '{where}.{key}' must be an integer, got {v!r}")
    return v


def _lst(table, where) -> LstFamily:
    family = _require(table, "family", where)
    try:
        if family == "exponential":
            return LstFamily.exponential(_number(table, "rate", where))
        if family == "deterministic":
            return LstFamily.deterministic(_number(table, "value", where))
        if family == "erlang":
            return LstFamily.erlang(_integer(table, "shape", where), _number(table, "rate", where))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"field '{where}': {exc}") from None
    raise ConfigError(f"field '{where}.family': unknown law {family!r}")


def _cdf(table, where) -> HittingCdf:
    family = _require(table, "family", where)
    if family == "exponential":
        return HittingCdf.exponential(_number(table, "rate", where))
    if family == "weibull":
        return HittingCdf.weibull(_number(table, "shape", where), _number(table, "scale", where))
    if family == "deterministic_step":
        return HittingCdf.deterministic_step(_number(table, "jump_time", where))
    raise ConfigError(f"field '{where}.family': unknown hitting CDF {family!r}")


def game_from_dict(g: dict) -> GameSpec:
    rule = g.get("exit_rule", "exhaustion")
    try:
        rule = ExitRule(rule)
    except ValueError:
        raise ConfigError(f"field 'game.exit_rule': unknown rule {rule!r}") from None
    spec = GameSpec(
        player_a=MarkedProcessSpec(_number(g, "lambda_a", "game")),
        player_b=MarkedProcessSpec(_number(g, "lambda_b", "game")),
        observation=ObservationSpec(
            delay_law=_lst(_require(g, "delay_law", "game"), "game.delay_law"),
            step_law=_lst(_require(g, "step_law", "game"), "game.step_law"),
        ),
        capacity_a=_integer(g, "capacity_a", "game"),
        capacity_b=_integer(g, "capacity_b", "game"),
        cdf_a=_cdf(_require(g, "cdf_a", "game"), "game.cdf_a"),
        cdf_b=_cdf(_require(g, "cdf_b", "game"), "game.cdf_b"),
        exit_rule=rule,
    )
    problems = validate_spec(spec)
    if problems:
        raise ConfigError("invalid game: " + "; ".join(problems))
    return spec


def config_from_dict(data) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    game = game_from_dict(_require(data, "game", "config"))

    f = data.get("functional") or {}
    try:
        functional = FunctionalParams(
            zeta=_number(f, "zeta", "functional", 1.0),
            z0=_number(f, "z0", "functional", 1.0),
            z1=_number(f, "z1", "functional", 1.0),
            theta0=_number(f, "theta0", "functional", 0.0),
            theta1=_number(f, "theta1", "functional", 0.0),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"field 'functional': {exc}") from None

    r = _require(data, "run", "config")
    n = _integer(r, "n_replications", "run")
    if n < 1:
        raise ConfigError(f"field 'run.n_replications' must be positive, got {n}")
    j_max = _integer(r, "j_max", "run", 1000)
    if j_max < 1:
        raise ConfigError(f"field 'run.j_max' must be positive, got {j_max}")
    seed = _integer(r, "master_seed", "run")
    if not (-(1 << 63) <= seed < (1 << 64)):
        raise ConfigError("field 'run.master_seed' must fit in 64 bits")
    out = r.get("output_path")
    return RunConfig(game, functional, RunSettings(n, seed, j_max, None if out is None else str(out)))


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except UnicodeDecodeError as exc:
        raise ConfigError(f"malformed config: not UTF-8 text (byte {exc.start})") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"malformed config{where}: {getattr(exc, 'problem', exc)}") from None
    return config_from_dict(data)


def _lst_dict(law: LstFamily) -> dict:
    if law.kind.value == "exponential":
        return {"family": "exponential", "rate": law.rate}
    if law.kind.value == "deterministic":
        return {"family": "deterministic", "value": law.value}
    return {"family": "erlang", "shape": law.shape, "rate": law.rate}


def _cdf_dict(cdf: HittingCdf) -> dict:
    if cdf.kind.value == "exponential":
        return {"family": "exponential", "rate": cdf.rate}
    if cdf.kind.value == "weibull":
        return {"family": "weibull", "shape": cdf.shape, "scale": cdf.scale}
    return {"family": "deterministic_step", "jump_time": cdf.jump_time}


def config_to_dict(cfg: RunConfig) -> dict:
    g = cfg.game
    run = {
        "n_replications": cfg.run.n_replications,
        "master_seed": cfg.run.master_seed,
        "j_max": cfg.run.j_max,
    }
    if cfg.run.output_path is not None:
        run["output_path"] = cfg.run.output_path
    return {
        "game": {
            "lambda_a": g.lambda_a,
            "lambda_b": g.lambda_b,
            "capacity_a": g.capacity_a,
            "capacity_b": g.capacity_b,
            "exit_rule": g.exit_rule.value,
            "step_law": _lst_dict(g.observation.step_law),
            "delay_law": _lst_dict(g.observation.delay_law),
            "cdf_a": _cdf_dict(g.cdf_a),
            "cdf_b": _cdf_dict(g.cdf_b),
        },
        "functional": {
            "zeta": cfg.functional.zeta,
            "z0": cfg.functional.z0,
            "z1": cfg.functional.z1,
            "theta0": cfg.functional.theta0,
            "theta1": cfg.functional.theta1,
        },
        "run": run,
    }


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False)
