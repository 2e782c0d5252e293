"""Parameter types for one duel instance and the decision constants derived from them."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .transforms import LstFamily, LstKind


class InvalidSpecError(ValueError):
    pass


class CdfKind(str, Enum):
    EXPONENTIAL = "exponential"
    WEIBULL = "weibull"
    DETERMINISTIC_STEP = "deterministic_step"


class ExitRule(str, Enum):
    EXHAUSTION = "exhaustion"
    DOMINANCE = "dominance"


@dataclass(frozen=True)
class HittingCdf:
    """Probability that a shot fired at time t hits the opponent."""

    kind: CdfKind
    rate: float = 1.0
    shape: float = 1.0
    scale: float = 1.0
    jump_time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", CdfKind(self.kind))

    @classmethod
    def exponential(cls, rate: float) -> "HittingCdf":
        return cls(CdfKind.EXPONENTIAL, rate=rate)

    @classmethod
    def weibull(cls, shape: float, scale: float) -> "HittingCdf":
        return cls(CdfKind.WEIBULL, shape=shape, scale=scale)

    @classmethod
    def deterministic_step(cls, jump_time: float) -> "HittingCdf":
        return cls(CdfKind.DETERMINISTIC_STEP, jump_time=jump_time)

    def __call__(self, t: float) -> float:
        if t < 0:
            return 0.0
        if self.kind is CdfKind.EXPONENTIAL:
            return -math.expm1(-self.rate * t)
        if self.kind is CdfKind.WEIBULL:
            return -math.expm1(-((t / self.scale) ** self.shape))
        return 1.0 if t >= self.jump_time else 0.0

    @property
    def time_scale(self) -> float:
        if self.kind is CdfKind.EXPONENTIAL:
            return 1.0 / self.rate
        if self.kind is CdfKind.WEIBULL:
            return self.scale
        return self.jump_time

    def violations(self, label: str) -> list[str]:
        out = []
        if self.kind is CdfKind.EXPONENTIAL and not (math.isfinite(self.rate) and self.rate > 0):
            out.append(f"{label} rate must be positive")
        if self.kind is CdfKind.WEIBULL:
            if not (math.isfinite(self.shape) and self.shape > 0):
                out.append(f"{label} shape must be positive")
            if not (math.isfinite(self.scale) and self.scale > 0):
                out.append(f"{label} scale must be positive")
        if self.kind is CdfKind.DETERMINISTIC_STEP and not (
                math.isfinite(self.jump_time) and self.jump_time >= 0):
            out.append(f"{label} jump_time must be nonnegative")
        return out


@dataclass(frozen=True)
class MarkedProcessSpec:
    """Unit-mark Poisson drain process of one player."""

    intensity: float


@dataclass(frozen=True)
class ObservationSpec:
    """Delayed renewal observation process: first epoch ~ delay_law, gaps ~ step_law."""

    delay_law: LstFamily
    step_law: LstFamily


@dataclass(frozen=True)
class GameSpec:
    player_a: MarkedProcessSpec
    player_b: MarkedProcessSpec
    observation: ObservationSpec
    capacity_a: int
    capacity_b: int
    cdf_a: HittingCdf
    cdf_b: HittingCdf
    exit_rule: ExitRule = ExitRule.EXHAUSTION

    def __post_init__(self):
        object.__setattr__(self, "exit_rule", ExitRule(self.exit_rule))

    @property
    def lambda_a(self) -> float:
        return self.player_a.intensity

    @property
    def lambda_b(self) -> float:
        return self.player_b.intensity


@dataclass(frozen=True)
class DecisionConstants:
    t_star: float
    sigma_bar: float
    j_min: int
    m_cap: int
    m_ab: int


@dataclass(frozen=True)
class FunctionalParams:
    """Arguments (zeta, z0, z1, theta0, theta1) of the joint functional."""

    zeta: float = 1.0
    z0: float = 1.0
    z1: float = 1.0
    theta0: float = 0.0
    theta1: float = 0.0

    def __post_init__(self):
        for name in ("zeta", "z0", "z1"):
            v = getattr(self, name)
            if not (0.0 < v <= 1.0):
                raise ValueError(f"{name} must lie in (0, 1], got {v}")
        for name in ("theta0", "theta1"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0.0):
                raise ValueError(f"{name} must be a finite nonnegative real, got {v}")


def canonical_spec(**overrides) -> GameSpec:
    """Reference configuration: delta=1, lambda_a=2, lambda_b=1, M_a=M_b=4, unit-rate CDFs."""
    params = dict(
        lambda_a=2.0, lambda_b=1.0, delta=1.0, delay_rate=1.0,
        capacity_a=4, capacity_b=4, exit_rule=ExitRule.EXHAUSTION,
        cdf_a=HittingCdf.exponential(1.0), cdf_b=HittingCdf.exponential(1.0),
    )
    params.update(overrides)
    return GameSpec(
        player_a=MarkedProcessSpec(params["lambda_a"]),
        player_b=MarkedProcessSpec(params["lambda_b"]),
        observation=ObservationSpec(
            delay_law=params.get("delay_law") or LstFamily.exponential(params["delay_rate"]),
            step_law=params.get("step_law") or LstFamily.exponential(params["delta"]),
        ),
        capacity_a=params["capacity_a"],
        capacity_b=params["capacity_b"],
        cdf_a=params["cdf_a"],
        cdf_b=params["cdf_b"],
        exit_rule=params["exit_rule"],
    )


def _is_count(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool) and v >= 0


def validate_spec(spec: GameSpec) -> list[str]:
    """List every violated invariant; empty when the spec is usable."""
    problems = []
    la, lb = spec.player_a.intensity, spec.player_b.intensity
    if not (isinstance(la, (int, float)) and math.isfinite(la) and la > 0):
        problems.append("player_a intensity must be positive")
    if not (isinstance(lb, (int, float)) and math.isfinite(lb) and lb >= 0):
        problems.append("player_b intensity must be nonnegative")

    for label, law in (("delay_law", spec.observation.delay_law),
                       ("step_law", spec.observation.step_law)):
        if law.kind is LstKind.DETERMINISTIC and law.value <= 0:
            problems.append(f"{label} must describe a strictly positive time")
    if not (math.isfinite(spec.observation.step_law.mean()) and spec.observation.step_law.mean() > 0):
        problems.append("step_law mean must be finite and positive")

    if not _is_count(spec.capacity_a):
        problems.append("capacity_a must be a nonnegative integer")
    if not _is_count(spec.capacity_b):
        problems.append("capacity_b must be a nonnegative integer")
    if _is_count(spec.capacity_a) and _is_count(spec.capacity_b) \
            and spec.capacity_a == 0 and spec.capacity_b == 0:
        problems.append("at least one capacity > 0")

    problems.extend(spec.cdf_a.violations("cdf_a"))
    problems.extend(spec.cdf_b.violations("cdf_b"))
    return problems


def derive_constants(spec: GameSpec, t_star: float | None = None) -> DecisionConstants:
    """Threshold time, mean observation gap and the integer cut-offs used by the indicators."""
    if t_star is None:
        from .analytic import optimal_threshold_time

        t_star = optimal_threshold_time(spec.cdf_a, spec.cdf_b)
    sigma_bar = spec.observation.step_law.mean()
    if not (math.isfinite(sigma_bar) and sigma_bar > 0):
        raise InvalidSpecError("invalid observation law")
    m_ab = abs(spec.capacity_a - spec.capacity_b)
    return DecisionConstants(
        t_star=t_star,
        sigma_bar=sigma_bar,
        j_min=math.ceil(t_star / sigma_bar),
        m_cap=math.floor(m_ab / sigma_bar),
        m_ab=m_ab,
    )
