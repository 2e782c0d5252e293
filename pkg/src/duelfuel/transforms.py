"""Laplace-Stieltjes transforms of the observation laws and the duel transforms built on them.

Every transform here reduces to the step (or delay) LST evaluated at a
shifted argument,

    sigma(theta + c_x (1 - x) + c_y (1 - y)),

so one family-specific expansion routine (:func:`lst_bijet`) serves the
gamma, phi and phi0 objects alike.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

MAX_TAYLOR_ORDER = 64


class DomainError(ValueError):
    """Transform argument lies outside the region where it is analytic."""


class LstKind(str, Enum):
    EXPONENTIAL = "exponential"
    DETERMINISTIC = "deterministic"
    ERLANG = "erlang"


@dataclass(frozen=True)
class LstFamily:
    """Law of a nonnegative random time, described by its LST.

    ``rate`` is used by exponential and Erlang laws, ``value`` by the
    deterministic law and ``shape`` by Erlang.
    """

    kind: LstKind
    rate: float = 1.0
    value: float = 0.0
    shape: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", LstKind(self.kind))
        if self.kind is LstKind.DETERMINISTIC:
            if not (math.isfinite(self.value) and self.value >= 0):
                raise ValueError(f"deterministic value must be finite and >= 0, got {self.value}")
        else:
            if not (math.isfinite(self.rate) and self.rate > 0):
                raise ValueError(f"rate must be finite and > 0, got {self.rate}")
            if self.kind is LstKind.ERLANG and (int(self.shape) != self.shape or self.shape < 1):
                raise ValueError(f"erlang shape must be a positive integer, got {self.shape}")

    @classmethod
    def exponential(cls, rate: float) -> "LstFamily":
        return cls(LstKind.EXPONENTIAL, rate=rate)

    @classmethod
    def deterministic(cls, value: float) -> "LstFamily":
        return cls(LstKind.DETERMINISTIC, value=value)

    @classmethod
    def erlang(cls, shape: int, rate: float) -> "LstFamily":
        return cls(LstKind.ERLANG, rate=rate, shape=int(shape))

    @property
    def pole(self) -> float:
        """Infimum of the analyticity domain in theta (``-inf`` for entire transforms)."""
        if self.kind is LstKind.DETERMINISTIC:
            return -math.inf
        return -self.rate

    def mean(self) -> float:
        """First moment, i.e. minus the LST derivative at zero."""
        if self.kind is LstKind.EXPONENTIAL:
            return 1.0 / self.rate
        if self.kind is LstKind.ERLANG:
            return self.shape / self.rate
        return self.value

    def kernel_code(self) -> tuple:
        """(code, p1, p2) triple consumed by the simulation kernels."""
        if self.kind is LstKind.EXPONENTIAL:
            return (0, float(self.rate), 0.0)
        if self.kind is LstKind.DETERMINISTIC:
            return (1, float(self.value), 0.0)
        return (2, float(self.shape), float(self.rate))


@dataclass(frozen=True)
class TaylorJet:
    """Univariate Taylor coefficients (derivative / n!) around ``base_point``."""

    base_point: float
    coefficients: tuple

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, x: float) -> float:
        h = x - self.base_point
        acc = 0.0
        for c in reversed(self.coefficients):
            acc = acc * h + c
        return acc

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coefficients, dtype=float)


def lst_eval(law: LstFamily, theta: float) -> float:
    """sigma(theta) = E[exp(-theta * Delta)]."""
    if theta <= law.pole:
        raise DomainError(f"argument outside analyticity domain: theta={theta} <= {law.pole}")
    if theta == 0.0:
        return 1.0
    if law.kind is LstKind.EXPONENTIAL:
        return law.rate / (law.rate + theta)
    if law.kind is LstKind.ERLANG:
        return (law.rate / (law.rate + theta)) ** law.shape
    return math.exp(-theta * law.value)


def gamma_eval(step_law: LstFamily, lambda_a: float, lambda_b: float, z: float, theta: float) -> float:
    """sigma(z, theta) = sigma(theta + (lambda_a - lambda_b)(1 - z))."""
    return lst_eval(step_law, theta + (lambda_a - lambda_b) * (1.0 - z))


def phi_eval(step_law: LstFamily, lam: float, x: float, theta: float) -> float:
    """E[x^X e^{-theta Delta}] for Poisson(lam * Delta) drains over one step."""
    return lst_eval(step_law, theta + lam * (1.0 - x))


def phi0_eval(delay_law: LstFamily, lam: float, x: float, theta: float) -> float:
    """Delay-period counterpart of :func:`phi_eval`."""
    return lst_eval(delay_law, theta + lam * (1.0 - x))


def lst_bijet(law: LstFamily, base: float, slope_x: float, slope_y: float,
              max_x: int, max_y: int) -> np.ndarray:
    """Coefficients of sigma(base + slope_x (1 - x) + slope_y (1 - y)) around (0, 0).

    Returns a ``(max_x + 1, max_y + 1)`` array whose (i, j) entry is the
    coefficient of x^i y^j. Exact for every supported family.
    """
    shift = base + slope_x + slope_y
    if shift <= law.pole:
        raise DomainError(f"argument outside analyticity domain: {shift} <= {law.pole}")
    i = np.arange(max_x + 1)[:, None]
    j = np.arange(max_y + 1)[None, :]
    if law.kind is LstKind.DETERMINISTIC:
        d = law.value
        fx = np.array([(d * slope_x) ** n / math.factorial(n) for n in range(max_x + 1)])
        fy = np.array([(d * slope_y) ** n / math.factorial(n) for n in range(max_y + 1)])
        return math.exp(-d * shift) * np.outer(fx, fy)

    denom = law.rate + shift
    rx = slope_x / denom
    ry = slope_y / denom
    if (max_x > 0 and max_y > 0 and abs(rx) + abs(ry) >= 1.0) or (max_x > 0 and abs(rx) >= 1.0) \
            or (max_y > 0 and abs(ry) >= 1.0):
        raise DomainError("series not valid to requested order: pole inside the unit disk")
    k = law.shape if law.kind is LstKind.ERLANG else 1
    # (c / (1 - rx x - ry y))^k expands with multinomial weights (i+j+k-1)! / (i! j! (k-1)!)
    weights = np.array(
        [[math.comb(a + b + k - 1, a + b) * math.comb(a + b, a) for b in range(max_y + 1)]
         for a in range(max_x + 1)],
        dtype=float,
    )
    return (law.rate / denom) ** k * weights * rx ** i * ry ** j


def lst_jet(law: LstFamily, base: float, slope: float, order: int) -> TaylorJet:
    """Taylor jet in x of sigma(base + slope * (1 - x)) at x = 0."""
    coeffs = lst_bijet(law, base, slope, 0.0, order, 0)[:, 0]
    return TaylorJet(0.0, tuple(float(c) for c in coeffs))


def taylor_in_x(kind: str, law: LstFamily, order: int, *, theta: float = 0.0,
                lam: float = 0.0, lambda_a: float = 0.0, lambda_b: float = 0.0,
                scale: float = 1.0) -> TaylorJet:
    """Expand one of the duel transforms in its generating variable around 0.

    ``kind`` is ``"gamma"`` for gamma(scale * x, theta) with the rate
    difference ``lambda_a - lambda_b``, or ``"phi"`` / ``"phi0"`` for the
    one-player transform with rate ``lam`` (pass the step or delay law
    accordingly).
    """
    if order < 0 or order > MAX_TAYLOR_ORDER:
        raise ValueError(f"order must be in [0, {MAX_TAYLOR_ORDER}], got {order}")
    if kind == "gamma":
        c = lambda_a - lambda_b
        return lst_jet(law, theta + c * (1.0 - scale), c * scale, order)
    if kind in ("phi", "phi0"):
        return lst_jet(law, theta, lam, order)
    raise ValueError(f"unknown transform kind {kind!r}")
