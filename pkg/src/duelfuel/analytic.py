"""Evaluation of the joint exit-time functional and the decision parameters read off it.

Three evaluators share the same series machinery:

* ``functional_phi_sum`` sums the L-term products index by index (the
  reference route for the closed form);
* ``functional_phi_closed`` evaluates the compact closed form;
* ``functional_phi_joint`` sums the exact per-index D-transforms of the
  exhaustion-rule game using the joint drain transform
  sigma(theta + lambda_a (1 - x) + lambda_b (1 - y)).

The first two treat the net drain X - Y as if it were Poisson with rate
lambda_a - lambda_b, which is exact only when lambda_b = 0. In that regime
all three coincide; otherwise the joint evaluator is the one that matches
simulation, and it backs the decision parameters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .model import DecisionConstants, FunctionalParams, GameSpec, HittingCdf, derive_constants
from .series import BiSeries, bs_ipow, bs_recip, d_inverse
from .transforms import TaylorJet, lst_bijet, lst_eval, lst_jet

GUARD_BAND = 8
TAIL_TOL = 1e-12
NEGLIGIBLE = 1e-17
RICHARDSON_STEPS = (1e-3, 5e-4, 2.5e-4)
RICHARDSON_RTOL = 1e-3


class SeriesDivergenceError(ValueError):
    pass


class DerivativeUnstableError(ArithmeticError):
    pass


class ThresholdUnreachableError(ValueError):
    pass


class Method(str, Enum):
    CLOSED = "closed"
    SUM = "sum"
    JOINT = "joint"


class Strategy(str, Enum):
    SHOOT_AT_THRESHOLD = "shoot_at_threshold"
    WAIT = "wait"
    GENERAL = "general"


@dataclass(frozen=True)
class ClosedFormTerms:
    Gamma: TaylorJet
    Gamma0: TaylorJet
    gamma1: float
    phi_x: TaylorJet
    phi_y: TaylorJet


@dataclass(frozen=True)
class PhiResult:
    value: float
    j_min_used: int
    m_cap_used: int
    method: Method
    truncation_j: int | None = None
    error_estimate: float = 0.0


@dataclass(frozen=True)
class DerivativeEstimate:
    value: float
    error: float

    def __float__(self):
        return float(self.value)


def optimal_threshold_time(cdf_a: HittingCdf, cdf_b: HittingCdf,
                           tol: float = 1e-9, t_max: float = 1e6) -> float:
    """Earliest t with P_a(t) + P_b(t) >= 1, by bracketing and bisection."""

    def reached(t):
        return cdf_a(t) + cdf_b(t) >= 1.0

    if reached(0.0):
        return 0.0
    hi = min(max(cdf_a.time_scale, cdf_b.time_scale, tol), t_max)
    while not reached(hi):
        if hi >= t_max:
            raise ThresholdUnreachableError("threshold unreachable")
        hi = min(2.0 * hi, t_max)
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if reached(mid):
            hi = mid
        else:
            lo = mid
    return hi


def recommend_strategy(spec: GameSpec) -> Strategy:
    if spec.capacity_a == spec.capacity_b:
        return Strategy.SHOOT_AT_THRESHOLD
    if spec.capacity_a < spec.capacity_b:
        return Strategy.WAIT
    return Strategy.GENERAL


def series_orders(spec: GameSpec) -> tuple[int, int]:
    return spec.capacity_a + GUARD_BAND, spec.capacity_b + GUARD_BAND


def closed_form_terms(spec: GameSpec, params: FunctionalParams,
                      order_x: int, order_y: int) -> ClosedFormTerms:
    step = spec.observation.step_law
    delay = spec.observation.delay_law
    diff = spec.lambda_a - spec.lambda_b
    w = params.z0 * params.z1
    theta = params.theta0 + params.theta1
    # gamma(w x, theta) = sigma(theta + diff (1 - w) + diff w (1 - x))
    base = theta + diff * (1.0 - w)
    return ClosedFormTerms(
        Gamma=lst_jet(step, base, diff * w, order_x),
        Gamma0=lst_jet(delay, base, diff * w, order_x),
        gamma1=lst_eval(step, params.theta1 + diff * (1.0 - params.z1)),
        phi_x=lst_jet(step, 0.0, spec.lambda_a, order_x),
        phi_y=lst_jet(step, 0.0, spec.lambda_b, order_y),
    )


def _as_series(terms: ClosedFormTerms, nx: int, ny: int):
    G = BiSeries.from_x(terms.Gamma.as_array(), nx, ny)
    G0 = BiSeries.from_x(terms.Gamma0.as_array(), nx, ny)
    px = BiSeries.from_x(terms.phi_x.as_array(), nx, ny)
    py = BiSeries.from_y(terms.phi_y.as_array(), nx, ny)
    return G, G0, px, py


def _contraction(params: FunctionalParams, terms: ClosedFormTerms, j_max: int | None) -> float:
    rho = abs(params.zeta * terms.Gamma.coefficients[0])
    if rho >= 1.0:
        raise SeriesDivergenceError(f"series divergence at given params (|zeta*Gamma(0)| = {rho:.6g})")
    if j_max is not None and rho ** j_max / (1.0 - rho) >= TAIL_TOL:
        raise SeriesDivergenceError(
            f"series divergence at given params: j_max={j_max} too small for |zeta*Gamma(0)| = {rho:.6g}")
    return rho


def _constants(spec, constants):
    return constants if constants is not None else derive_constants(spec)


def _sum_terms(first: BiSeries, ratio: BiSeries, j0: int, j_start: int, j_max: int):
    """Sum first * ratio^(j - j0) over j0 <= j <= j_max, keeping only j >= j_start.

    Stops once terms are negligible and shrinking. Returns (sum, last j, tail estimate).
    """
    acc = BiSeries.zeros(*first.orders)
    term = first
    prev_size = math.inf
    j = j0
    while j <= j_max:
        size = float(np.max(np.abs(term.coeffs)))
        if j >= j_start:
            acc = acc + term
            scale = max(float(np.max(np.abs(acc.coeffs))), 1e-300)
            if size == 0.0 or (size <= NEGLIGIBLE * scale and size < prev_size):
                n_cells = acc.coeffs.size
                return acc, j, size * n_cells
        prev_size = size
        term = term * ratio
        j += 1
    return acc, j_max, float(np.max(np.abs(term.coeffs))) * acc.coeffs.size


def functional_phi_sum(spec: GameSpec, params: FunctionalParams, j_max: int = 1000,
                       constants: DecisionConstants | None = None) -> PhiResult:
    """Index-by-index sum of L1j * L2j * (inner k-sum), then the inverse operator at (M_a, M_b).

    L1j = zeta^j Gamma0 Gamma^(j-1), L2j = gamma1 (1 - phi_x); the inner
    geometric sum over k >= j - m of phi_y^(k-j) (1 - phi_y) collapses to
    phi_y^(-m).
    """
    c = _constants(spec, constants)
    nx, ny = series_orders(spec)
    terms = closed_form_terms(spec, params, nx, ny)
    rho = _contraction(params, terms, j_max)
    G, G0, px, py = _as_series(terms, nx, ny)
    zeta = params.zeta

    acc, last_j, tail = _sum_terms(G0.scale(zeta), G.scale(zeta), 1, max(c.j_min, 1), j_max)
    if c.j_min <= 0:
        acc = acc + G0 * bs_recip(G)
    psi = acc * ((1.0 - px).scale(terms.gamma1))
    if c.m_cap:
        psi = psi * bs_ipow(py, -c.m_cap)
    value = d_inverse(psi, spec.capacity_a, spec.capacity_b)
    return PhiResult(value, c.j_min, c.m_cap, Method.SUM, truncation_j=last_j,
                     error_estimate=tail / max(1e-300, 1.0 - rho))


def _closed_core(spec: GameSpec, params: FunctionalParams, c: DecisionConstants,
                 m: int) -> PhiResult:
    nx, ny = series_orders(spec)
    terms = closed_form_terms(spec, params, nx, ny)
    _contraction(params, terms, None)
    G, G0, px, py = _as_series(terms, nx, ny)
    zG = G.scale(params.zeta)
    numerator = G0.scale(params.zeta * terms.gamma1) * (1.0 - px) * bs_ipow(zG, c.j_min)
    psi = numerator * bs_recip(1.0 - zG)
    if m:
        psi = psi * bs_ipow(py, -m)
    value = d_inverse(psi, spec.capacity_a, spec.capacity_b)
    return PhiResult(value, c.j_min, m, Method.CLOSED)


def functional_phi_closed(spec: GameSpec, params: FunctionalParams,
                          constants: DecisionConstants | None = None) -> PhiResult:
    """Closed form zeta Gamma0 gamma1 (1 - phi_x) (zeta Gamma)^jmin / (phi_y^m (1 - zeta Gamma))."""
    c = _constants(spec, constants)
    return _closed_core(spec, params, c, c.m_cap)


def functional_phi_equal_assets(spec: GameSpec, params: FunctionalParams,
                                constants: DecisionConstants | None = None) -> PhiResult:
    """Closed form for M_a == M_b, where the phi_y power drops out."""
    if spec.capacity_a != spec.capacity_b:
        raise ValueError(f"equal assets required, got M_a={spec.capacity_a}, M_b={spec.capacity_b}")
    c = _constants(spec, constants)
    return _closed_core(spec, params, c, 0)


def functional_phi_joint(spec: GameSpec, params: FunctionalParams, j_max: int = 10_000,
                         constants: DecisionConstants | None = None) -> PhiResult:
    """Exact functional of the exhaustion-rule game for z0 = z1 = 1.

    The event {nu = j, mu >= j - m} has D-transform
    (x^A[j-1] - x^A[j]) * y^B[j-m-1]; its expectation factorises over
    observation gaps into joint (x, y) transforms up to index j-m-1,
    x-only transforms after it, and the last-step factor
    sigma(theta1) - sigma(theta1 + lambda_a (1 - x)).
    """
    if params.z0 != 1.0 or params.z1 != 1.0:
        raise ValueError("joint evaluator needs z0 = z1 = 1")
    c = _constants(spec, constants)
    nx, ny = series_orders(spec)
    step = spec.observation.step_law
    delay = spec.observation.delay_law
    la, lb = spec.lambda_a, spec.lambda_b
    theta = params.theta0 + params.theta1
    zeta = params.zeta
    m = c.m_cap

    def bij(law, base, sx, sy):
        return BiSeries(lst_bijet(law, base, sx, sy, nx, ny))

    last = bij(step, params.theta1, 0.0, 0.0) - bij(step, params.theta1, la, 0.0)
    f_x = bij(step, theta, la, 0.0)
    f_xy = bij(step, theta, la, lb)

    total = BiSeries.zeros(nx, ny)

    last_j = 0
    tail = 0.0
    # indices 1..m: player B's constraint is vacuous, only x-transforms enter
    if m >= 1:
        head = bij(delay, theta, la, 0.0).scale(zeta)
        part, last_j, tail = _sum_terms(head, f_x.scale(zeta), 1, max(c.j_min, 1), min(m, j_max))
        total = total + part
    if m + 1 <= j_max:
        first = bij(delay, theta, la, lb) * bs_ipow(f_x, m)
        first = first.scale(zeta ** (m + 1))
        part, last_j, tail = _sum_terms(first, f_xy.scale(zeta), m + 1, max(c.j_min, m + 1), j_max)
        total = total + part
    psi = total * last
    if c.j_min <= 0:
        # nu = 0: A overflows during the delay, no last-step factor
        psi = psi + (bij(delay, params.theta1, 0.0, 0.0) - bij(delay, params.theta1, la, 0.0))
    value = d_inverse(psi, spec.capacity_a, spec.capacity_b)
    return PhiResult(value, c.j_min, m, Method.JOINT, truncation_j=last_j, error_estimate=tail)


_EVALUATORS = {
    Method.JOINT: functional_phi_joint,
    Method.SUM: functional_phi_sum,
}


def _evaluator(name: str):
    try:
        return _EVALUATORS[Method(name)]
    except (ValueError, KeyError):
        raise ValueError(f"derivatives need the 'joint' or 'sum' evaluator, got {name!r}") from None


def _richardson(diff_quotient) -> DerivativeEstimate:
    d = [diff_quotient(h) for h in RICHARDSON_STEPS]
    r1a = 2.0 * d[1] - d[0]
    r1b = 2.0 * d[2] - d[1]
    if abs(r1b - r1a) > RICHARDSON_RTOL * abs(r1b) + 1e-10:
        raise DerivativeUnstableError(f"derivative unstable: {r1a!r} vs {r1b!r}")
    r2 = (4.0 * r1b - r1a) / 3.0
    return DerivativeEstimate(r2, abs(r2 - r1b))


def expected_exit_index(spec: GameSpec, evaluator: str = "joint", j_max: int = 10_000,
                        constants: DecisionConstants | None = None) -> DerivativeEstimate:
    """d/dzeta of Phi(zeta, 1, 1, 0, 0) at zeta = 1 from the left."""
    fn = _evaluator(evaluator)
    c = _constants(spec, constants)

    def phi(zeta):
        return fn(spec, FunctionalParams(zeta=zeta), j_max=j_max, constants=c).value

    at_one = phi(1.0)
    return _richardson(lambda h: (at_one - phi(1.0 - h)) / h)


def expected_preexit_time(spec: GameSpec, evaluator: str = "joint", j_max: int = 10_000,
                          constants: DecisionConstants | None = None) -> DerivativeEstimate:
    """-d/dtheta0 of Phi(1, 1, 1, theta0, 0) at theta0 = 0 from the right."""
    fn = _evaluator(evaluator)
    c = _constants(spec, constants)

    def phi(theta):
        return fn(spec, FunctionalParams(theta0=theta), j_max=j_max, constants=c).value

    at_zero = phi(0.0)
    return _richardson(lambda h: -(phi(h) - at_zero) / h)
