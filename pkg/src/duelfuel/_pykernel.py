"""Pure-Python reference kernels.

Mirrors ``_ckernel.pyx`` operation for operation so that both backends
produce bit-identical Monte Carlo output for the same seeds.
"""
import math

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
INV_2_53 = 1.0 / 9007199254740992.0
POISSON_CHUNK = 30.0
POISSON_MAX_K = 10000

LAW_EXPONENTIAL = 0
LAW_DETERMINISTIC = 1
LAW_ERLANG = 2

RULE_EXHAUSTION = 0
RULE_DOMINANCE = 1

STATUS_OK = 0
STATUS_CAPPED = 1


def _mix(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def _rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256:
    """xoshiro256** keyed by (master_seed, stream index)."""

    __slots__ = ("s0", "s1", "s2", "s3")

    def __init__(self, master_seed, index):
        x = _mix((master_seed & MASK64) ^ _mix((index + GOLDEN) & MASK64))
        state = []
        for _ in range(4):
            x = (x + GOLDEN) & MASK64
            state.append(_mix(x))
        self.s0, self.s1, self.s2, self.s3 = state

    def next_u64(self):
        s0, s1, s2, s3 = self.s0, self.s1, self.s2, self.s3
        result = (_rotl((s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self.s0, self.s1, self.s2, self.s3 = s0, s1, s2, s3
        return result

    def uniform(self):
        # [0, 1)
        return (self.next_u64() >> 11) * INV_2_53

    def uniform_open(self):
        # (0, 1)
        return ((self.next_u64() >> 11) + 0.5) * INV_2_53


def sample_law(rng, code, p1, p2):
    if code == LAW_EXPONENTIAL:
        return -math.log(rng.uniform_open()) / p1
    if code == LAW_DETERMINISTIC:
        return p1
    total = 0.0
    for _ in range(int(p1)):
        total += -math.log(rng.uniform_open()) / p2
    return total


def _poisson_small(rng, mean):
    u = rng.uniform()
    p = math.exp(-mean)
    cdf = p
    k = 0
    while u > cdf and k < POISSON_MAX_K:
        k += 1
        p *= mean / k
        cdf += p
    return k


def sample_poisson(rng, mean):
    if mean <= 0.0:
        return 0
    k = 0
    while mean > POISSON_CHUNK:
        k += _poisson_small(rng, POISSON_CHUNK)
        mean -= POISSON_CHUNK
    return k + _poisson_small(rng, mean)


def simulate_one(rng, law0, law, lam_a, lam_b, cap_a, cap_b, rule, max_epochs, trace=None):
    """Run one duel path; returns the summary tuple.

    ``trace``, when given, is a dict of lists that receives every epoch.
    Summary layout: (status, nu, mu, a_pre, a_nu, b_pre, b_mu, tau_pre, tau_nu, tau_mu);
    an index of -1 means the exit never happens.
    """
    tau = sample_law(rng, law0[0], law0[1], law0[2])
    x = sample_poisson(rng, lam_a * tau)
    y = sample_poisson(rng, lam_b * tau) if lam_b > 0.0 else 0
    a = x
    b = y
    prev_a = 0
    prev_b = 0
    prev_tau = 0.0
    if trace is not None:
        trace["tau"].append(tau)
        trace["delta"].append(tau)
        trace["x"].append(x)
        trace["y"].append(y)
        trace["a"].append(a)
        trace["b"].append(b)

    nu = mu = -1
    a_pre = a_nu = b_pre = b_mu = 0
    tau_pre = tau_nu = 0.0
    tau_mu = math.inf
    a_possible = lam_a > 0.0
    b_possible = lam_b > 0.0
    k = 0
    while True:
        if rule == RULE_EXHAUSTION:
            if nu < 0 and a > cap_a:
                nu = k
                a_pre, a_nu, tau_pre, tau_nu = prev_a, a, prev_tau, tau
            if mu < 0 and b > cap_b:
                mu = k
                b_pre, b_mu, tau_mu = prev_b, b, tau
            if (nu >= 0 or not a_possible) and (mu >= 0 or not b_possible):
                break
        else:
            if cap_a - a >= cap_b - b:
                nu = mu = k
                a_pre, a_nu, tau_pre, tau_nu = prev_a, a, prev_tau, tau
                b_pre, b_mu, tau_mu = prev_b, b, tau
                break
        if k >= max_epochs:
            return (STATUS_CAPPED, nu, mu, a_pre, a_nu, b_pre, b_mu, tau_pre, tau_nu, tau_mu)
        d = sample_law(rng, law[0], law[1], law[2])
        prev_tau = tau
        prev_a = a
        prev_b = b
        tau += d
        x = sample_poisson(rng, lam_a * d)
        y = sample_poisson(rng, lam_b * d) if lam_b > 0.0 else 0
        a += x
        b += y
        k += 1
        if trace is not None:
            trace["tau"].append(tau)
            trace["delta"].append(d)
            trace["x"].append(x)
            trace["y"].append(y)
            trace["a"].append(a)
            trace["b"].append(b)

    if mu < 0:
        # player B never exits: its running totals stay at the final value
        b_pre = b_mu = b
    if nu < 0:
        a_pre = a_nu = a
        tau_pre = tau_nu = math.inf
    return (STATUS_OK, nu, mu, a_pre, a_nu, b_pre, b_mu, tau_pre, tau_nu, tau_mu)


def simulate_batch(master_seed, start, law0, law, lam_a, lam_b, cap_a, cap_b, rule,
                   max_epochs, status, nu, mu, a_pre, a_nu, b_pre, b_mu,
                   tau_pre, tau_nu, tau_mu):
    """Fill output arrays for replications ``start .. start+len(status)``."""
    for i in range(status.shape[0]):
        rng = Xoshiro256(master_seed, start + i)
        r = simulate_one(rng, law0, law, lam_a, lam_b, cap_a, cap_b, rule, max_epochs)
        status[i], nu[i], mu[i] = r[0], r[1], r[2]
        a_pre[i], a_nu[i], b_pre[i], b_mu[i] = r[3], r[4], r[5], r[6]
        tau_pre[i], tau_nu[i], tau_mu[i] = r[7], r[8], r[9]


def trunc_conv2d(a, b):
    """Cauchy product of two equally shaped coefficient grids, truncated to that shape."""
    nx, ny = a.shape
    out = np.zeros((nx, ny))
    for i in range(nx):
        for j in range(ny):
            c = a[i, j]
            if c != 0.0:
                out[i:, j:] += c * b[: nx - i, : ny - j]
    return out
