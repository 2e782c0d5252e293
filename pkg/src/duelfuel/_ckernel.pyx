# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: duel path simulation and truncated 2-D Cauchy product.

Every operation follows ``_pykernel`` in the same order; results are
bit-identical to the fallback.
"""
import numpy as np

from libc.math cimport exp, log, INFINITY
from libc.stdint cimport uint64_t, int64_t, int8_t

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double INV_2_53 = 1.0 / 9007199254740992.0
cdef double POISSON_CHUNK = 30.0
cdef int64_t POISSON_MAX_K = 10000


cdef struct Rng:
    uint64_t s0
    uint64_t s1
    uint64_t s2
    uint64_t s3


cdef inline uint64_t _mix(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t _rotl(uint64_t x, int k) noexcept nogil:
    return (x << k) | (x >> (64 - k))


cdef inline void _seed(Rng* r, uint64_t master, uint64_t index) noexcept nogil:
    cdef uint64_t x = _mix(master ^ _mix(index + GOLDEN))
    x += GOLDEN
    r.s0 = _mix(x)
    x += GOLDEN
    r.s1 = _mix(x)
    x += GOLDEN
    r.s2 = _mix(x)
    x += GOLDEN
    r.s3 = _mix(x)


cdef inline uint64_t _next(Rng* r) noexcept nogil:
    cdef uint64_t result = _rotl(r.s1 * 5, 7) * 9
    cdef uint64_t t = r.s1 << 17
    r.s2 ^= r.s0
    r.s3 ^= r.s1
    r.s1 ^= r.s2
    r.s0 ^= r.s3
    r.s2 ^= t
    r.s3 = _rotl(r.s3, 45)
    return result


cdef inline double _uniform(Rng* r) noexcept nogil:
    return <double>(_next(r) >> 11) * INV_2_53


cdef inline double _uniform_open(Rng* r) noexcept nogil:
    return (<double>(_next(r) >> 11) + 0.5) * INV_2_53


cdef inline double _sample_law(Rng* r, int code, double p1, double p2) noexcept nogil:
    cdef double total = 0.0
    cdef int i
    if code == 0:
        return -log(_uniform_open(r)) / p1
    if code == 1:
        return p1
    for i in range(<int>p1):
        total += -log(_uniform_open(r)) / p2
    return total


cdef inline int64_t _poisson_small(Rng* r, double mean) noexcept nogil:
    cdef double u = _uniform(r)
    cdef double p = exp(-mean)
    cdef double cdf = p
    cdef int64_t k = 0
    while u > cdf and k < POISSON_MAX_K:
        k += 1
        p *= mean / k
        cdf += p
    return k


cdef inline int64_t _poisson(Rng* r, double mean) noexcept nogil:
    cdef int64_t k = 0
    if mean <= 0.0:
        return 0
    while mean > POISSON_CHUNK:
        k += _poisson_small(r, POISSON_CHUNK)
        mean -= POISSON_CHUNK
    return k + _poisson_small(r, mean)


def simulate_batch(uint64_t master_seed, int64_t start, tuple law0, tuple law,
                   double lam_a, double lam_b, int64_t cap_a, int64_t cap_b, int rule,
                   int64_t max_epochs,
                   int8_t[::1] status, int64_t[::1] nu_out, int64_t[::1] mu_out,
                   int64_t[::1] a_pre_out, int64_t[::1] a_nu_out,
                   int64_t[::1] b_pre_out, int64_t[::1] b_mu_out,
                   double[::1] tau_pre_out, double[::1] tau_nu_out, double[::1] tau_mu_out):
    cdef int c0 = law0[0]
    cdef double p01 = law0[1], p02 = law0[2]
    cdef int c1 = law[0]
    cdef double p11 = law[1], p12 = law[2]
    cdef Py_ssize_t n = status.shape[0]
    cdef Py_ssize_t i
    cdef Rng rng
    cdef double tau, prev_tau, d, tau_pre, tau_nu, tau_mu
    cdef int64_t a, b, prev_a, prev_b, nu, mu, k
    cdef int64_t a_pre, a_nu, b_pre, b_mu
    cdef bint a_possible = lam_a > 0.0
    cdef bint b_possible = lam_b > 0.0
    cdef bint capped

    with nogil:
        for i in range(n):
            _seed(&rng, master_seed, <uint64_t>(start + i))
            tau = _sample_law(&rng, c0, p01, p02)
            a = _poisson(&rng, lam_a * tau)
            b = _poisson(&rng, lam_b * tau) if b_possible else 0
            prev_a = 0
            prev_b = 0
            prev_tau = 0.0
            nu = -1
            mu = -1
            a_pre = 0
            a_nu = 0
            b_pre = 0
            b_mu = 0
            tau_pre = 0.0
            tau_nu = 0.0
            tau_mu = INFINITY
            k = 0
            capped = False
            while True:
                if rule == 0:
                    if nu < 0 and a > cap_a:
                        nu = k
                        a_pre = prev_a
                        a_nu = a
                        tau_pre = prev_tau
                        tau_nu = tau
                    if mu < 0 and b > cap_b:
                        mu = k
                        b_pre = prev_b
                        b_mu = b
                        tau_mu = tau
                    if (nu >= 0 or not a_possible) and (mu >= 0 or not b_possible):
                        break
                else:
                    if cap_a - a >= cap_b - b:
                        nu = k
                        mu = k
                        a_pre = prev_a
                        a_nu = a
                        tau_pre = prev_tau
                        tau_nu = tau
                        b_pre = prev_b
                        b_mu = b
                        tau_mu = tau
                        break
                if k >= max_epochs:
                    capped = True
                    break
                d = _sample_law(&rng, c1, p11, p12)
                prev_tau = tau
                prev_a = a
                prev_b = b
                tau += d
                a += _poisson(&rng, lam_a * d)
                if b_possible:
                    b += _poisson(&rng, lam_b * d)
                k += 1

            if not capped:
                if mu < 0:
                    b_pre = b
                    b_mu = b
                if nu < 0:
                    a_pre = a
                    a_nu = a
                    tau_pre = INFINITY
                    tau_nu = INFINITY
            status[i] = 1 if capped else 0
            nu_out[i] = nu
            mu_out[i] = mu
            a_pre_out[i] = a_pre
            a_nu_out[i] = a_nu
            b_pre_out[i] = b_pre
            b_mu_out[i] = b_mu
            tau_pre_out[i] = tau_pre
            tau_nu_out[i] = tau_nu
            tau_mu_out[i] = tau_mu


def trunc_conv2d(const double[:, ::1] a, const double[:, ::1] b):
    cdef Py_ssize_t nx = a.shape[0], ny = a.shape[1]
    cdef Py_ssize_t i, j, k, l
    cdef double c
    out_arr = np.zeros((nx, ny))
    cdef double[:, ::1] out = out_arr
    with nogil:
        for i in range(nx):
            for j in range(ny):
                c = a[i, j]
                if c != 0.0:
                    for k in range(nx - i):
                        for l in range(ny - j):
                            out[i + k, j + l] += c * b[k, l]
    return out_arr
