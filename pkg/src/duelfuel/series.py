"""Truncated bivariate power series and the D-operator pair.

The forward operator maps a double sequence f(p, q) to
(1 - x)(1 - y) * sum f(p, q) x^p y^q; its inverse extracts f(p, q) back
from any series F. Dividing F by (1 - x)(1 - y) convolves it with the
all-ones series, so the (p, q) Taylor coefficient is simply the
rectangle sum of F's coefficients. That is how the inverse is computed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import trunc_conv2d

INVERTIBLE_TOL = 1e-12


class SeriesError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class BiSeries:
    """Dense coefficients c[i, j] of x^i y^j, truncated at (max_x, max_y)."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float, order="C")
        if c.ndim != 2 or c.shape[0] < 1 or c.shape[1] < 1:
            raise SeriesError(f"coefficient grid must be 2-D and non-empty, got shape {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def max_x(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def max_y(self) -> int:
        return self.coeffs.shape[1] - 1

    @property
    def orders(self) -> tuple[int, int]:
        return self.max_x, self.max_y

    @classmethod
    def zeros(cls, max_x: int, max_y: int) -> "BiSeries":
        return cls(np.zeros((max_x + 1, max_y + 1)))

    @classmethod
    def constant(cls, value: float, max_x: int, max_y: int) -> "BiSeries":
        c = np.zeros((max_x + 1, max_y + 1))
        c[0, 0] = value
        return cls(c)

    @classmethod
    def from_x(cls, coeffs, max_x: int, max_y: int) -> "BiSeries":
        """Series depending on x only; ``coeffs`` are truncated or zero padded."""
        c = np.zeros((max_x + 1, max_y + 1))
        src = np.asarray(coeffs, dtype=float)[: max_x + 1]
        c[: len(src), 0] = src
        return cls(c)

    @classmethod
    def from_y(cls, coeffs, max_x: int, max_y: int) -> "BiSeries":
        c = np.zeros((max_x + 1, max_y + 1))
        src = np.asarray(coeffs, dtype=float)[: max_y + 1]
        c[0, : len(src)] = src
        return cls(c)

    def scale(self, k: float) -> "BiSeries":
        return BiSeries(self.coeffs * k)

    def __add__(self, other):
        if isinstance(other, BiSeries):
            return bs_add(self, other)
        c = self.coeffs.copy()
        c[0, 0] += other
        return BiSeries(c)

    __radd__ = __add__

    def __neg__(self):
        return BiSeries(-self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, BiSeries):
            return bs_mul(self, other)
        return self.scale(other)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        return bs_ipow(self, n)

    def __repr__(self):
        return f"BiSeries(max_x={self.max_x}, max_y={self.max_y}, c00={self.coeffs[0, 0]!r})"


def _check_orders(a: BiSeries, b: BiSeries):
    if a.coeffs.shape != b.coeffs.shape:
        raise SeriesError(f"truncation order mismatch: {a.orders} vs {b.orders}")


def bs_add(a: BiSeries, b: BiSeries) -> BiSeries:
    _check_orders(a, b)
    return BiSeries(a.coeffs + b.coeffs)


def bs_mul(a: BiSeries, b: BiSeries) -> BiSeries:
    """Cauchy product truncated to the common orders."""
    _check_orders(a, b)
    return BiSeries(trunc_conv2d(a.coeffs, b.coeffs))


def bs_recip(a: BiSeries) -> BiSeries:
    """Multiplicative inverse by solving for one coefficient at a time."""
    c = a.coeffs
    c00 = c[0, 0]
    if abs(c00) <= INVERTIBLE_TOL:
        raise SeriesError("not invertible as a series")
    nx, ny = c.shape
    r = np.zeros((nx, ny))
    for i in range(nx):
        for j in range(ny):
            # sum_{k<=i, l<=j} c[k, l] r[i-k, j-l] = [i == j == 0]
            acc = np.sum(c[: i + 1, : j + 1] * r[i::-1, j::-1])
            rhs = 1.0 if i == 0 and j == 0 else 0.0
            r[i, j] = (rhs - acc) / c00
    return BiSeries(r)


def bs_ipow(a: BiSeries, n: int) -> BiSeries:
    """Integer power by repeated squaring; negative powers go through the reciprocal."""
    if int(n) != n:
        raise SeriesError(f"integer exponent required, got {n}")
    n = int(n)
    if n < 0:
        a = bs_recip(a)
        n = -n
    result = BiSeries.constant(1.0, a.max_x, a.max_y)
    base = a
    while n:
        if n & 1:
            result = bs_mul(result, base)
        n >>= 1
        if n:
            base = bs_mul(base, base)
    return result


def d_forward(f, max_x: int, max_y: int) -> BiSeries:
    """(1 - x)(1 - y) * sum_{p<=max_x, q<=max_y} f(p, q) x^p y^q, truncated.

    The top row and column keep their raw first differences, so only
    coefficients strictly inside the grid describe the infinite product;
    the inverse at (p, q) <= (max_x, max_y) is exact regardless.
    """
    g = np.zeros((max_x + 1, max_y + 1))
    src = np.asarray(f, dtype=float)[: max_x + 1, : max_y + 1]
    g[: src.shape[0], : src.shape[1]] = src
    out = g.copy()
    out[1:, :] -= g[:-1, :]
    out[:, 1:] -= g[:, :-1]
    out[1:, 1:] += g[:-1, :-1]
    return BiSeries(out)


def d_inverse(F: BiSeries, p: int, q: int) -> float:
    """Coefficient of x^p y^q in F / ((1 - x)(1 - y)): the rectangle sum of F."""
    if p < 0 or q < 0:
        return 0.0
    if p > F.max_x or q > F.max_y:
        raise SeriesError(f"truncation order exceeded: ({p}, {q}) > {F.orders}")
    return float(F.coeffs[: p + 1, : q + 1].sum())
