"""Convolution quadrature weights for the fractional integral.

Three generating functions are supported (see :class:`GenKind`). All weights
are returned as plain float arrays; index ``j`` holds the coefficient of
``z**j``.

The product-integration rules used by the trapezoidal, rectangle and L1-type
schemes live here as well, because they share the same role: turning a
sampled integrand into a fractional integral (or derivative) value.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "GenKind",
    "ConvolutionWeights",
    "TrapRow",
    "TrapWeights",
    "gamma",
    "flmm_weights",
    "trap_row",
    "trap_weights",
    "rect_weights",
    "ts3_diff_weights",
]


class GenKind(enum.Enum):
    """Generating function of a fractional linear multistep method.

    ``LUBICH2`` is ``(1/2 (1+z)/(1-z))**beta``, ``VARIANT1`` is
    ``(1-z)**(-beta) * (1 - beta/2 (1-z))`` and ``VARIANT2`` is a power of a
    quadratic (BDF2-like) polynomial.
    """

    LUBICH2 = "lubich2"
    VARIANT1 = "variant1"
    VARIANT2 = "variant2"


@dataclass(frozen=True)
class ConvolutionWeights:
    beta: float
    kind: GenKind
    omega: np.ndarray

    @property
    def kernel(self) -> np.ndarray:
        return self.omega

    def __len__(self) -> int:
        return len(self.omega)


@dataclass(frozen=True)
class TrapRow:
    """Weights ``b[0..n]`` of the product trapezoidal rule at time index ``n``."""

    beta: float
    n: int
    b: np.ndarray


@dataclass(frozen=True)
class TrapWeights:
    """All trapezoidal rows up to ``N`` in stationary form.

    For ``1 <= j <= n`` the weight ``b[n, j]`` only depends on ``n - j`` and
    equals ``kernel[n - j]``. The endpoint weight ``b[n, 0]`` is not stationary
    and is handled separately (the corrected quadrature absorbs it into the
    ``B_n`` term).
    """

    beta: float
    kernel: np.ndarray

    def row(self, n: int) -> TrapRow:
        return trap_row(self.beta, n)

    def __len__(self) -> int:
        return len(self.kernel)


def gamma(x: float) -> float:
    """Gamma function for positive finite arguments."""
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"gamma requires a positive finite argument, got {x!r}")
    return math.gamma(x)


def _check_beta(beta: float, allow_one: bool = True) -> float:
    beta = float(beta)
    upper_ok = beta <= 1.0 if allow_one else beta < 1.0
    if not (beta > 0.0 and upper_ok):
        raise DomainError(f"order must lie in (0, 1], got {beta!r}")
    return beta


def _binomial_series(a: float, count: int, sign: float) -> np.ndarray:
    """Taylor coefficients of ``(1 + sign*z)**a`` up to ``z**count``."""
    c = np.empty(count + 1)
    c[0] = 1.0
    for j in range(1, count + 1):
        c[j] = c[j - 1] * sign * (a - j + 1) / j
    return c


def _power_series(poly: list[float], a: float, count: int) -> np.ndarray:
    """Coefficients of ``p(z)**a`` by the J.C.P. Miller recurrence."""
    p = np.asarray(poly, dtype=float)
    q = np.zeros(count + 1)
    q[0] = p[0] ** a
    deg = len(p) - 1
    for j in range(1, count + 1):
        acc = 0.0
        for k in range(1, min(j, deg) + 1):
            acc += ((a + 1.0) * k - j) * p[k] * q[j - k]
        q[j] = acc / (j * p[0])
    return q


def flmm_weights(
    kind: GenKind, beta: float, count: int, *, conventional: bool = False
) -> ConvolutionWeights:
    """First ``count + 1`` Taylor coefficients of the generating function.

    ``conventional`` only affects ``VARIANT2``: by default the quadratic is
    ``3/2 - 2z - z**2/2``; with ``conventional=True`` the BDF2 polynomial
    ``3/2 - 2z + z**2/2`` is used instead.
    """
    kind = GenKind(kind)
    beta = _check_beta(beta)
    count = int(count)
    if count < 0:
        raise DomainError("weight count must be non-negative")

    if kind is GenKind.LUBICH2:
        a = _binomial_series(beta, count, 1.0)  # (1+z)^beta
        c = _binomial_series(-beta, count, -1.0)  # (1-z)^(-beta)
        omega = 2.0 ** (-beta) * np.convolve(a, c)[: count + 1]
    elif kind is GenKind.VARIANT1:
        c = _binomial_series(-beta, count, -1.0)
        omega = c.copy()
        omega[1:] -= 0.5 * beta * (c[1:] - c[:-1])
        omega[0] -= 0.5 * beta * c[0]
    else:
        tail = 0.5 if conventional else -0.5
        omega = _power_series([1.5, -2.0, tail], -beta, count)
    return ConvolutionWeights(beta=beta, kind=kind, omega=omega)


def _trap_kernel(beta: float, count: int) -> np.ndarray:
    k = np.arange(1, count + 1, dtype=float)
    p = beta + 1.0
    out = np.empty(count + 1)
    out[0] = 1.0
    out[1:] = (k + 1.0) ** p - 2.0 * k**p + (k - 1.0) ** p
    return out / gamma(2.0 + beta)


def trap_row(beta: float, n: int) -> TrapRow:
    beta = _check_beta(beta)
    n = int(n)
    if n < 1:
        raise DomainError("trapezoidal rows start at n = 1")
    g2 = gamma(2.0 + beta)
    p = beta + 1.0
    b = np.empty(n + 1)
    b[0] = ((n - 1.0) ** p - (n - 1.0 - beta) * n**beta) / g2
    kern = _trap_kernel(beta, n - 1)
    b[1:n] = kern[n - 1 : 0 : -1]
    b[n] = 1.0 / g2
    return TrapRow(beta=beta, n=n, b=b)


def trap_weights(beta: float, count: int) -> TrapWeights:
    beta = _check_beta(beta)
    if count < 0:
        raise DomainError("weight count must be non-negative")
    return TrapWeights(beta=beta, kernel=_trap_kernel(beta, int(count)))


def rect_weights(beta: float, n: int, h: float) -> np.ndarray:
    """Product rectangle weights.

    Element ``i`` is ``h**beta/Gamma(1+beta) * ((n-i)**beta - (n-i-1)**beta)``
    for ``i = 0..n-1``. Read as ``w[n-1, i]`` this is the predictor row of the
    predictor-corrector method; read with ``j = i + 1`` it is the row
    ``w[n, 1..n]`` used by the rectangle-type splitting scheme.
    """
    beta = _check_beta(beta)
    n = int(n)
    if n < 1 or not h > 0:
        raise DomainError("rect_weights needs n >= 1 and h > 0")
    s = np.arange(n, 0, -1, dtype=float)
    return h**beta / gamma(1.0 + beta) * (s**beta - (s - 1.0) ** beta)


def ts3_diff_weights(nu: float, n: int, h: float) -> np.ndarray:
    """L1-type weights ``b[n, j]`` for ``j = 1..n`` (returned at index ``j - 1``)."""
    nu = _check_beta(nu, allow_one=False)
    n = int(n)
    if n < 1 or not h > 0:
        raise DomainError("ts3_diff_weights needs n >= 1 and h > 0")
    s = np.arange(n, 0, -1, dtype=float)
    e = 1.0 - nu
    return h ** (-nu) / gamma(2.0 - nu) * (s**e - (s - 1.0) ** e)
