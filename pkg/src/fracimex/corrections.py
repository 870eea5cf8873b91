"""Correction weights for weakly singular integrands.

Each table here is the solution of a small Vandermonde-type system
``sum_k W[n, k] * k**e_r = rhs_r(n)`` for every time index ``n``. The
matrix ``[k**e_r]`` does not depend on ``n``, so it is factored once and
applied to all right-hand sides together.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ConditioningError, DomainError
from .linalg import lu_factor, lu_solve
from .weights import gamma

__all__ = [
    "ExponentSequence",
    "StartingWeightTable",
    "ExtrapWeightTable",
    "TaylorWeightTable",
    "MAX_CORRECTIONS",
    "starting_weights",
    "extrap_weights",
    "taylor_weights",
    "corrected_quadrature",
    "exact_frac_integral_power",
]

MAX_CORRECTIONS = 12
DUPLICATE_TOL = 1e-10
RESIDUAL_ROWS = 100


class ExponentSequence(Sequence[float]):
    """Strictly increasing positive exponents."""

    __slots__ = ("_values",)

    def __init__(self, values: Iterable[float]):
        vals = tuple(float(v) for v in values)
        for v in vals:
            if not (np.isfinite(v) and v > 0):
                raise DomainError(f"exponents must be positive and finite, got {v!r}")
        for a, b in zip(vals, vals[1:]):
            if b - a <= DUPLICATE_TOL:
                if abs(b - a) <= DUPLICATE_TOL:
                    raise DomainError(f"duplicate exponents {a!r} and {b!r}")
                raise DomainError("exponents must be strictly increasing")
        self._values = vals

    @classmethod
    def from_unsorted(cls, values: Iterable[float]) -> "ExponentSequence":
        """Sort ``values`` and merge entries closer than the duplicate tolerance."""
        out: list[float] = []
        for v in sorted(float(x) for x in values):
            if not out or v - out[-1] > DUPLICATE_TOL:
                out.append(v)
        return cls(out)

    @property
    def values(self) -> tuple[float, ...]:
        return self._values

    def prefix(self, m: int) -> "ExponentSequence":
        if m > len(self._values):
            raise DomainError(
                f"{m} correction terms requested but only {len(self._values)} exponents known"
            )
        return ExponentSequence(self._values[:m])

    def __getitem__(self, i):
        return self._values[i]

    def __len__(self) -> int:
        return len(self._values)

    def __eq__(self, other) -> bool:
        if isinstance(other, ExponentSequence):
            return self._values == other._values
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._values)

    def __repr__(self) -> str:
        return f"ExponentSequence({list(self._values)})"


@dataclass(frozen=True)
class StartingWeightTable:
    """Starting weights ``W[n, k-1]`` (``k = 1..m``) and endpoint terms ``B[n]``.

    ``cond`` is the infinity-norm condition number of the moment matrix,
    ``cond2`` the 2-norm one. ``residual`` is the largest defect of the moment
    equations over ``r <= m`` and ``1 <= n <= 100``.
    """

    beta: float
    exponents: ExponentSequence
    W: np.ndarray
    B: np.ndarray
    cond: float
    cond2: float
    residual: float

    @property
    def m(self) -> int:
        return self.W.shape[1]

    @property
    def N(self) -> int:
        return self.W.shape[0] - 1


@dataclass(frozen=True)
class ExtrapWeightTable:
    exponents: ExponentSequence
    Wf_hat: np.ndarray
    cond: float
    residual: float


@dataclass(frozen=True)
class TaylorWeightTable:
    sigma: ExponentSequence
    delta: ExponentSequence
    Wf_tilde: np.ndarray
    Wu_tilde: np.ndarray
    cond_f: float
    cond_u: float
    residual: float


def _as_exponents(seq) -> ExponentSequence:
    return seq if isinstance(seq, ExponentSequence) else ExponentSequence(seq)


def _moment_matrix(exps: Sequence[float]) -> np.ndarray:
    m = len(exps)
    k = np.arange(1, m + 1, dtype=float)
    return k[None, :] ** np.asarray(exps, dtype=float)[:, None]


def _condition(V: np.ndarray) -> tuple[float, float]:
    if V.size == 0:
        return 1.0, 1.0
    s = np.linalg.svd(V, compute_uv=False)
    cond2 = float(s[0] / s[-1]) if s[-1] > 0 else np.inf
    cond_inf = float(np.linalg.norm(V, np.inf) * np.linalg.norm(np.linalg.inv(V), np.inf))
    return cond_inf, cond2


def _solve_moments(
    exps: ExponentSequence, rhs: np.ndarray, rows: slice = slice(None)
) -> tuple[np.ndarray, float, float, float]:
    """Solve the moment system for every column of ``rhs`` (shape ``(m, N+1)``).

    Returns ``(W, cond_inf, cond2, residual)`` with ``W`` of shape ``(N+1, m)``.
    Only the columns selected by ``rows`` are solved; the others stay zero.
    """
    m = len(exps)
    if m > MAX_CORRECTIONS:
        raise ConditioningError(
            f"{m} correction terms exceed the limit of {MAX_CORRECTIONS}"
        )
    W = np.zeros((rhs.shape[1], m))
    if m == 0:
        return W, 1.0, 1.0, 0.0
    V = _moment_matrix(exps.values)
    cond_inf, cond2 = _condition(V)
    sol = lu_solve(lu_factor(V), rhs[:, rows])
    W[rows] = sol.T
    idx = np.arange(rhs.shape[1])[rows]
    check = idx[(idx >= 1) & (idx <= RESIDUAL_ROWS)]
    if check.size:
        defect = V @ W[check].T - rhs[:, check]
        residual = float(np.max(np.abs(defect)))
    else:
        residual = 0.0
    return W, cond_inf, cond2, residual


def _kernel_of(omega) -> np.ndarray:
    return np.asarray(getattr(omega, "kernel", omega), dtype=float)


def starting_weights(omega, beta: float, theta, m: int, N: int) -> StartingWeightTable:
    """Starting weights making the quadrature exact on ``t**theta_r``, ``r <= m``.

    ``omega`` is a :class:`~fracimex.weights.ConvolutionWeights` or
    :class:`~fracimex.weights.TrapWeights`; in both cases only the stationary
    kernel is used, with the endpoint weight absorbed into ``B``.
    """
    N = int(N)
    m = int(m)
    if N < 1:
        raise DomainError("horizon index N must be at least 1")
    if m < 0:
        raise DomainError("number of correction terms must be non-negative")
    if m > MAX_CORRECTIONS:
        raise ConditioningError(f"{m} correction terms exceed the limit of {MAX_CORRECTIONS}")
    kernel = _kernel_of(omega)
    if len(kernel) < N + 1:
        raise DomainError(f"need {N + 1} convolution weights, got {len(kernel)}")
    kernel = kernel[: N + 1]
    exps = _as_exponents(theta).prefix(m)

    n = np.arange(N + 1, dtype=float)
    rhs = np.empty((m, N + 1))
    for r, e in enumerate(exps):
        kp = n**e
        exact = gamma(e + 1.0) / gamma(e + 1.0 + beta) * n ** (e + beta)
        rhs[r] = exact - np.convolve(kernel, kp)[: N + 1]
    W, cond_inf, cond2, residual = _solve_moments(exps, rhs)
    B = n**beta / gamma(1.0 + beta) - np.cumsum(kernel) - W.sum(axis=1)
    return StartingWeightTable(
        beta=float(beta), exponents=exps, W=W, B=B, cond=cond_inf, cond2=cond2, residual=residual
    )


def extrap_weights(delta, m: int, N: int) -> ExtrapWeightTable:
    """Corrections to linear extrapolation, exact on ``t**delta_r`` for ``r <= m``.

    Rows ``n < 2`` are left at zero and must not be used.
    """
    N = int(N)
    exps = _as_exponents(delta).prefix(int(m))
    n = np.arange(N + 1, dtype=float)
    rhs = np.zeros((len(exps), N + 1))
    for r, e in enumerate(exps):
        rhs[r, 2:] = n[2:] ** e - 2.0 * (n[2:] - 1.0) ** e + (n[2:] - 2.0) ** e
    W, cond_inf, _, residual = _solve_moments(exps, rhs, slice(2, None))
    return ExtrapWeightTable(exponents=exps, Wf_hat=W, cond=cond_inf, residual=residual)


def taylor_weights(sigma, delta, mu: int, mf: int, N: int) -> TaylorWeightTable:
    """Corrections to the first-order Taylor step for ``f`` and for ``u'``."""
    N = int(N)
    sig = _as_exponents(sigma).prefix(int(mu))
    dl = _as_exponents(delta).prefix(int(mf))
    n = np.arange(N + 1, dtype=float)
    nm1 = n[2:] - 1.0
    rhs_f = np.zeros((len(dl), N + 1))
    for r, e in enumerate(dl):
        rhs_f[r, 2:] = n[2:] ** e - nm1**e - e * nm1 ** (e - 1.0)
    rhs_u = np.zeros((len(sig), N + 1))
    for r, e in enumerate(sig):
        rhs_u[r, 2:] = e * nm1 ** (e - 1.0) - (n[2:] ** e - nm1**e)
    Wf, cf, _, res_f = _solve_moments(dl, rhs_f, slice(2, None))
    Wu, cu, _, res_u = _solve_moments(sig, rhs_u, slice(2, None))
    return TaylorWeightTable(
        sigma=sig,
        delta=dl,
        Wf_tilde=Wf,
        Wu_tilde=Wu,
        cond_f=cf,
        cond_u=cu,
        residual=max(res_f, res_u),
    )


def corrected_quadrature(samples, table: StartingWeightTable, omega, h: float, n: int):
    """Corrected convolution quadrature of ``I**beta g`` at ``t_n``.

    ``samples`` holds ``g(t_0), ..., g(t_n)`` (more entries are ignored);
    vector-valued samples are handled componentwise along the last axis.
    """
    g = np.asarray(samples)
    n = int(n)
    kernel = _kernel_of(omega)
    if n < 0 or n > table.N or n >= len(kernel):
        raise DomainError(f"time index {n} outside the weight tables")
    if g.shape[0] < n + 1:
        raise DomainError(f"need {n + 1} samples, got {g.shape[0]}")
    if table.m > n and table.m > 0 and g.shape[0] < table.m + 1:
        raise DomainError(f"need {table.m + 1} samples for the correction terms")
    conv = kernel[n::-1] @ g[: n + 1]
    corr = table.W[n] @ g[1 : table.m + 1] if table.m else 0.0
    return h**table.beta * (conv + corr + table.B[n] * g[0])


def exact_frac_integral_power(beta: float, sigma: float, t):
    """Riemann-Liouville integral of order ``beta`` of ``t**sigma``."""
    if sigma < 0:
        raise DomainError("power exponent must be non-negative")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("time must be non-negative")
    out = gamma(sigma + 1.0) / gamma(sigma + 1.0 + beta) * t ** (sigma + beta)
    return float(out) if out.ndim == 0 else out
