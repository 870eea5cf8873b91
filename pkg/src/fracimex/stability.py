"""Linear stability of the IMEX schemes on ``D^beta u = lambda u + rho u``.

IMEX-E treats ``lambda u`` implicitly and ``rho u`` by extrapolation; its
region is the complement of the curve

    xi = 1 / ((k + 1) w(z) - k w_0 (1 - z)**2),   xi = lambda h^beta, k = rho/lambda,

for ``w(z) = (1/2 (1+z)/(1-z))**beta`` and ``|z| = 1``. IMEX-T's region is the
complement of ``xi = 1/w(z)`` with ``xi = (lambda + rho) h^beta``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .corrections import ExponentSequence
from .errors import ConfigError, DomainError
from .model import Problem
from .schemes import Scheme, SchemeConfig, solve

__all__ = ["StabilityLocus", "ProbeResult", "boundary_locus", "generating_function", "probe_stability"]


class ProbeResult(enum.Enum):
    DECAYING = "decaying"
    BOUNDED = "bounded"
    GROWING = "growing"


@dataclass(frozen=True)
class StabilityLocus:
    """Boundary samples ``points[j] = xi(theta[j])``.

    Samples at poles of the map are left out of ``theta``/``points`` and
    listed in ``skipped``. The ``theta = 0`` sample is the limit ``xi = 0``.
    """

    beta: float
    scheme: Scheme
    k_ratio: float
    theta: np.ndarray
    points: np.ndarray
    skipped: tuple = field(default=())


def generating_function(beta: float, z):
    """``(1/2 (1+z)/(1-z))**beta`` with the principal branch."""
    z = np.asarray(z, dtype=complex)
    return (0.5 * (1.0 + z) / (1.0 - z)) ** beta


def boundary_locus(scheme, beta: float, k_ratio: float = 0.0, samples: int = 1024) -> StabilityLocus:
    scheme = Scheme(scheme)
    if scheme not in (Scheme.IMEX_E, Scheme.IMEX_T):
        raise ConfigError("boundary loci are available for IMEX-E and IMEX-T only")
    if not 0.0 < beta < 1.0:
        raise DomainError("beta must lie in (0, 1)")
    if samples < 16:
        raise DomainError("need at least 16 samples")
    if not np.isfinite(k_ratio):
        raise DomainError("k_ratio must be finite")
    k = 0.0 if scheme is Scheme.IMEX_T else float(k_ratio)

    theta = 2.0 * np.pi * np.arange(samples) / samples
    z = np.exp(1j * theta[1:])
    with np.errstate(divide="ignore", invalid="ignore"):
        w = generating_function(beta, z)
        denom = (k + 1.0) * w - k * 2.0 ** (-beta) * (1.0 - z) ** 2
        xi = 1.0 / denom
    keep = np.isfinite(xi) & (np.abs(denom) > 1e-14)
    skipped = tuple(float(x) for x in theta[1:][~keep])
    return StabilityLocus(
        beta=float(beta),
        scheme=scheme,
        k_ratio=k,
        theta=np.concatenate([[0.0], theta[1:][keep]]),
        points=np.concatenate([[0.0 + 0.0j], xi[keep]]),
        skipped=skipped,
    )


def _test_problem(beta: float, lam: complex, rho: complex, T: float) -> Problem:
    lam_m = np.array([[lam]], dtype=complex)
    jac = np.array([[rho]], dtype=complex)

    def f(t, u):
        return rho * u

    def df_du(t, u):
        return jac

    def df_dt(t, u):
        return np.zeros(1, dtype=complex)

    return Problem(
        beta=beta,
        A=lam_m,
        f=f,
        df_du=df_du,
        df_dt=df_dt,
        u0=np.ones(1, dtype=complex),
        T=T,
        sigma=ExponentSequence([]),
        delta=ExponentSequence([]),
        name="test-equation",
    )


def probe_stability(scheme, beta: float, lam: complex, rho: complex, h: float, steps: int = 2000) -> ProbeResult:
    """Classify ``max |U|`` over the last tenth of ``steps`` against the first tenth.

    A ratio below 0.9 is decaying, above 1.1 growing; overflow counts as growing.
    The thresholds are a heuristic allowing for the slow algebraic tail of stable
    fractional dynamics.
    """
    scheme = Scheme(scheme)
    if scheme not in (Scheme.IMEX_E, Scheme.IMEX_T):
        raise ConfigError("probe_stability runs IMEX-E or IMEX-T")
    if steps < 1000:
        raise DomainError("probe needs at least 1000 steps")
    problem = _test_problem(beta, complex(lam), complex(rho), steps * h)
    traj = solve(problem, SchemeConfig(scheme=scheme, h=h))
    if not traj.ok:
        return ProbeResult.GROWING
    mag = np.abs(traj.U[:, 0])
    tenth = max(1, steps // 10)
    first = np.max(mag[: tenth + 1])
    last = np.max(mag[-tenth:])
    ratio = last / first if first > 0 else (0.0 if last == 0 else np.inf)
    if ratio < 0.9:
        return ProbeResult.DECAYING
    if ratio > 1.1:
        return ProbeResult.GROWING
    return ProbeResult.BOUNDED
