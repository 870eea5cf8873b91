"""Time steppers for fractional ODEs.

All schemes work on the integral form of the equation on a uniform grid
``t_n = n h``. History sums are accumulated directly (``O(n)`` work per step),
so a run costs ``O(N^2)`` overall.

The IMEX schemes treat ``A`` implicitly and ``f`` explicitly, through
extrapolation (IMEX-E family) or a first-order Taylor step (IMEX-T), each
with correction weights for the singular exponents of the solution. The
term ``h^beta w_0 F_n`` hidden inside the corrected quadrature of ``F`` is
cancelled symbolically: it is never added and subtracted.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .corrections import extrap_weights, starting_weights, taylor_weights
from .errors import ConfigError, SingularMatrixError
from .linalg import dense_solve, lu_factor, lu_solve
from .model import Problem
from .weights import GenKind, flmm_weights, gamma, trap_weights

__all__ = [
    "Scheme",
    "BootstrapMode",
    "Status",
    "SchemeConfig",
    "Trajectory",
    "dense_solve",
    "bootstrap_starting_values",
    "run_imex_e",
    "run_imex_t",
    "run_imex_e_trap",
    "run_imex_e_multiterm",
    "run_implicit_ref",
    "run_ts1",
    "run_ts3",
    "run_pc",
    "solve",
]


class Scheme(enum.Enum):
    IMEX_E = "imex-e"
    IMEX_T = "imex-t"
    IMEX_E_TRAP = "imex-e-trap"
    IMEX_E_MULTI = "imex-e-multi"
    IMPLICIT_REF = "implicit"
    TS1 = "ts1"
    TS3 = "ts3"
    PC = "pc"


class BootstrapMode(enum.Enum):
    EXACT = "exact"
    FINE_STEP = "fine"
    NONE = "none"


class Status(enum.Enum):
    OK = "ok"
    OVERFLOW = "overflow"
    SINGULAR_MATRIX = "singular"
    NEWTON_FAILED = "newton-failed"


@dataclass(frozen=True)
class SchemeConfig:
    """Scheme choice, step size and correction counts.

    ``m_u``/``m_f`` size the starting weights of the quadratures of ``u`` and
    ``f``; ``mt_f``/``mt_u`` the corrections of the extrapolation or Taylor
    step. ``bootstrap_step`` overrides the fine step used by
    ``BootstrapMode.FINE_STEP`` (default: about ``h**2``). With
    ``exact_forcing`` the corrected schemes integrate a power-sum forcing in
    closed form and discretise only the state part of ``f``.
    """

    scheme: Scheme
    h: float
    m_u: int = 0
    m_f: int = 0
    mt_f: int = 0
    mt_u: int = 0
    gen_kind: GenKind = GenKind.LUBICH2
    bootstrap: BootstrapMode = BootstrapMode.EXACT
    bootstrap_step: Optional[float] = None
    overflow_guard: float = 1e150
    ts3_full_jacobian: bool = False
    conventional_variant2: bool = False
    exact_forcing: bool = False

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        object.__setattr__(self, "gen_kind", GenKind(self.gen_kind))
        object.__setattr__(self, "bootstrap", BootstrapMode(self.bootstrap))
        if not self.h > 0:
            raise ConfigError("step size must be positive")
        if min(self.m_u, self.m_f, self.mt_f, self.mt_u) < 0:
            raise ConfigError("correction counts must be non-negative")

    @classmethod
    def with_m(cls, scheme, h: float, m: int = 0, **kw) -> "SchemeConfig":
        """All four correction counts set to ``m`` unless overridden in ``kw``."""
        counts = {"m_u": m, "m_f": m, "mt_f": m, "mt_u": m}
        counts.update({k: v for k, v in kw.items() if k in counts and v is not None})
        rest = {k: v for k, v in kw.items() if k not in counts}
        return cls(scheme=scheme, h=h, **counts, **rest)

    @property
    def m_star(self) -> int:
        return max(self.m_u, self.m_f, self.mt_f, self.mt_u)

    @property
    def n0(self) -> int:
        return 1 + max(self.m_f, self.m_u)


@dataclass
class Trajectory:
    """Computed states ``U[n]`` on ``t[n]``.

    ``t`` always spans the whole grid; ``U`` stops before ``fail_step`` when a
    run fails. ``cpu_seconds`` times the stepping loop only, ``setup_seconds``
    the weight construction and bootstrap.
    """

    t: np.ndarray
    U: np.ndarray
    status: Status = Status.OK
    fail_step: Optional[int] = None
    cpu_seconds: float = 0.0
    setup_seconds: float = 0.0
    scheme: Optional[Scheme] = None
    h: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status is Status.OK

    @property
    def N(self) -> int:
        return len(self.t) - 1


class _Failure(Exception):
    def __init__(self, status: Status, step: int):
        self.status = status
        self.step = step


def _grid(problem: Problem, h: float) -> tuple[int, np.ndarray]:
    N = int(round(problem.T / h))
    if N < 1 or abs(N * h - problem.T) > 1e-9 * max(1.0, problem.T):
        raise ConfigError(f"step {h!r} does not divide the horizon {problem.T!r}")
    return N, h * np.arange(N + 1)


def _dtype(problem: Problem):
    f0 = np.asarray(problem.f(0.0, problem.u0))
    return np.result_type(problem.A, problem.u0, f0, float)


def _check(u: np.ndarray, guard: float, step: int) -> None:
    if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > guard:
        raise _Failure(Status.OVERFLOW, step)


def _solve(M, rhs, step: int):
    try:
        return dense_solve(M, rhs)
    except SingularMatrixError:
        raise _Failure(Status.SINGULAR_MATRIX, step) from None


def bootstrap_starting_values(problem: Problem, config: SchemeConfig) -> np.ndarray:
    """States ``U_1 .. U_{m*}`` with ``m* = config.m_star``; shape ``(m*, d)``.

    ``FINE_STEP`` reruns the same scheme without corrections on
    ``[0, m* h]`` with a step ``h / round(1/h)`` (about ``h**2``), so every
    ``t_k`` is a fine grid point.
    """
    ms = config.m_star
    d = problem.dim
    if ms == 0:
        return np.zeros((0, d), dtype=_dtype(problem))
    h = config.h
    mode = config.bootstrap
    if mode is BootstrapMode.NONE:
        raise ConfigError("correction terms need starting values; bootstrap NONE allows m = 0 only")
    if mode is BootstrapMode.EXACT:
        if problem.exact is None:
            raise ConfigError(f"problem {problem.name!r} has no exact solution to bootstrap from")
        return np.array([problem.exact(k * h) for k in range(1, ms + 1)])
    ratio = max(1, int(round(1.0 / h))) if config.bootstrap_step is None else max(
        1, int(round(h / config.bootstrap_step))
    )
    sub_cfg = replace(
        config, h=h / ratio, m_u=0, m_f=0, mt_f=0, mt_u=0, bootstrap=BootstrapMode.NONE
    )
    sub = solve(problem.with_horizon(ms * h), sub_cfg)
    if not sub.ok:
        raise _Failure(sub.status, 1)
    return sub.U[ratio :: ratio][:ms]


def _kernel(config: SchemeConfig, order: float, N: int, trap: bool):
    if trap:
        return trap_weights(order, N)
    return flmm_weights(
        config.gen_kind, order, N, conventional=config.conventional_variant2
    )


def _run_corrected(problem: Problem, config: SchemeConfig, variant: str, trap: bool = False):
    """Shared loop of IMEX-E (all kernels), IMEX-T and the implicit reference."""
    t0 = time.perf_counter()
    N, t = _grid(problem, config.h)
    h = config.h
    beta = problem.beta
    d = problem.dim
    A = np.asarray(problem.A)
    U0 = np.asarray(problem.u0)
    dt = _dtype(problem)
    hb = h**beta
    split = config.exact_forcing and problem.has_split
    if split:
        f = problem.f_state
        delta = problem.delta_state
        forced = problem.forcing.frac_integral(beta).grid(t)

        def f_t(tn, u):
            return 0.0
    else:
        f = problem.f
        delta = problem.delta
        forced = None
        f_t = problem.df_dt

    kern = _kernel(config, beta, N, trap)
    c = kern.kernel
    c0 = c[0]
    Ws = starting_weights(kern, beta, problem.sigma, config.m_u, N)
    Wd = starting_weights(kern, beta, delta, config.m_f, N)
    mu, mf = config.m_u, config.m_f
    if variant == "E":
        Wx = extrap_weights(delta, config.mt_f, N).Wf_hat
        mtf, mtu = config.mt_f, 0
    elif variant == "T":
        ty = taylor_weights(problem.sigma, delta, config.mt_u, config.mt_f, N)
        mtf, mtu = config.mt_f, config.mt_u
    else:
        mtf = mtu = 0

    multi = problem.multiterm
    if multi:
        gam = beta - problem.alpha
        kern_g = _kernel(config, gam, N, trap)
        cg = kern_g.kernel
        hg = h**gam
        Wg = starting_weights(kern_g, gam, problem.sigma, mu, N)

    U = np.zeros((N + 1, d), dtype=dt)
    F = np.zeros((N + 1, d), dtype=dt)
    G = np.zeros((N + 1, d), dtype=dt)  # A U_k + F_k, the beta-kernel history
    V = np.zeros((N + 1, d), dtype=dt)  # U_k - U_0, the (beta-alpha)-kernel history
    U[0] = U0
    F[0] = f(0.0, U0)
    G[0] = A @ U0 + F[0]

    def accept(n, un):
        _check(un, config.overflow_guard, n)
        U[n] = un
        F[n] = f(t[n], un)
        G[n] = A @ un + F[n]
        V[n] = un - U0

    status, fail = Status.OK, None
    try:
        start = bootstrap_starting_values(problem, config)
        for k, uk in enumerate(start, start=1):
            accept(k, uk)
        setup = time.perf_counter() - t0
        t1 = time.perf_counter()

        eye = np.eye(d)
        M_lin = eye - hb * c0 * A
        if multi:
            M_lin = M_lin + hg * cg[0] * eye
        lin_factors = None
        if variant == "E":
            try:
                lin_factors = lu_factor(M_lin)
            except SingularMatrixError:
                raise _Failure(Status.SINGULAR_MATRIX, 1) from None

        first = len(start) + 1
        for n in range(first, N + 1):
            base = U0 + hb * (c[n:0:-1] @ G[:n])
            su = Ws.B[n] * U0
            if mu:
                su = su + Ws.W[n] @ U[1 : mu + 1]
            sf = Wd.B[n] * F[0]
            if mf:
                sf = sf + Wd.W[n] @ F[1 : mf + 1]
            base = base + hb * (A @ su + sf)
            if split:
                base = base + forced[n]
            if multi:
                gh = cg[n:0:-1] @ V[:n]
                if mu:
                    gh = gh + Wg.W[n] @ V[1 : mu + 1]
                base = base - hg * gh + hg * cg[0] * U0

            if variant == "I":
                un = _newton(f, problem.df_du, t[n], base, hb * c0, M_lin, U[n - 1], n)
            elif n < 2 or variant == "E" and n == 1:
                # start without history: constant extrapolation of f
                un = _solve(M_lin, base + hb * c0 * F[0], n)
            elif variant == "E":
                br = 2.0 * F[n - 1] - F[n - 2]
                if mtf:
                    br = br + Wx[n] @ (F[1 : mtf + 1] - F[0])
                un = lu_solve(lin_factors, base + hb * c0 * br)
            else:
                J = np.asarray(problem.df_du(t[n - 1], U[n - 1]))
                inner = -U[n - 1]
                if mtu:
                    inner = inner + ty.Wu_tilde[n] @ V[1 : mtu + 1]
                br = F[n - 1] + h * np.asarray(f_t(t[n - 1], U[n - 1])) + J @ inner
                if mtf:
                    br = br + ty.Wf_tilde[n] @ (F[1 : mtf + 1] - F[0])
                un = _solve(M_lin - hb * c0 * J, base + hb * c0 * br, n)
            accept(n, un)
    except _Failure as exc:
        status, fail = exc.status, exc.step
        setup = locals().get("setup", time.perf_counter() - t0)
        t1 = locals().get("t1", time.perf_counter())
    cpu = time.perf_counter() - t1
    last = N + 1 if fail is None else fail
    return Trajectory(
        t=t,
        U=U[:last].copy(),
        status=status,
        fail_step=fail,
        cpu_seconds=cpu,
        setup_seconds=setup,
        scheme=config.scheme,
        h=h,
    )


NEWTON_TOL = 1e-13
NEWTON_MAXIT = 50


def _newton(f, df_du, tn, base, s, M_lin, guess, n):
    """Solve ``M_lin u - s f(tn, u) = base``, where ``M_lin = I - s A`` plus any shift."""
    u = np.array(guess, copy=True)
    for _ in range(NEWTON_MAXIT):
        r = M_lin @ u - s * np.asarray(f(tn, u)) - base
        J = M_lin - s * np.asarray(df_du(tn, u))
        du = _solve(J, r, n)
        u = u - du
        if not np.all(np.isfinite(u)):
            raise _Failure(Status.OVERFLOW, n)
        if np.max(np.abs(du)) <= NEWTON_TOL * max(1.0, np.max(np.abs(u))):
            return u
    raise _Failure(Status.NEWTON_FAILED, n)


def _single_term(problem: Problem, name: str) -> None:
    if problem.multiterm:
        raise ConfigError(f"{name} applies to single-term problems only")


def run_imex_e(problem: Problem, config: SchemeConfig) -> Trajectory:
    """IMEX scheme with corrected linear extrapolation of ``f``."""
    _single_term(problem, "IMEX-E (use IMEX_E_MULTI for two-term problems)")
    return _run_corrected(problem, config, "E")


def run_imex_t(problem: Problem, config: SchemeConfig) -> Trajectory:
    """IMEX scheme with a corrected first-order Taylor step for ``f``.

    The Jacobian ``df_du(t_{n-1}, U_{n-1})`` joins the implicit matrix, so a
    new linear system is factored every step.
    """
    _single_term(problem, "IMEX-T")
    return _run_corrected(problem, config, "T")


def run_imex_e_trap(problem: Problem, config: SchemeConfig) -> Trajectory:
    _single_term(problem, "IMEX-E-Trap")
    return _run_corrected(problem, config, "E", trap=True)


def run_imex_e_multiterm(problem: Problem, config: SchemeConfig) -> Trajectory:
    if not problem.multiterm:
        raise ConfigError("IMEX-E multi-term needs a problem with a lower order alpha")
    return _run_corrected(problem, config, "E")


def run_implicit_ref(problem: Problem, config: SchemeConfig) -> Trajectory:
    """Fully implicit corrected scheme, Newton-solved to ``1e-13`` each step."""
    _single_term(problem, "the implicit reference scheme")
    return _run_corrected(problem, config, "I")


def _rect_kernel(order: float, h: float, N: int) -> np.ndarray:
    k = np.arange(N + 1, dtype=float)
    return h**order / gamma(1.0 + order) * ((k + 1.0) ** order - k**order)


def _l1_kernel(order: float, h: float, N: int) -> np.ndarray:
    k = np.arange(N + 1, dtype=float)
    e = 1.0 - order
    return h ** (-order) / gamma(2.0 - order) * ((k + 1.0) ** e - k**e)


def _finish(t, U, status, fail, t_setup, t_loop, config):
    last = len(t) if fail is None else fail
    return Trajectory(
        t=t,
        U=U[:last].copy(),
        status=status,
        fail_step=fail,
        cpu_seconds=time.perf_counter() - t_loop,
        setup_seconds=t_setup,
        scheme=config.scheme,
        h=config.h,
    )


def run_ts1(problem: Problem, config: SchemeConfig) -> Trajectory:
    """Splitting scheme with product rectangle rules at interval midpoints.

    History midpoints ``(U_{j-1} + U_j)/2`` run over ``j < n``; the newest
    interval contributes ``w_{n,n} U_n`` (implicit in ``A``) and
    ``w_{n,n} f(t_{n-1}, U_{n-1})``.
    """
    t0 = time.perf_counter()
    N, t = _grid(problem, config.h)
    h, beta, d = config.h, problem.beta, problem.dim
    A, U0, f = np.asarray(problem.A), np.asarray(problem.u0), problem.f
    dt = _dtype(problem)
    rb = _rect_kernel(beta, h, N)
    multi = problem.multiterm
    eye = np.eye(d)
    M = eye - rb[0] * A
    if multi:
        gam = beta - problem.alpha
        rg = _rect_kernel(gam, h, N)
        M = M + rg[0] * eye
    U = np.zeros((N + 1, d), dtype=dt)
    X = np.zeros((N + 1, d), dtype=dt)  # midpoints, index j for [t_{j-1}, t_j]
    H = np.zeros((N + 1, d), dtype=dt)  # A X_j + f(t_{j-1/2}, X_j)
    U[0] = U0
    status, fail = Status.OK, None
    setup = time.perf_counter() - t0
    t1 = time.perf_counter()
    try:
        factors = lu_factor(M)
        for n in range(1, N + 1):
            rhs = U0 + rb[n - 1 : 0 : -1] @ H[1:n] + rb[0] * f(t[n - 1], U[n - 1])
            if multi:
                tn_g = t[n] ** gam / gamma(1.0 + gam)
                rhs = rhs + tn_g * U0 - rg[n - 1 : 0 : -1] @ X[1:n]
            un = lu_solve(factors, rhs)
            _check(un, config.overflow_guard, n)
            U[n] = un
            X[n] = 0.5 * (U[n - 1] + un)
            H[n] = A @ X[n] + f(t[n] - 0.5 * h, X[n])
    except SingularMatrixError:
        status, fail = Status.SINGULAR_MATRIX, 1
    except _Failure as exc:
        status, fail = exc.status, exc.step
    return _finish(t, U, status, fail, setup, t1, config)


def run_ts3(problem: Problem, config: SchemeConfig) -> Trajectory:
    """L1-type splitting scheme, linearised with the diagonal of ``df_du``.

    ``config.ts3_full_jacobian`` switches to the full Jacobian.
    """
    t0 = time.perf_counter()
    N, t = _grid(problem, config.h)
    h, beta, d = config.h, problem.beta, problem.dim
    A, U0, f = np.asarray(problem.A), np.asarray(problem.u0), problem.f
    dt = _dtype(problem)
    s = _l1_kernel(beta, h, N)
    if problem.multiterm:
        s = s + _l1_kernel(problem.alpha, h, N)
    eye = np.eye(d)
    U = np.zeros((N + 1, d), dtype=dt)
    dU = np.zeros((N + 1, d), dtype=dt)
    U[0] = U0
    status, fail = Status.OK, None
    setup = time.perf_counter() - t0
    t1 = time.perf_counter()
    try:
        for n in range(1, N + 1):
            up = U[n - 1]
            J = np.asarray(problem.df_du(t[n], up))
            Dn = J if config.ts3_full_jacobian else np.diag(np.diag(J))
            rhs = s[0] * up - s[n - 1 : 0 : -1] @ dU[1:n] + f(t[n], up) - Dn @ up
            un = _solve(s[0] * eye - A - Dn, rhs, n)
            _check(un, config.overflow_guard, n)
            U[n] = un
            dU[n] = un - up
    except _Failure as exc:
        status, fail = exc.status, exc.step
    return _finish(t, U, status, fail, setup, t1, config)


def run_pc(problem: Problem, config: SchemeConfig) -> Trajectory:
    """Fractional Adams predictor-corrector applied to ``A u + f``.

    Two-term problems are handled by applying the same rectangle/trapezoid
    pair to the lower-order integral of ``U - U_0``.
    """
    t0 = time.perf_counter()
    N, t = _grid(problem, config.h)
    h, beta, d = config.h, problem.beta, problem.dim
    A, U0, f = np.asarray(problem.A), np.asarray(problem.u0), problem.f
    dt = _dtype(problem)

    def rhs_fn(tn, u):
        return A @ u + f(tn, u)

    def trap_parts(order):
        kern = trap_weights(order, N).kernel * h**order
        g2 = gamma(2.0 + order) / h**order
        return kern, g2

    rb = _rect_kernel(beta, h, N)
    cb, gb = trap_parts(beta)
    multi = problem.multiterm
    if multi:
        gam = beta - problem.alpha
        rg = _rect_kernel(gam, h, N)
        cg, gg = trap_parts(gam)

    def endpoint(n, order, g2):
        p = order + 1.0
        return ((n - 1.0) ** p - (n - 1.0 - order) * n**order) / g2

    U = np.zeros((N + 1, d), dtype=dt)
    Fb = np.zeros((N + 1, d), dtype=dt)
    V = np.zeros((N + 1, d), dtype=dt)
    U[0] = U0
    Fb[0] = rhs_fn(0.0, U0)
    status, fail = Status.OK, None
    setup = time.perf_counter() - t0
    t1 = time.perf_counter()
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            for n in range(1, N + 1):
                up = U0 + rb[n - 1 :: -1] @ Fb[:n]
                corr = U0 + endpoint(n, beta, gb) * Fb[0] + cb[n - 1 : 0 : -1] @ Fb[1:n]
                if multi:
                    up = up - rg[n - 1 :: -1] @ V[:n]
                    corr = corr - cg[n - 1 : 0 : -1] @ V[1:n]
                _check(up, config.overflow_guard, n)
                un = corr + cb[0] * rhs_fn(t[n], up)
                if multi:
                    un = un - cg[0] * (up - U0)
                _check(un, config.overflow_guard, n)
                U[n] = un
                Fb[n] = rhs_fn(t[n], un)
                V[n] = un - U0
    except _Failure as exc:
        status, fail = exc.status, exc.step
    return _finish(t, U, status, fail, setup, t1, config)


_DISPATCH = {
    Scheme.IMEX_E: run_imex_e,
    Scheme.IMEX_T: run_imex_t,
    Scheme.IMEX_E_TRAP: run_imex_e_trap,
    Scheme.IMEX_E_MULTI: run_imex_e_multiterm,
    Scheme.IMPLICIT_REF: run_implicit_ref,
    Scheme.TS1: run_ts1,
    Scheme.TS3: run_ts3,
    Scheme.PC: run_pc,
}


def solve(problem: Problem, config: SchemeConfig) -> Trajectory:
    """Run ``config.scheme`` on ``problem``."""
    return _DISPATCH[config.scheme](problem, config)
