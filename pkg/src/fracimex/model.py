"""Problem definitions and the built-in benchmark problems.

A problem is the fractional ODE

    D^alpha u + D^beta u = A u + f(t, u)      (multi-term, 0 < alpha < beta)
    D^beta u = A u + f(t, u)                  (single-term)

with Caputo derivatives, ``u(0) = u0`` on ``[0, T]``. ``A`` is the part every
IMEX scheme treats implicitly; ``f`` is treated explicitly (or linearised).

Serializable problems use the closed family

    f(t, u) = B u + C (u * (1 - u*u)) + D sin(u) + g(t)

where ``g`` is a sum of power terms per component, optionally minus the
nonlinear part evaluated along a manufactured solution ``w(t)``. That last
piece keeps forcing terms exact: with ``g = P - N(w)`` the equation is
satisfied by ``w`` whenever ``P`` collects the Caputo derivatives of ``w``
minus ``A w``.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .corrections import DUPLICATE_TOL, ExponentSequence
from .errors import DomainError
from .weights import gamma

__all__ = [
    "PowerSum",
    "NonlinearitySpec",
    "Problem",
    "ExponentKind",
    "default_exponents",
    "build_example_stiff",
    "build_example_nonlinear",
    "build_example_multiterm",
    "builtin_problem",
    "BUILTIN_IDS",
    "problem_from_dict",
    "problem_to_dict",
    "load_problem",
]


def caputo_power_coef(order: float, p: float) -> float:
    """Coefficient ``c`` with ``D^order t**p = c t**(p - order)`` (zero for constants)."""
    if p == 0:
        return 0.0
    return gamma(p + 1.0) / gamma(p + 1.0 - order)


@dataclass(frozen=True)
class PowerSum:
    """Vector function whose component ``i`` is ``sum_j coef_ij * t**exp_ij``."""

    terms: tuple[tuple[tuple[float, float], ...], ...]

    @classmethod
    def from_lists(cls, terms) -> "PowerSum":
        return cls(tuple(tuple((float(c), float(e)) for c, e in comp) for comp in terms))

    @classmethod
    def zeros(cls, dim: int) -> "PowerSum":
        return cls(tuple(() for _ in range(dim)))

    @property
    def dim(self) -> int:
        return len(self.terms)

    def __post_init__(self):
        flat = []
        for comp in self.terms:
            for c, e in comp:
                if e < 0:
                    raise DomainError("power terms need non-negative exponents")
            flat.append(
                (
                    np.array([c for c, _ in comp], dtype=float),
                    np.array([e for _, e in comp], dtype=float),
                )
            )
        object.__setattr__(self, "_arrays", flat)

    def __call__(self, t: float) -> np.ndarray:
        t = float(t)
        return np.array([c @ (t**e) if c.size else 0.0 for c, e in self._arrays])

    def derivative(self, t: float) -> np.ndarray:
        t = float(t)
        out = np.zeros(self.dim)
        with np.errstate(divide="ignore", invalid="ignore"):
            for i, (c, e) in enumerate(self._arrays):
                keep = e != 0
                if np.any(keep):
                    out[i] = (c[keep] * e[keep]) @ (t ** (e[keep] - 1.0))
        return out

    def value_at_zero(self) -> np.ndarray:
        return np.array([c[e == 0].sum() for c, e in self._arrays])

    def caputo(self, order: float) -> "PowerSum":
        out = []
        for comp in self.terms:
            out.append(
                tuple((c * caputo_power_coef(order, e), e - order) for c, e in comp if e != 0)
            )
        return PowerSum(tuple(out)).merged()

    def __add__(self, other: "PowerSum") -> "PowerSum":
        return PowerSum(tuple(a + b for a, b in zip(self.terms, other.terms))).merged()

    def scale(self, s: float) -> "PowerSum":
        return PowerSum(tuple(tuple((s * c, e) for c, e in comp) for comp in self.terms))

    def matmul(self, M) -> "PowerSum":
        """Power sum of ``M @ self(t)``."""
        M = np.atleast_2d(np.asarray(M, dtype=float))
        out = []
        for i in range(M.shape[0]):
            row = []
            for j, comp in enumerate(self.terms):
                if M[i, j] != 0:
                    row.extend((M[i, j] * c, e) for c, e in comp)
            out.append(tuple(row))
        return PowerSum(tuple(out)).merged()

    def merged(self) -> "PowerSum":
        out = []
        for comp in self.terms:
            acc: list[list[float]] = []
            for c, e in sorted(comp, key=lambda ce: ce[1]):
                if acc and abs(e - acc[-1][1]) <= DUPLICATE_TOL:
                    acc[-1][0] += c
                else:
                    acc.append([c, e])
            out.append(tuple((c, e) for c, e in acc if c != 0.0))
        return PowerSum(tuple(out))

    def times(self, other: "PowerSum") -> "PowerSum":
        """Componentwise product."""
        out = []
        for a, b in zip(self.terms, other.terms):
            out.append(tuple((ca * cb, ea + eb) for ca, ea in a for cb, eb in b))
        return PowerSum(tuple(out)).merged()

    def frac_integral(self, order: float) -> "PowerSum":
        """Riemann-Liouville integral of order ``order``, term by term."""
        out = []
        for comp in self.terms:
            out.append(
                tuple((c * gamma(e + 1.0) / gamma(e + 1.0 + order), e + order) for c, e in comp)
            )
        return PowerSum(tuple(out))

    def bound(self, T: float) -> np.ndarray:
        """Upper bound of ``|self(t)|`` on ``[0, T]`` per component."""
        return np.array([np.abs(c) @ (float(T) ** e) if c.size else 0.0 for c, e in self._arrays])

    def prune(self, T: float, tol: float) -> "PowerSum":
        """Drop terms whose size on ``[0, T]`` is below ``tol``."""
        return PowerSum(
            tuple(tuple((c, e) for c, e in comp if abs(c) * T**e > tol) for comp in self.terms)
        )

    def grid(self, t) -> np.ndarray:
        """Values on an array of times, shape ``(len(t), dim)``."""
        t = np.asarray(t, dtype=float)
        out = np.zeros((t.size, self.dim))
        for i, (c, e) in enumerate(self._arrays):
            if c.size:
                out[:, i] = (t[:, None] ** e[None, :]) @ c
        return out

    def exponents(self) -> list[float]:
        """All positive exponents carrying a nonzero coefficient."""
        return [e for comp in self.terms for c, e in comp if e > 0 and c != 0]

    def to_lists(self) -> list[list[list[float]]]:
        return [[[c, e] for c, e in comp] for comp in self.terms]


SERIES_TOL = 1e-18
SERIES_MAX_TERMS = 400


def _sin_series(w: PowerSum, T: float) -> PowerSum:
    """``sin(w(t))`` as a power sum, from the Taylor series around ``w(0)``.

    The series is entire, so truncating once ``|w - w(0)|**k / k!`` drops below
    ``SERIES_TOL`` on ``[0, T]`` leaves only rounding-level error.
    """
    c0 = w.value_at_zero()
    v = w + PowerSum.from_lists([[(-c, 0.0)] for c in c0])
    vmax = max(float(np.max(v.bound(T))), 1e-300)
    ones = PowerSum.from_lists([[(1.0, 0.0)] for _ in c0])
    power = ones
    out = PowerSum.from_lists([[(np.sin(c), 0.0)] for c in c0])
    k = 0
    size = 1.0
    while True:
        k += 1
        power = power.times(v).scale(1.0 / k).prune(T, SERIES_TOL * 1e-3)
        size *= vmax / k
        coefs = [np.sin(c + 0.5 * k * np.pi) for c in c0]
        out = out + PowerSum(
            tuple(tuple((s * c, e) for c, e in comp) for s, comp in zip(coefs, power.terms))
        )
        if (size < SERIES_TOL and k > vmax) or k >= SERIES_MAX_TERMS:
            return out.prune(T, SERIES_TOL)


def _matrix(M, dim: int) -> np.ndarray:
    if M is None:
        return np.zeros((dim, dim))
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape != (dim, dim):
        raise DomainError(f"expected a {dim}x{dim} matrix, got shape {M.shape}")
    return M


@dataclass(frozen=True)
class NonlinearitySpec:
    """The closed family ``B u + C (u - u**3) + D sin(u) + g(t)``."""

    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    g: PowerSum
    manufactured: Optional[PowerSum] = None

    @classmethod
    def create(cls, dim, B=None, C=None, D=None, g=None, manufactured=None):
        g = g if isinstance(g, PowerSum) else (PowerSum.from_lists(g) if g else PowerSum.zeros(dim))
        if manufactured is not None and not isinstance(manufactured, PowerSum):
            manufactured = PowerSum.from_lists(manufactured)
        return cls(_matrix(B, dim), _matrix(C, dim), _matrix(D, dim), g, manufactured)

    def nonlinear_series(self, w: PowerSum, T: float) -> PowerSum:
        """The state part ``B w + C (w - w**3) + D sin(w)`` as a power sum on ``[0, T]``."""
        out = w.matmul(self.B)
        if np.any(self.C):
            cubic = w.times(w).times(w)
            out = out + (w + cubic.scale(-1.0)).matmul(self.C)
        if np.any(self.D):
            out = out + _sin_series(w, T).matmul(self.D)
        return out

    def forcing_series(self, T: float) -> PowerSum:
        """``g`` minus the manufactured state part, as one power sum on ``[0, T]``."""
        if self.manufactured is None:
            return self.g
        return self.g + self.nonlinear_series(self.manufactured, T).scale(-1.0)

    def state_part(self, t: float, u) -> np.ndarray:
        return self.nonlinear_part(np.asarray(u))

    def nonlinear_part(self, u: np.ndarray) -> np.ndarray:
        return self.B @ u + self.C @ (u * (1.0 - u * u)) + self.D @ np.sin(u)

    def nonlinear_jacobian(self, u: np.ndarray) -> np.ndarray:
        return self.B + self.C * (1.0 - 3.0 * u * u)[None, :] + self.D * np.cos(u)[None, :]

    def forcing(self, t: float) -> np.ndarray:
        out = self.g(t)
        if self.manufactured is not None:
            out = out - self.nonlinear_part(self.manufactured(t))
        return out

    def f(self, t: float, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return self.nonlinear_part(u) + self.forcing(t)

    def df_du(self, t: float, u) -> np.ndarray:
        return self.nonlinear_jacobian(np.asarray(u, dtype=float))

    def df_dt(self, t: float, u) -> np.ndarray:
        out = self.g.derivative(t)
        if self.manufactured is not None:
            w = self.manufactured(t)
            out = out - self.nonlinear_jacobian(w) @ self.manufactured.derivative(t)
        return out


@dataclass(frozen=True)
class Problem:
    """A fractional ODE instance.

    ``f``, ``df_du`` and ``df_dt`` take ``(t, u)``. ``sigma`` and ``delta`` are
    the singular exponents expected in ``u`` and in ``f(t, u(t))``.

    When ``forcing`` is set, ``f(t, u) = f_state(t, u) + forcing(t)`` with a
    power-sum forcing that the IMEX schemes integrate in closed form;
    ``delta_state`` then lists the exponents of ``f_state(t, u(t))``, the only
    part left to the quadrature. ``f_state`` must not depend on ``t``.
    """

    beta: float
    A: np.ndarray
    f: Callable
    df_du: Callable
    df_dt: Callable
    u0: np.ndarray
    T: float
    sigma: ExponentSequence
    delta: ExponentSequence
    alpha: Optional[float] = None
    exact: Optional[Callable] = None
    name: str = ""
    spec: Optional[NonlinearitySpec] = field(default=None, repr=False)
    forcing: Optional[PowerSum] = field(default=None, repr=False)
    f_state: Optional[Callable] = field(default=None, repr=False)
    delta_state: Optional[ExponentSequence] = None

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise DomainError(f"order beta must lie in (0, 1), got {self.beta!r}")
        if self.alpha is not None and not 0.0 < self.alpha < self.beta:
            raise DomainError("lower order alpha must lie in (0, beta)")
        if not self.T > 0:
            raise DomainError("horizon T must be positive")
        if len(self.u0) < 1:
            raise DomainError("state dimension must be at least 1")

    @property
    def dim(self) -> int:
        return len(self.u0)

    @property
    def has_split(self) -> bool:
        return self.forcing is not None and self.f_state is not None

    @property
    def multiterm(self) -> bool:
        return self.alpha is not None

    def with_horizon(self, T: float) -> "Problem":
        return replace(self, T=float(T))


class ExponentKind(enum.Enum):
    SOLUTION_STRUCTURE = "solution"
    SMOOTH_FORCING = "smooth"
    PRODUCT_SET = "product"
    MULTIPLES = "multiples"


def default_exponents(beta: float, kind: ExponentKind, count: int) -> ExponentSequence:
    """The first ``count`` singular exponents of a standard family.

    ``SOLUTION_STRUCTURE``: ``{v beta} | {1 + w beta}`` for ``v, w >= 1``.
    ``SMOOTH_FORCING``: ``{i + j beta}`` with ``i >= 0, j >= 1``.
    ``PRODUCT_SET``: ``{i + j beta}`` with ``i, j >= 0``, zero excluded.
    ``MULTIPLES``: ``{k beta}`` for ``k >= 1``.
    """
    kind = ExponentKind(kind)
    count = int(count)
    if count < 1:
        raise DomainError("count must be at least 1")
    r = range(count + 1)
    if kind is ExponentKind.SOLUTION_STRUCTURE:
        cand = [v * beta for v in r if v >= 1] + [1.0 + w * beta for w in r if w >= 1]
    elif kind is ExponentKind.SMOOTH_FORCING:
        cand = [i + j * beta for i in r for j in r if j >= 1]
    elif kind is ExponentKind.PRODUCT_SET:
        cand = [i + j * beta for i in r for j in r if i + j > 0]
    else:
        cand = [k * beta for k in r if k >= 1]
    return ExponentSequence(ExponentSequence.from_unsorted(cand).values[:count])


def _manufactured_problem(
    name: str,
    beta: float,
    A,
    spec_kwargs: dict,
    w: PowerSum,
    T: float,
    alpha: Optional[float] = None,
) -> Problem:
    dim = w.dim
    A = _matrix(A, dim)
    P = w.caputo(beta) + w.matmul(-A)
    if alpha is not None:
        P = P + w.caputo(alpha)
    spec = NonlinearitySpec.create(dim, g=P, manufactured=w, **spec_kwargs)
    return _problem_from_spec(
        name=name,
        beta=beta,
        alpha=alpha,
        A=A,
        spec=spec,
        u0=w.value_at_zero(),
        T=T,
        sigma=ExponentSequence.from_unsorted(w.exponents()),
        delta=ExponentSequence.from_unsorted(P.exponents()),
    )


STATE_EXPONENT_LIMIT = 24


def _problem_from_spec(
    *, name, beta, alpha, A, spec, u0, T, sigma, delta, delta_state=None
) -> Problem:
    exact = spec.manufactured
    if delta_state is None:
        if exact is not None:
            found = spec.nonlinear_series(exact, float(T)).exponents()
            delta_state = ExponentSequence(
                ExponentSequence.from_unsorted(found).values[:STATE_EXPONENT_LIMIT]
            )
        else:
            delta_state = delta
    return Problem(
        beta=float(beta),
        alpha=None if alpha is None else float(alpha),
        A=np.asarray(A, dtype=float),
        f=spec.f,
        df_du=spec.df_du,
        df_dt=spec.df_dt,
        u0=np.asarray(u0, dtype=float),
        T=float(T),
        sigma=sigma,
        delta=delta,
        exact=exact,
        name=name,
        spec=spec,
        forcing=spec.forcing_series(float(T)),
        f_state=spec.state_part,
        delta_state=delta_state,
    )


STIFF_A = np.array([[-10000.0, 0.0, 1.0], [-0.05, -0.08, -0.2], [1.0, 0.0, -1.0]])
STIFF_B = np.array([[-0.6, 0.0, 0.2], [-0.1, -0.2, 0.0], [0.0, -0.5, -0.8]])
MULTI_A = np.array([[-1000.0, 100.0], [0.0, -0.1]])
MULTI_B = np.diag([1.0, 3.0])
MULTI_BETA = 0.55
MULTI_ALPHA = 0.4


def build_example_stiff(beta: float) -> Problem:
    """Three-dimensional stiff linear system with a manufactured singular solution."""
    s = [beta, 2 * beta, 1 + beta, 5 * beta, 2.0, 2 + beta]
    a = [0.5, 0.8, 1.0, 1.0, 1.0, 1.0]
    w = PowerSum.from_lists(
        [
            [(a[0], s[0]), (a[1], s[1]), (1.0, 0.0)],
            [(a[2], s[2]), (a[3], s[3]), (1.0, 0.0)],
            [(a[4], s[4]), (a[5], s[5]), (1.0, 0.0)],
        ]
    ).merged()
    return _manufactured_problem("stiff3", beta, STIFF_A, {"B": STIFF_B}, w, T=1.0)


def build_example_nonlinear(beta: float, case: str = "I") -> Problem:
    """Scalar equation ``D^beta u = -3 u + 0.8 u (1 - u^2) + g``, ``u0 = 2``, ``T = 8``.

    Case I manufactures ``g`` for ``u = 2 + sum_{k<=5} t^(k beta) + t^(2+beta)``.
    Case II has ``g = 0``; its exponents default to ``k beta``.
    """
    lam, rho, u0, T = -3.0, 0.8, 2.0, 8.0
    case = str(case).upper()
    if case == "I":
        terms = [(1.0, k * beta) for k in range(1, 6)] + [(1.0, 2 + beta), (u0, 0.0)]
        w = PowerSum.from_lists([terms]).merged()
        return _manufactured_problem("cubic-case1", beta, [[lam]], {"C": [[rho]]}, w, T=T)
    if case == "II":
        spec = NonlinearitySpec.create(1, C=[[rho]])
        seq = default_exponents(beta, ExponentKind.MULTIPLES, 16)
        return _problem_from_spec(
            name="cubic-case2",
            beta=beta,
            alpha=None,
            A=[[lam]],
            spec=spec,
            u0=[u0],
            T=T,
            sigma=seq,
            delta=seq,
        )
    raise DomainError(f"unknown case {case!r}")


def build_example_multiterm(case: str = "I") -> Problem:
    """Two-term stiff system ``D^0.4 u + D^0.55 u = A u + B sin(u) + g`` on ``[0, 1]``."""
    case = str(case).upper()
    if case == "I":
        w = [[(1.0, 0.55), (1.0, 1.15), (1.0, 0.0)], [(1.0, 0.9), (1.0, 2.55), (1.0, 0.0)]]
    elif case == "II":
        w = [[(1.0, 2.55), (1.0, 2.15), (1.0, 0.0)], [(1.0, 3.0), (1.0, 2.55), (1.0, 0.0)]]
    else:
        raise DomainError(f"unknown case {case!r}")
    return _manufactured_problem(
        f"multiterm-case{1 if case == 'I' else 2}",
        MULTI_BETA,
        MULTI_A,
        {"D": MULTI_B},
        PowerSum.from_lists(w).merged(),
        T=1.0,
        alpha=MULTI_ALPHA,
    )


BUILTIN_IDS = ("stiff3", "cubic-case1", "cubic-case2", "multiterm-case1", "multiterm-case2")


def builtin_problem(name: str, beta: Optional[float] = None) -> Problem:
    """Look up a built-in problem; ``beta`` is ignored by the multi-term ones."""
    if name == "stiff3":
        return build_example_stiff(0.5 if beta is None else beta)
    if name == "cubic-case1":
        return build_example_nonlinear(0.15 if beta is None else beta, "I")
    if name == "cubic-case2":
        return build_example_nonlinear(0.15 if beta is None else beta, "II")
    if name == "multiterm-case1":
        return build_example_multiterm("I")
    if name == "multiterm-case2":
        return build_example_multiterm("II")
    raise DomainError(f"unknown problem id {name!r}; known: {', '.join(BUILTIN_IDS)}")


def problem_from_dict(d: dict) -> Problem:
    """Build a problem from the JSON layout written by :func:`problem_to_dict`."""
    dim = int(d["dim"])
    spec = NonlinearitySpec.create(
        dim,
        B=d.get("B"),
        C=d.get("C"),
        D=d.get("D"),
        g=d.get("g"),
        manufactured=d.get("manufactured"),
    )
    u0 = np.asarray(d["u0"], dtype=float).reshape(dim)
    return _problem_from_spec(
        name=d.get("name", "custom"),
        beta=d["beta"],
        alpha=d.get("alpha"),
        A=_matrix(d.get("A"), dim),
        spec=spec,
        u0=u0,
        T=d["T"],
        sigma=ExponentSequence(d.get("sigma", [])),
        delta=ExponentSequence(d.get("delta", [])),
        delta_state=ExponentSequence(d["delta_state"]) if "delta_state" in d else None,
    )


def problem_to_dict(problem: Problem) -> dict:
    spec = problem.spec
    if spec is None:
        raise DomainError("problem has no serializable nonlinearity")
    out = {
        "name": problem.name,
        "dim": problem.dim,
        "beta": problem.beta,
        "A": problem.A.tolist(),
        "B": spec.B.tolist(),
        "C": spec.C.tolist(),
        "D": spec.D.tolist(),
        "g": spec.g.to_lists(),
        "u0": problem.u0.tolist(),
        "T": problem.T,
        "sigma": list(problem.sigma),
        "delta": list(problem.delta),
    }
    if problem.delta_state is not None:
        out["delta_state"] = list(problem.delta_state)
    if problem.alpha is not None:
        out["alpha"] = problem.alpha
    if spec.manufactured is not None:
        out["manufactured"] = spec.manufactured.to_lists()
    return out


def load_problem(ident: str, beta: Optional[float] = None, alpha: Optional[float] = None) -> Problem:
    """Resolve a built-in id or a JSON problem file; explicit orders override the file."""
    if ident in BUILTIN_IDS:
        return builtin_problem(ident, beta)
    path = Path(ident)
    if not path.exists():
        raise DomainError(f"{ident!r} is neither a built-in problem nor a file")
    d = json.loads(path.read_text())
    if beta is not None:
        d["beta"] = beta
    if alpha is not None:
        d["alpha"] = alpha
    return problem_from_dict(d)
