"""Error norms, reference runs and convergence tables."""

from __future__ import annotations

import csv
import enum
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .errors import DomainError
from .model import Problem
from .schemes import BootstrapMode, Scheme, SchemeConfig, Status, Trajectory, solve

__all__ = [
    "RefMode",
    "ReferenceFailed",
    "ReferencePolicy",
    "ConvergenceRow",
    "ComparisonTable",
    "NORM_NOTE",
    "error_norms",
    "reference_values",
    "convergence_study",
    "compare_schemes",
    "rows_to_dicts",
    "write_rows_csv",
    "write_study_json",
    "parse_step",
]

NORM_NOTE = "relative errors use the componentwise max for numerator and denominator"
DEFAULT_H_REF = 2.0**-15
CAPPED_H_REF = 2.0**-13
MAX_REF_STEPS = 3e5
GRID_TOL = 1e-9


class ReferenceFailed(DomainError):
    """The fine-step reference run itself failed."""

    def __init__(self, status: Status, step):
        super().__init__(f"reference run failed with {status.value} at step {step}")
        self.status = status


class RefMode(enum.Enum):
    EXACT = "exact"
    FINE_STEP = "fine"


@dataclass(frozen=True)
class ReferencePolicy:
    """Where reference values come from.

    ``FINE_STEP`` runs the scheme under study with ``h_ref``. If that would
    take more than ``3e5`` steps the step is raised to ``2^-13`` (with a
    warning) unless ``cap=False``.
    """

    mode: RefMode = RefMode.EXACT
    h_ref: float = DEFAULT_H_REF
    cap: bool = True

    def __post_init__(self):
        object.__setattr__(self, "mode", RefMode(self.mode))
        if not self.h_ref > 0:
            raise DomainError("reference step must be positive")

    @classmethod
    def fine(cls, h_ref: float = DEFAULT_H_REF, cap: bool = True) -> "ReferencePolicy":
        return cls(RefMode.FINE_STEP, h_ref, cap)

    @classmethod
    def parse(cls, text: str) -> "ReferencePolicy":
        """``exact``, ``fine`` or ``fine:<step>`` with ``<step>`` like ``2^-15``."""
        text = text.strip()
        if text == "exact":
            return cls()
        if text == "fine":
            return cls.fine()
        if text.startswith("fine:"):
            return cls.fine(parse_step(text[5:]))
        raise DomainError(f"unknown reference policy {text!r}")

    def effective_step(self, T: float) -> float:
        h = self.h_ref
        if self.cap and T / h > MAX_REF_STEPS and h < CAPPED_H_REF:
            warnings.warn(
                f"reference step {h:g} needs {T / h:.0f} steps; using {CAPPED_H_REF:g}",
                RuntimeWarning,
                stacklevel=2,
            )
            h = CAPPED_H_REF
        return h


@dataclass(frozen=True)
class ConvergenceRow:
    h: float
    error_inf: float
    error_end: float
    order: Optional[float] = None
    cpu_seconds: float = 0.0
    setup_seconds: float = 0.0
    status: Status = Status.OK

    @property
    def failed(self) -> bool:
        return self.status is not Status.OK


@dataclass
class ComparisonTable:
    problem: str
    h_list: tuple
    rows: dict = field(default_factory=dict)

    @property
    def schemes(self) -> list:
        return list(self.rows)


def parse_step(text: str) -> float:
    """Parse ``2^-7``, ``2**-7`` or a plain float."""
    s = text.strip().replace("**", "^")
    if "^" in s:
        base, exp = s.split("^", 1)
        return float(base) ** float(exp)
    return float(s)


def _as_grid_values(ref, t: np.ndarray) -> np.ndarray:
    if isinstance(ref, Trajectory):
        if not ref.ok:
            raise DomainError("reference trajectory did not complete")
        ratio = (len(ref.t) - 1) / (len(t) - 1) if len(t) > 1 else 1.0
        stride = int(round(ratio))
        if stride < 1 or abs(ratio - stride) > GRID_TOL * max(1.0, ratio):
            raise DomainError("reference grid does not refine the trajectory grid")
        vals = ref.U[::stride]
        tr = ref.t[::stride]
        if len(tr) != len(t) or np.max(np.abs(tr - t)) > GRID_TOL * max(1.0, t[-1]):
            raise DomainError("reference grid does not align with the trajectory grid")
        return vals
    if callable(ref):
        grid = getattr(ref, "grid", None)
        if grid is not None:
            return np.asarray(grid(t))
        return np.array([ref(tk) for tk in t])
    vals = np.asarray(ref)
    if vals.ndim == 1:
        vals = vals[:, None]
    if vals.shape[0] != len(t):
        raise DomainError(f"reference has {vals.shape[0]} rows for {len(t)} grid points")
    return vals


def error_norms(traj: Trajectory, ref) -> tuple[float, float]:
    """Relative sup-norm and end-point errors of ``traj`` against ``ref``.

    ``ref`` is a finer :class:`Trajectory` on a nested grid, an exact solution
    callable in ``t``, or an array of values on ``traj.t``.
    """
    if not traj.ok or len(traj.U) != len(traj.t):
        raise DomainError("trajectory did not complete")
    U = np.asarray(traj.U)
    if U.ndim == 1:
        U = U[:, None]
    R = _as_grid_values(ref, np.asarray(traj.t))
    if R.ndim == 1:
        R = R[:, None]
    if R.shape != U.shape:
        raise DomainError(f"reference shape {R.shape} differs from trajectory shape {U.shape}")
    den = float(np.max(np.abs(R)))
    den_end = float(np.max(np.abs(R[-1])))
    if den == 0.0 or den_end == 0.0:
        raise DomainError("reference vanishes; relative error undefined")
    e_inf = float(np.max(np.abs(R - U))) / den
    e_end = float(np.max(np.abs(R[-1] - U[-1]))) / den_end
    return e_inf, e_end


def _config(scheme, h, m, bootstrap, extra) -> SchemeConfig:
    if isinstance(m, Mapping):
        return SchemeConfig.with_m(scheme, h, 0, bootstrap=bootstrap, **dict(m), **extra)
    return SchemeConfig.with_m(scheme, h, int(m), bootstrap=bootstrap, **extra)


def reference_values(problem: Problem, scheme, policy: ReferencePolicy, m=0, bootstrap=BootstrapMode.EXACT, **extra):
    """Exact-solution callable or fine-step trajectory used as the reference."""
    if policy.mode is RefMode.EXACT:
        if problem.exact is None:
            raise DomainError(f"problem {problem.name!r} has no exact solution")
        return problem.exact
    h_ref = policy.effective_step(problem.T)
    ref = solve(problem, _config(scheme, h_ref, m, bootstrap, extra))
    if not ref.ok:
        raise ReferenceFailed(ref.status, ref.fail_step)
    return ref


def _check_h_list(h_list: Sequence[float]) -> list[float]:
    hs = [float(h) for h in h_list]
    for a, b in zip(hs, hs[1:]):
        if not math.isclose(b, a / 2.0, rel_tol=1e-12):
            raise DomainError("h_list must halve from one entry to the next")
    return hs


def _order(e_coarse: float, e_fine: float) -> Optional[float]:
    if not (math.isfinite(e_coarse) and math.isfinite(e_fine)) or e_coarse <= 0 or e_fine <= 0:
        return None
    return math.log2(e_coarse / e_fine)


def convergence_study(
    problem: Problem,
    scheme,
    h_list: Sequence[float],
    m: Union[int, Mapping[str, int]] = 0,
    bootstrap=BootstrapMode.EXACT,
    reference: Optional[ReferencePolicy] = None,
    workers: int = 1,
    **extra,
) -> list[ConvergenceRow]:
    """One row per step size; ``order`` compares each row with the next finer one.

    ``m`` is a single correction count or a mapping with any of
    ``m_u, m_f, mt_f, mt_u``. Extra keywords go to :class:`SchemeConfig`.
    Failed runs give rows with infinite errors and their status.
    """
    scheme = Scheme(scheme)
    hs = _check_h_list(h_list)
    if not hs:
        return []
    policy = reference or ReferencePolicy()
    ref = reference_values(problem, scheme, policy, m, bootstrap, **extra)

    def run(h):
        traj = solve(problem, _config(scheme, h, m, bootstrap, extra))
        if not traj.ok:
            return traj, math.inf, math.inf
        return (traj, *error_norms(traj, ref))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, hs))
    else:
        results = [run(h) for h in hs]

    rows = []
    for i, (h, (traj, e_inf, e_end)) in enumerate(zip(hs, results)):
        order = _order(e_inf, results[i + 1][1]) if i + 1 < len(hs) else None
        rows.append(
            ConvergenceRow(
                h=h,
                error_inf=e_inf,
                error_end=e_end,
                order=order,
                cpu_seconds=traj.cpu_seconds,
                setup_seconds=traj.setup_seconds,
                status=traj.status,
            )
        )
    return rows


def compare_schemes(
    problem: Problem,
    schemes: Sequence,
    h_list: Sequence[float],
    m: Union[int, Mapping] = 0,
    bootstrap=BootstrapMode.EXACT,
    reference: Optional[ReferencePolicy] = None,
    **extra,
) -> ComparisonTable:
    """Convergence rows for each scheme over the same steps.

    ``m`` may also map a scheme (or its value string) to that scheme's counts.
    A scheme whose fine reference cannot be computed gets failed rows.
    """
    hs = _check_h_list(h_list)
    table = ComparisonTable(problem=problem.name, h_list=tuple(hs))
    for s in schemes:
        s = Scheme(s)
        ms = m
        if isinstance(m, Mapping) and (s in m or s.value in m):
            ms = m.get(s, m.get(s.value))
        try:
            rows = convergence_study(problem, s, hs, ms, bootstrap, reference, **extra)
        except ReferenceFailed as exc:
            rows = [ConvergenceRow(h, math.inf, math.inf, status=exc.status) for h in hs]
        table.rows[s] = rows
    return table


def rows_to_dicts(rows: Sequence[ConvergenceRow]) -> list[dict]:
    out = []
    for r in rows:
        out.append(
            {
                "h": r.h,
                "e_inf": None if r.failed else r.error_inf,
                "e_end": None if r.failed else r.error_end,
                "order": r.order,
                "cpu": r.cpu_seconds,
                "status": r.status.value,
            }
        )
    return out


def write_rows_csv(rows: Sequence[ConvergenceRow], dest, scheme: Optional[str] = None) -> None:
    """Write rows to a path or an open text stream; failed errors read ``failed``."""
    if hasattr(dest, "write"):
        _rows_csv(rows, dest, scheme)
        return
    with open(dest, "w", newline="") as fh:
        _rows_csv(rows, fh, scheme)


def _rows_csv(rows, fh, scheme) -> None:
    w = csv.writer(fh)
    head = ["h", "e_inf", "e_end", "order", "cpu", "status"]
    w.writerow((["scheme"] if scheme else []) + head)
    for d in rows_to_dicts(rows):
        vals = [d["h"], _cell(d["e_inf"]), _cell(d["e_end"]), "" if d["order"] is None else d["order"], d["cpu"], d["status"]]
        w.writerow(([scheme] if scheme else []) + vals)


def _cell(v):
    return "failed" if v is None else v


def write_study_json(problem: str, scheme: str, rows: Sequence[ConvergenceRow], path) -> None:
    payload = {"problem": problem, "scheme": scheme, "norm": NORM_NOTE, "rows": rows_to_dicts(rows)}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
