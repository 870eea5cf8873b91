import json
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracimex.errors import DomainError
from fracimex.model import (
    BUILTIN_IDS,
    ExponentKind,
    PowerSum,
    build_example_multiterm,
    build_example_nonlinear,
    build_example_stiff,
    builtin_problem,
    caputo_power_coef,
    default_exponents,
    load_problem,
    problem_from_dict,
    problem_to_dict,
)


def mp_caputo_power(order, p, t):
    """Caputo derivative of s**p at t from its defining integral."""
    with mpmath.workdps(30):
        integrand = lambda s: (t - s) ** (-order) * p * s ** (p - 1)
        val = mpmath.quad(integrand, [0, t / 2, t]) / mpmath.gamma(1 - order)
    return float(val)


@pytest.mark.parametrize("order,p", [(0.5, 0.5), (0.15, 2.15), (0.4, 1.1), (0.55, 3.0)])
def test_caputo_power_against_quadrature(order, p):
    t = 0.7
    got = caputo_power_coef(order, p) * t ** (p - order)
    assert got == pytest.approx(mp_caputo_power(order, p, t), rel=1e-10)


def test_caputo_of_constant_vanishes():
    assert caputo_power_coef(0.3, 0.0) == 0.0


def test_default_exponents_examples():
    assert default_exponents(0.55, ExponentKind.SOLUTION_STRUCTURE, 4).values == pytest.approx(
        (0.55, 1.10, 1.55, 1.65)
    )
    assert default_exponents(0.15, ExponentKind.SMOOTH_FORCING, 3).values == pytest.approx((0.15, 0.30, 0.45))
    assert default_exponents(0.5, ExponentKind.SOLUTION_STRUCTURE, 3).values == pytest.approx((0.5, 1.0, 1.5))
    with pytest.raises(DomainError):
        default_exponents(0.5, ExponentKind.MULTIPLES, 0)


@settings(max_examples=40, deadline=None)
@given(beta=st.floats(0.05, 0.95), count=st.integers(1, 12), kind=st.sampled_from(list(ExponentKind)))
def test_default_exponents_sorted_positive(beta, count, kind):
    seq = default_exponents(beta, kind, count)
    assert len(seq) == count
    assert all(b > a for a, b in zip(seq, seq[1:]))
    assert seq[0] == pytest.approx(beta)


def test_power_sum_operations():
    w = PowerSum.from_lists([[(1.0, 0.0), (2.0, 0.5)], [(3.0, 1.5)]])
    t = 0.64
    np.testing.assert_allclose(w(t), [1 + 2 * 0.8, 3 * t**1.5])
    np.testing.assert_allclose(w.times(w)(t), w(t) ** 2)
    np.testing.assert_allclose(w.grid([0.0, t])[1], w(t))
    np.testing.assert_allclose(w.matmul([[1.0, 1.0], [0.0, 2.0]])(t), [w(t).sum(), 2 * w(t)[1]])
    I = w.frac_integral(0.3)(t)
    want = [
        t**0.3 / math.gamma(1.3) + 2 * math.gamma(1.5) / math.gamma(1.8) * t**0.8,
        3 * math.gamma(2.5) / math.gamma(2.8) * t**1.8,
    ]
    np.testing.assert_allclose(I, want, rtol=1e-13)
    np.testing.assert_allclose(w.value_at_zero(), [1.0, 0.0])


def residual(problem, t):
    w = problem.exact
    lhs = w.caputo(problem.beta)(t)
    if problem.alpha is not None:
        lhs = lhs + w.caputo(problem.alpha)(t)
    rhs = problem.A @ w(t) + problem.f(t, w(t))
    return np.max(np.abs(lhs - rhs)) / (1 + np.max(np.abs(lhs)))


@pytest.mark.parametrize(
    "problem",
    [
        build_example_stiff(0.1),
        build_example_stiff(0.5),
        build_example_nonlinear(0.15, "I"),
        build_example_nonlinear(0.5, "I"),
        build_example_multiterm("I"),
        build_example_multiterm("II"),
    ],
    ids=lambda p: f"{p.name}-{p.beta}",
)
def test_manufactured_solutions_satisfy_equation(problem):
    for t in (0.01, 0.3, 0.9, problem.T):
        assert residual(problem, t) <= 1e-10


def test_stiff_example():
    p = build_example_stiff(0.5)
    assert p.A[0, 0] == -10000.0
    np.testing.assert_allclose(p.exact(0.0), p.u0)
    assert p.T == 1.0 and p.dim == 3


def test_cubic_case1_forcing_closed_form():
    beta = 0.5
    p = build_example_nonlinear(beta, "I")
    assert p.exact(0.0)[0] == 2.0
    assert 2 + beta in p.sigma.values
    # at t = 1 the solution is 8; D^beta t^(k beta) = Gamma(k beta + 1)/Gamma((k-1) beta + 1)
    G = math.gamma
    d = sum(G(k * beta + 1) / G((k - 1) * beta + 1) for k in range(1, 6)) + G(3.5) / G(3.0)
    want = d + 3.0 * 8.0 - 0.8 * 8.0 * (1 - 64.0)
    assert p.spec.forcing(1.0)[0] == pytest.approx(want, rel=1e-13)


def test_cubic_case2_has_no_exact_solution():
    p = build_example_nonlinear(0.15, "II")
    assert p.exact is None
    assert p.sigma.values[:3] == pytest.approx((0.15, 0.30, 0.45))


def test_multiterm_exact_solutions():
    p1, p2 = build_example_multiterm("I"), build_example_multiterm("II")
    t = 0.81
    assert p1.exact(t)[0] == pytest.approx(t**0.55 + t**1.15 + 1)
    assert p2.exact(t)[1] == pytest.approx(t**3 + t**2.55 + 1)
    np.testing.assert_allclose(p1.exact(0.0), [1.0, 1.0])
    assert p1.multiterm and p1.alpha == pytest.approx(0.4)


@pytest.mark.parametrize("name", ["stiff3", "cubic-case1", "multiterm-case1"])
def test_forcing_series_matches_direct_forcing(name):
    p = builtin_problem(name)
    for t in np.linspace(0, p.T, 7):
        direct = p.spec.forcing(t)
        np.testing.assert_allclose(p.forcing(t), direct, rtol=1e-12, atol=1e-12 * (1 + np.abs(direct).max()))
        np.testing.assert_allclose(p.f_state(t, p.exact(t)) + p.forcing(t), p.f(t, p.exact(t)), rtol=1e-12)


def test_sin_nonlinearity_series():
    w = PowerSum.from_lists([[(0.3, 0.0), (1.0, 0.4), (0.5, 0.8)]])
    g = w.caputo(0.4) + w.matmul([[1.0]])
    d = {
        "name": "sine",
        "dim": 1,
        "beta": 0.4,
        "A": [[-1.0]],
        "D": [[0.5]],
        "u0": [0.3],
        "T": 2.0,
        "sigma": [0.4, 0.8],
        "delta": [0.4, 0.8],
        "g": g.to_lists(),
        "manufactured": w.to_lists(),
    }
    p = problem_from_dict(d)
    for t in (0.0, 0.5, 2.0):
        assert p.forcing(t)[0] == pytest.approx(p.spec.forcing(t)[0], abs=1e-14)
    assert residual(p, 1.3) <= 1e-10


def test_json_round_trip(tmp_path):
    p = build_example_nonlinear(0.3, "I")
    path = tmp_path / "cubic.json"
    path.write_text(json.dumps(problem_to_dict(p)))
    q = load_problem(str(path))
    assert q.beta == p.beta and q.sigma == p.sigma and q.delta == p.delta
    for t in (0.2, 5.0):
        np.testing.assert_allclose(q.exact(t), p.exact(t))
        np.testing.assert_allclose(q.f(t, [1.5]), p.f(t, [1.5]))
    r = load_problem(str(path), beta=0.6)
    assert r.beta == 0.6


def test_registry_and_errors():
    for name in BUILTIN_IDS:
        assert builtin_problem(name).name == name
    with pytest.raises(DomainError):
        builtin_problem("nope")
    with pytest.raises(DomainError):
        load_problem("/no/such/file.json")
    with pytest.raises(DomainError):
        build_example_stiff(1.0)
    with pytest.raises(DomainError):
        build_example_nonlinear(0.5, "III")
