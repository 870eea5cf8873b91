import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracimex.errors import ConfigError, DomainError
from fracimex.schemes import Scheme
from fracimex.stability import ProbeResult, boundary_locus, generating_function, probe_stability


@settings(max_examples=20, deadline=None)
@given(beta=st.floats(0.05, 0.95))
def test_imex_t_locus_on_sector_rays(beta):
    loc = boundary_locus(Scheme.IMEX_T, beta, samples=256)
    xi = loc.points[1:]
    np.testing.assert_allclose(np.abs(np.angle(xi)), beta * np.pi / 2, atol=1e-10)


def test_imex_t_locus_closed_form():
    beta = 0.4
    loc = boundary_locus("imex-t", beta, samples=64)
    th = loc.theta[1:]
    # 1/w(z) = (2 (1-z)/(1+z))^beta and (1-z)/(1+z) = -i tan(theta/2)
    want = (-2j * np.tan(th / 2)) ** beta
    np.testing.assert_allclose(loc.points[1:], want, rtol=1e-10)
    assert loc.points[0] == 0


def test_imex_e_with_zero_ratio_matches_imex_t():
    e = boundary_locus(Scheme.IMEX_E, 0.6, k_ratio=0.0, samples=128)
    t = boundary_locus(Scheme.IMEX_T, 0.6, samples=128)
    np.testing.assert_allclose(e.points, t.points)


def test_imex_e_locus_crosses_real_axis_at_threshold():
    beta, k = 0.5, 1.0
    loc = boundary_locus(Scheme.IMEX_E, beta, k_ratio=k, samples=1024)
    # at z = -1 the map gives xi = -2^beta / (4 k)
    i = np.argmin(np.abs(loc.theta - np.pi))
    assert loc.points[i].real == pytest.approx(-(2**beta) / (4 * k), rel=1e-6)


def test_generating_function_principal_branch():
    z = np.exp(1j * np.array([0.5, 2.0]))
    np.testing.assert_allclose(generating_function(0.5, z) ** 2, 0.5 * (1 + z) / (1 - z))


def test_locus_argument_checks():
    with pytest.raises(ConfigError):
        boundary_locus(Scheme.PC, 0.5)
    with pytest.raises(DomainError):
        boundary_locus(Scheme.IMEX_T, 1.2)
    with pytest.raises(DomainError):
        boundary_locus(Scheme.IMEX_T, 0.5, samples=4)


def test_probe_trivial_and_decaying():
    assert probe_stability(Scheme.IMEX_E, 0.5, 0.0, 0.0, 0.01, steps=1000) is ProbeResult.BOUNDED
    # h^beta = 10, far outside the IMEX-T locus
    assert probe_stability(Scheme.IMEX_T, 0.5, -0.6, -0.4, 100.0, steps=2000) is ProbeResult.DECAYING


def test_probe_imex_e_threshold_sides():
    beta, rho = 0.5, -0.5
    lam = -1.0 - rho
    hb = -(2**beta) / (4 * rho)
    inside = (0.5 * hb) ** (1 / beta)
    outside = (2.0 * hb) ** (1 / beta)
    assert probe_stability(Scheme.IMEX_E, beta, lam, rho, inside) is ProbeResult.DECAYING
    assert probe_stability(Scheme.IMEX_E, beta, lam, rho, outside) is ProbeResult.GROWING


def test_probe_argument_checks():
    with pytest.raises(DomainError):
        probe_stability(Scheme.IMEX_E, 0.5, -1, 0, 0.1, steps=10)
    with pytest.raises(ConfigError):
        probe_stability(Scheme.TS1, 0.5, -1, 0, 0.1)
