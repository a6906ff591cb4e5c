import numpy as np
import pytest

from wallshape.analytic import MaterialParams, lambda0, lambda1
from wallshape.geometry import ShapeParam


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def isorel():
    return MaterialParams.isorel()


@pytest.fixture
def unit_speed():
    """Material with c0 = 1, so physical frequency and wavenumber coincide."""
    return MaterialParams(phi=0.7, gamma_p=1.4, sigma=142300.0, rho0=1.2, alpha_h=1.15, c0=1.0)


@pytest.fixture
def wavy_shape():
    return ShapeParam(np.array([0.05, 0.12, 0.2, 0.15, 0.1, 0.18, 0.07, 0.11]))


def simpson(values, x):
    """Composite Simpson rule on an odd number of equispaced samples."""
    n = len(x) - 1
    assert n % 2 == 0
    h = (x[-1] - x[0]) / n
    return h / 3.0 * (values[0] + values[-1] + 4.0 * values[1:-1:2].sum() + 2.0 * values[2:-1:2].sum())


def two_point_mode(lam, z, g, L, eta0=1.0):
    """Coefficients of u = c1 e^{lam x} + c2 e^{-lam x} with u(-L) = g and eta0 u'(0) + z u(0) = 0."""
    A = np.array([[np.exp(-lam * L), np.exp(lam * L)],
                  [eta0 * lam + z, -eta0 * lam + z]], dtype=complex)
    return np.linalg.solve(A, np.array([g, 0.0], dtype=complex))


def quadrature_error(mp, alpha, A, B, n=100_000):
    """Weighted H1 discrepancy by Simpson's rule on the strip, from independently solved modes."""
    mat = mp.materials
    lam = lambda0(mp.k, mp.omega, mat)
    z0 = lambda1(mp.k, mp.omega, mat) * mat.eta1
    d = two_point_mode(lam, z0, mp.g_k, mp.L) - two_point_mode(lam, alpha, mp.g_k, mp.L)
    x = np.linspace(-mp.L, 0.0, n + 1)
    e_plus, e_minus = np.exp(lam * x), np.exp(-lam * x)
    u = d[0] * e_plus + d[1] * e_minus
    du = lam * (d[0] * e_plus - d[1] * e_minus)
    integrand = (A + B * mp.k**2) * np.abs(u) ** 2 + B * np.abs(du) ** 2
    return simpson(integrand, x)
