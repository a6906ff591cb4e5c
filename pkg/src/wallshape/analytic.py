"""Closed-form single-mode solutions for the two-medium and Robin strip problems.

A mode with transverse wavenumber ``k`` on the strip ``-L <= x <= 0``
solves ``u'' = lambda0**2 u`` in air. Two boundary treatments at ``x = 0``
are compared:

* the porous half-space, giving ``u0`` (transmission into a medium whose
  outgoing root is ``lambda1``);
* the Robin wall ``eta0 u' + alpha u = 0``, giving ``u2``.

Both equal ``g_k`` at ``x = -L``. Their difference is
``chi exp(lambda0 x) + gamma exp(-lambda0 x)`` and ``mode_error`` is its
weighted H1 seminorm on the strip, in closed form.

Exponentials are evaluated with ``exp(lambda0 L)`` factored out:
``s = exp(-lambda0 L)`` has modulus at most one, so nothing overflows for
large real ``lambda0 L``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularConfigurationError

# relative size below which f(x) is treated as zero
_SINGULAR_RTOL = 1e-14
# below this |lambda0| L the exponential basis cancels badly; use cosh/sinh
_NEAR_THRESHOLD = 1e-2
_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class MaterialParams:
    """Porous absorber constants and the derived damped-wave coefficients."""

    phi: float
    gamma_p: float
    sigma: float
    rho0: float
    alpha_h: float
    c0: float

    def __post_init__(self):
        for name in ("phi", "gamma_p", "sigma", "rho0", "alpha_h", "c0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.phi > 1:
            raise ValueError("porosity must lie in (0, 1]")
        if self.alpha_h < 1:
            raise ValueError("tortuosity must be >= 1")

    @classmethod
    def isorel(cls) -> "MaterialParams":
        """ISOREL building-insulation material."""
        return cls(phi=0.7, gamma_p=1.4, sigma=142300.0, rho0=1.2, alpha_h=1.15, c0=340.0)

    @property
    def xi0(self) -> float:
        return 1.0 / self.c0**2

    @property
    def eta0(self) -> float:
        return 1.0

    @property
    def xi1(self) -> float:
        return self.phi * self.gamma_p / self.c0**2

    @property
    def eta1(self) -> float:
        return self.phi / self.alpha_h

    @property
    def a(self) -> float:
        return self.sigma * self.phi**2 * self.gamma_p / (self.c0**2 * self.rho0 * self.alpha_h)


@dataclass(frozen=True)
class ModeProblem:
    k: float
    omega: float
    L: float
    g_k: complex
    materials: MaterialParams

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError("omega must be positive")
        if not self.L > 0:
            raise ValueError("L must be positive")


def _lambda0(k, omega, mat):
    q = np.asarray(k, dtype=float) ** 2 - (mat.xi0 / mat.eta0) * omega**2
    root = np.sqrt(np.abs(q))
    return np.where(q >= 0, root + 0j, 1j * root)


def _lambda1(k, omega, mat):
    d = np.asarray(k, dtype=float) ** 2 - (mat.xi1 / mat.eta1) * omega**2
    damp = mat.a * omega / mat.eta1
    r = np.hypot(d, damp)
    # d + r and r - d without cancellation
    with np.errstate(divide="ignore", invalid="ignore"):
        plus = np.where(d >= 0, d + r, np.where(r - d > 0, damp**2 / (r - d), 0.0))
        minus = np.where(d <= 0, r - d, np.where(d + r > 0, damp**2 / (d + r), 0.0))
    return np.sqrt(plus / 2.0) - 1j * np.sqrt(minus / 2.0)


def lambda0(k: float, omega: float, mat: MaterialParams) -> complex:
    """Air root: real if the mode is evanescent, ``+i`` times real if propagating."""
    return complex(_lambda0(k, omega, mat))


def lambda1(k: float, omega: float, mat: MaterialParams) -> complex:
    """Porous-medium root with ``Re >= 0`` and ``Im <= 0``."""
    return complex(_lambda1(k, omega, mat))


def _scaled_f(x, lam0, s2, eta0):
    """``f(x) * exp(-lambda0 L)``, with ``s2 = exp(-2 lambda0 L)``."""
    p = lam0 * eta0
    return (p - x) * s2 + (p + x)


def _check_nonzero(value, scale, what, modes=None):
    bad = np.abs(value) <= _SINGULAR_RTOL * scale
    if np.any(bad):
        n = None
        if modes is not None:
            n = np.asarray(modes)[np.nonzero(np.atleast_1d(bad))[0][0]]
        where = f" (mode n={n})" if n is not None else ""
        raise SingularConfigurationError(f"vanishing denominator f({what}){where}", mode=n)


def _chi_gamma_scaled(k, g, omega, L, alpha, mat, modes=None):
    """Return ``(chi_hat, gamma_hat, lam0, s)`` with ``chi = s chi_hat``, ``gamma = s gamma_hat``."""
    lam0 = _lambda0(k, omega, mat)
    imp = _lambda1(k, omega, mat) * mat.eta1
    s = np.exp(-lam0 * L)
    s2 = s * s
    p = lam0 * mat.eta0
    f_imp = _scaled_f(imp, lam0, s2, mat.eta0)
    f_alpha = _scaled_f(alpha, lam0, s2, mat.eta0)
    _check_nonzero(f_imp, np.abs(p) + np.abs(imp), "lambda1*eta1", modes)
    _check_nonzero(f_alpha, np.abs(p) + abs(alpha), "alpha", modes)
    # both modes equal g at x = -L, so gamma = -chi exp(-2 lambda0 L); this
    # form avoids subtracting two O(1) terms when gamma is exponentially small
    chi_hat = 2.0 * g * p * (alpha - imp) / (f_alpha * f_imp)
    gamma_hat = -s2 * chi_hat
    return chi_hat, gamma_hat, lam0, s


def chi_gamma(mp: ModeProblem, alpha: complex) -> tuple[complex, complex]:
    """Coefficients of ``u0 - u2 = chi exp(lambda0 x) + gamma exp(-lambda0 x)``."""
    ch, gh, _, s = _chi_gamma_scaled(mp.k, mp.g_k, mp.omega, mp.L, alpha, mp.materials)
    return complex(s * ch), complex(s * gh)


def _sinhc(lam, x):
    """``sinh(lam x) / lam``, equal to ``x`` at ``lam = 0``."""
    lam = np.asarray(lam, dtype=complex)
    x = np.asarray(x, dtype=float)
    safe = np.where(lam == 0, 1.0, lam)
    return np.where(lam == 0, x + 0j, np.sinh(lam * x) / safe)


def _hyperbolic_coeffs(lam, z, L, eta0):
    """``(eta0, -z) / D`` with ``D = eta0 cosh(lam L) + z sinh(lam L) / lam``.

    The mode is then ``g (eta0 cosh(lam x) - z sinh(lam x) / lam) / D``,
    a basis that stays well conditioned as ``lam -> 0``.
    """
    cl = np.cosh(lam * L)
    sl = _sinhc(lam, L)
    den = eta0 * cl + z * sl
    _check_nonzero(den, eta0 * np.abs(cl) + np.abs(z) * np.abs(sl), "impedance")
    return eta0 / den, -z / den


def _near_threshold(lam, L):
    return np.abs(lam) * L < _NEAR_THRESHOLD


def _mode_profile(mp: ModeProblem, boundary_impedance, x):
    mat = mp.materials
    lam0 = complex(_lambda0(mp.k, mp.omega, mat))
    if _near_threshold(lam0, mp.L):
        c, d = _hyperbolic_coeffs(lam0, boundary_impedance, mp.L, mat.eta0)
        x = np.asarray(x, dtype=float)
        out = mp.g_k * (c * np.cosh(lam0 * x) + d * _sinhc(lam0, x))
        return complex(out) if out.ndim == 0 else out
    s2 = np.exp(-2.0 * lam0 * mp.L)
    p = lam0 * mat.eta0
    den = _scaled_f(boundary_impedance, lam0, s2, mat.eta0)
    _check_nonzero(den, abs(p) + abs(boundary_impedance), "impedance")
    x = np.asarray(x, dtype=float)
    num = (p - boundary_impedance) * np.exp(lam0 * (x - mp.L)) + (p + boundary_impedance) * np.exp(-lam0 * (x + mp.L))
    out = mp.g_k * num / den
    return complex(out) if out.ndim == 0 else out


def mode_u0(mp: ModeProblem, x):
    """Air-side field of the two-medium problem (porous half-space at ``x >= 0``)."""
    imp = lambda1(mp.k, mp.omega, mp.materials) * mp.materials.eta1
    return _mode_profile(mp, imp, x)


def mode_u2(mp: ModeProblem, alpha: complex, x):
    """Field of the Robin problem ``eta0 u'(0) + alpha u(0) = 0``."""
    return _mode_profile(mp, alpha, x)


def _half_interval(lam, L):
    """``(1 - exp(-2 lam L)) / (2 lam)``, continuous at ``lam = 0``."""
    lam = np.asarray(lam, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = -np.expm1(-2.0 * lam * L) / (2.0 * lam)
    return np.where(lam > 0, v, L)


def _mode_error_terms(k, g, omega, L, alpha, A, B, mat, modes=None):
    """Per-mode errors for arrays of wavenumbers ``k`` and amplitudes ``g``."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    g = np.atleast_1d(np.asarray(g, dtype=complex))
    modes = None if modes is None else np.atleast_1d(modes)
    near = _near_threshold(_lambda0(k, omega, mat), L)
    if np.any(near):
        out = np.empty(k.shape)
        out[near] = _near_threshold_terms(k[near], g[near], omega, L, alpha, A, B, mat)
        if np.any(~near):
            out[~near] = _mode_error_terms(k[~near], g[~near], omega, L, alpha, A, B, mat,
                                           None if modes is None else modes[~near])
        return out
    ch, gh, lam0, s = _chi_gamma_scaled(k, g, omega, L, alpha, mat, modes)
    evanescent = k**2 >= (mat.xi0 / mat.eta0) * omega**2
    weight = A + B * k**2
    out = np.empty(k.shape)

    # evanescent: lambda0 = l real, |s|^2 = exp(-2 l L)
    e = evanescent
    if np.any(e):
        l = lam0[e].real
        s2 = np.abs(s[e]) ** 2
        sq = s2 * np.abs(ch[e]) ** 2 + np.abs(gh[e]) ** 2
        cross = s2 * np.real(ch[e] * np.conj(gh[e]))
        # (1 - s2) / (2 l) * sq is the sum of the two exponential integrals
        exp_part = _half_interval(l, L) * sq
        l2 = exp_part + 2.0 * L * cross
        grad_x = l**2 * exp_part - 2.0 * l**2 * L * cross
        out[e] = weight[e] * l2 + B * grad_x

    # propagating: lambda0 = i beta, |s| = 1
    o = ~evanescent
    if np.any(o):
        lam = lam0[o]
        sq = np.abs(ch[o]) ** 2 + np.abs(gh[o]) ** 2
        z = ch[o] * np.conj(gh[o]) * (1.0 - s[o] ** 2)
        l2 = L * sq + (1j / lam) * z.imag
        grad_x = L * np.abs(lam) ** 2 * sq + 1j * lam * z.imag
        val = weight[o] * l2 + B * grad_x
        scale = (weight[o] + B * np.abs(lam) ** 2) * L * sq + np.abs(z) * (weight[o] / np.abs(lam) + B * np.abs(lam))
        if np.any(np.abs(val.imag) > 1e-10 * np.maximum(scale, np.finfo(float).tiny)):
            raise ArithmeticError("mode error has a non-negligible imaginary part")
        out[o] = val.real
    return out


def _near_threshold_terms(k, g, omega, L, alpha, A, B, mat):
    """Mode errors for ``|lambda0| L`` small, by Gauss-Legendre quadrature.

    The difference of the two modes is ``P cosh(lam x) + Q sinh(lam x) / lam``;
    on this range it is a near-polynomial and 16 nodes integrate it to
    rounding error.
    """
    lam = _lambda0(k, omega, mat)[:, None]
    imp = (_lambda1(k, omega, mat) * mat.eta1)[:, None]
    c_imp, d_imp = _hyperbolic_coeffs(lam, imp, L, mat.eta0)
    c_a, d_a = _hyperbolic_coeffs(lam, alpha, L, mat.eta0)
    P = g[:, None] * (c_imp - c_a)
    Q = g[:, None] * (d_imp - d_a)
    x = 0.5 * L * (_GAUSS_X - 1.0)
    C, S = np.cosh(lam * x), _sinhc(lam, x)
    diff = P * C + Q * S
    slope = P * lam**2 * S + Q * C
    integrand = (A + B * k[:, None] ** 2) * np.abs(diff) ** 2 + B * np.abs(slope) ** 2
    return 0.5 * L * integrand @ _GAUSS_W


def mode_error(mp: ModeProblem, alpha: complex, A: float, B: float) -> float:
    """``A ||u0 - u2||^2 + B ||grad(u0 - u2)||^2`` on the strip for one mode."""
    if A < 0 or B < 0:
        raise ValueError("weights must be nonnegative")
    return float(_mode_error_terms(mp.k, mp.g_k, mp.omega, mp.L, alpha, A, B, mp.materials)[0])


def impedance_match(k: float, omega: float, mat: MaterialParams) -> complex:
    """The Robin coefficient ``lambda1 eta1`` that reproduces the two-medium mode exactly."""
    return lambda1(k, omega, mat) * mat.eta1


def evanescent_threshold(omega: float, mat: MaterialParams) -> float:
    """Wavenumber where ``lambda0`` changes from imaginary to real."""
    return omega * math.sqrt(mat.xi0 / mat.eta0)
