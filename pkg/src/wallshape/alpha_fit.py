"""Fit the complex Robin coefficient that best mimics the porous absorber.

For each frequency the truncated sum of mode errors is minimized over
``alpha`` in the quadrant ``Re > 0, Im < 0``.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .analytic import MaterialParams, _mode_error_terms, impedance_match
from .simplex import nelder_mead

ALPHA_TABLE_HEADER = ["omega", "re_alpha", "im_alpha", "error", "iterations", "converged"]


@dataclass(frozen=True)
class FitConfig:
    """Truncation, weights and optimizer settings for the alpha fit.

    Modes ``n`` with ``|n| <= L / dx`` are summed, at wavenumbers
    ``k_n = n * pi / mode_period``. ``mode_period`` defaults to the channel
    height ``2 * ell``, which makes ``cos(k_n (y + ell))`` satisfy the
    rigid-wall condition at ``y = +-ell``.
    """

    dx: float = 0.01
    L: float = 1.0
    ell: float = 0.5
    g_spectrum: dict = field(default_factory=lambda: {0: 1.0 + 0j})
    A: float = 1.0
    B: float = 1.0
    simplex_scale: float = 0.1
    max_iter: int = 2000
    tol: float = 1e-10
    penalty: float = 1e6
    mode_period: float | None = None

    def __post_init__(self):
        if not self.dx > 0:
            raise ValueError("dx must be positive")
        if self.A < 0 or self.B < 0 or self.A + self.B <= 0:
            raise ValueError("need A, B >= 0 with A + B > 0")
        if not (self.L > 0 and self.ell > 0):
            raise ValueError("L and ell must be positive")

    @property
    def period(self) -> float:
        return 2.0 * self.ell if self.mode_period is None else self.mode_period

    def n_max(self) -> int:
        return int(math.floor(self.L / self.dx + 1e-9))

    def wavenumber(self, n: int) -> float:
        return n * math.pi / self.period

    def active_modes(self):
        """``(n, k_n, g_n)`` arrays for the nonzero amplitudes inside the truncation."""
        nmax = self.n_max()
        items = sorted((int(n), complex(g)) for n, g in self.g_spectrum.items() if g != 0 and abs(int(n)) <= nmax)
        ns = np.array([n for n, _ in items], dtype=int)
        return ns, ns * (math.pi / self.period), np.array([g for _, g in items], dtype=complex)


def total_error(alpha: complex, omega: float, cfg: FitConfig, mat: MaterialParams) -> float:
    """Truncated error sum; modes with zero amplitude contribute nothing and are skipped."""
    ns, ks, gs = cfg.active_modes()
    if ns.size == 0:
        return 0.0
    terms = _mode_error_terms(ks, gs, omega, cfg.L, complex(alpha), cfg.A, cfg.B, mat, modes=ns)
    return float(np.sum(terms))


class FitDiagnostics(NamedTuple):
    iterations: int
    evaluations: int
    converged: bool
    message: str


def fit_alpha(omega: float, cfg: FitConfig, mat: MaterialParams, start: complex | None = None):
    """Minimize ``total_error`` over the absorbing quadrant.

    Starts at ``start`` or, by default, at the matched impedance of the
    ``k = 0`` mode. Leaving the quadrant costs a quadratic penalty; the
    result counts as converged only if the simplex converged and the point
    lies strictly inside the quadrant. Returns ``(alpha, error, diagnostics)``.
    """
    if not omega > 0:
        raise ValueError("omega must be positive")
    a0 = impedance_match(0.0, omega, mat) if start is None else complex(start)
    scale = abs(a0)

    def objective(p):
        alpha = complex(p[0], p[1]) * scale
        err = total_error(alpha, omega, cfg, mat)
        out = max(0.0, -p[0]) ** 2 + max(0.0, p[1]) ** 2
        return err + cfg.penalty * out

    x0 = np.array([a0.real, a0.imag]) / scale
    res = nelder_mead(objective, x0, cfg.simplex_scale, xtol=cfg.tol,
                      max_iter=cfg.max_iter, max_evals=4 * cfg.max_iter + 3)
    alpha = complex(res.x[0], res.x[1]) * scale
    inside = alpha.real > 0 and alpha.imag < 0
    converged = res.converged and inside
    message = res.message if inside else "left the absorbing quadrant"
    diag = FitDiagnostics(res.nit, res.nfev, converged, message)
    return alpha, total_error(alpha, omega, cfg, mat), diag


class AlphaRow(NamedTuple):
    omega: float
    alpha: complex
    error: float
    iterations: int
    converged: bool


@dataclass
class AlphaTable:
    rows: list[AlphaRow]

    @property
    def omegas(self) -> np.ndarray:
        return np.array([r.omega for r in self.rows])

    @property
    def alphas(self) -> np.ndarray:
        return np.array([r.alpha for r in self.rows])

    @property
    def all_converged(self) -> bool:
        return all(r.converged for r in self.rows)

    def write_csv(self, stream) -> None:
        stream.write(",".join(ALPHA_TABLE_HEADER) + "\n")
        for r in self.rows:
            stream.write(f"{r.omega!r},{r.alpha.real!r},{r.alpha.imag!r},{r.error!r},"
                         f"{r.iterations},{int(r.converged)}\n")

    def plot_series(self) -> dict[str, list[tuple[float, float]]]:
        """Two-column series for the real part, imaginary part and error panels."""
        return {
            "re_alpha": [(r.omega, r.alpha.real) for r in self.rows],
            "im_alpha": [(r.omega, r.alpha.imag) for r in self.rows],
            "error": [(r.omega, r.error) for r in self.rows],
        }

    @classmethod
    def read_csv(cls, stream) -> "AlphaTable":
        reader = csv.reader(stream)
        header = next(reader, None)
        if header != ALPHA_TABLE_HEADER:
            raise ValueError(f"unexpected alpha table header {header!r}")
        rows = []
        for rec in reader:
            if not rec:
                continue
            w, re, im, err, it, conv = rec
            rows.append(AlphaRow(float(w), complex(float(re), float(im)), float(err), int(it), conv == "1"))
        return cls(rows)


def alpha_sweep(omegas, cfg: FitConfig, mat: MaterialParams, *, warm_start: bool = True,
                workers: int = 1) -> AlphaTable:
    """Fit alpha at each frequency.

    With ``warm_start`` each fit starts from the previous optimum and runs
    sequentially; cold starts are independent and may use ``workers`` threads.
    """
    omegas = [float(w) for w in omegas]
    if not omegas:
        raise ValueError("need at least one frequency")
    if any(not w > 0 for w in omegas):
        raise ValueError("frequencies must be positive")

    def row(w, start):
        alpha, err, diag = fit_alpha(w, cfg, mat, start)
        return AlphaRow(w, alpha, err, diag.iterations, diag.converged)

    if warm_start:
        rows, start = [], None
        for w in omegas:
            r = row(w, start)
            rows.append(r)
            start = r.alpha
        return AlphaTable(rows)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return AlphaTable(list(pool.map(lambda w: row(w, None), omegas)))
    return AlphaTable([row(w, None) for w in omegas])
