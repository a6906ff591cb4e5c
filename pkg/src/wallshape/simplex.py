"""Nelder-Mead simplex minimization with an evaluation budget.

Deterministic: ties in the vertex ordering are resolved by a stable sort,
so identical inputs give identical iterates.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

REFLECT, EXPAND, CONTRACT, SHRINK = 1.0, 2.0, 0.5, 0.5


@dataclass
class SimplexResult:
    x: np.ndarray
    fun: float
    nfev: int
    nit: int
    converged: bool
    message: str


class _BudgetExhausted(Exception):
    pass


def initial_simplex(x0, step) -> np.ndarray:
    """Axis-aligned simplex: ``x0`` plus ``x0 + step_i e_i``."""
    x0 = np.asarray(x0, dtype=float)
    step = np.broadcast_to(np.asarray(step, dtype=float), x0.shape)
    sim = np.tile(x0, (x0.size + 1, 1))
    sim[1:] += np.diag(step)
    return sim


def nelder_mead(func, x0, step=0.1, *, xtol=1e-8, ftol=None, max_evals=1000,
                max_iter=None, simplex=None, f0=None) -> SimplexResult:
    """Minimize ``func`` from ``x0``.

    Converged when every vertex lies within ``xtol`` (max-norm) of the best
    one and, if ``ftol`` is given, the spread of function values is at most
    ``ftol``. ``f0`` may carry an already known ``func(x0)`` to save one
    evaluation. Running out of ``max_evals`` or ``max_iter`` returns the best
    point seen with ``converged=False``.
    """
    x0 = np.asarray(x0, dtype=float)
    sim = initial_simplex(x0, step) if simplex is None else np.array(simplex, dtype=float)
    n = sim.shape[1]
    if max_iter is None:
        max_iter = 200 * n
    nfev = 0
    best = [np.inf, x0.copy()]

    def f(x):
        nonlocal nfev
        if nfev >= max_evals:
            raise _BudgetExhausted
        nfev += 1
        val = float(func(x))
        if val < best[0]:
            best[0], best[1] = val, x.copy()
        return val

    fs = np.full(n + 1, np.inf)
    nit = 0
    try:
        for i in range(n + 1):
            if i == 0 and f0 is not None and np.array_equal(sim[0], x0):
                fs[0] = float(f0)
                if fs[0] < best[0]:
                    best[0], best[1] = fs[0], sim[0].copy()
            else:
                fs[i] = f(sim[i])
        while True:
            order = np.argsort(fs, kind="stable")
            sim, fs = sim[order], fs[order]
            spread_x = np.max(np.abs(sim[1:] - sim[0]))
            spread_f = fs[-1] - fs[0]
            if spread_x <= xtol and (ftol is None or spread_f <= ftol):
                return SimplexResult(sim[0].copy(), fs[0], nfev, nit, True, "converged")
            if nit >= max_iter:
                return SimplexResult(sim[0].copy(), fs[0], nfev, nit, False, "iteration limit")
            nit += 1

            centroid = sim[:-1].mean(axis=0)
            xr = centroid + REFLECT * (centroid - sim[-1])
            fr = f(xr)
            if fr < fs[0]:
                xe = centroid + EXPAND * (xr - centroid)
                fe = f(xe)
                if fe < fr:
                    sim[-1], fs[-1] = xe, fe
                else:
                    sim[-1], fs[-1] = xr, fr
                continue
            if fr < fs[-2]:
                sim[-1], fs[-1] = xr, fr
                continue
            if fr < fs[-1]:
                xc = centroid + CONTRACT * (xr - centroid)
                fc = f(xc)
                if fc <= fr:
                    sim[-1], fs[-1] = xc, fc
                    continue
            else:
                xc = centroid + CONTRACT * (sim[-1] - centroid)
                fc = f(xc)
                if fc < fs[-1]:
                    sim[-1], fs[-1] = xc, fc
                    continue
            for i in range(1, n + 1):
                sim[i] = sim[0] + SHRINK * (sim[i] - sim[0])
                fs[i] = f(sim[i])
    except _BudgetExhausted:
        return SimplexResult(best[1], best[0], nfev, nit, False, "evaluation budget exhausted")
