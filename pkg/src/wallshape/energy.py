"""Acoustic energy of a discrete solution and its volume-penalized variant."""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, NamedTuple

import numpy as np

from .errors import ResonanceError
from .fem import HelmholtzProblem, HelmholtzSolution, element_geometry, p1_operators, solve
from .geometry import BoundaryTag, ShapeParam, build_wall_mesh, domain_volume

HISTORY_HEADER = ["iter", "J", "J1", "vol", "len", "omega_mean"]


@dataclass(frozen=True)
class EnergyWeights:
    """Weights of the volume, gradient and wall terms and of the volume penalty.

    ``vol_ref=None`` takes the reference volume from the shape.
    """

    A: float = 1.0
    B: float = 1.0
    C: float = 1.0
    kappa: float = 1e3
    vol_ref: float | None = None

    def __post_init__(self):
        if min(self.A, self.B, self.C, self.kappa) < 0:
            raise ValueError("energy weights must be nonnegative")
        if self.A + self.B + self.C <= 0:
            raise ValueError("need A + B + C > 0")


class Energy(NamedTuple):
    value: float
    volume: float  # A * int |u|^2
    gradient: float  # B * int |grad u|^2
    wall: float  # C * int_wall |u|^2


def _quad(mat, u) -> float:
    return float(np.real(np.vdot(u, mat @ u)))


def energy_J(sol: HelmholtzSolution, w: EnergyWeights) -> Energy:
    ops = sol.operators
    u = sol.u
    vol = w.A * _quad(ops.M, u)
    grad = w.B * _quad(ops.K, u)
    wall = w.C * _quad(ops.M_wall, u)
    return Energy(vol + grad + wall, vol, grad, wall)


def energy_J_elementwise(sol: HelmholtzSolution, w: EnergyWeights) -> Energy:
    """Same functional by a loop over elements and wall edges (reference path)."""
    mesh = sol.problem.mesh
    u = sol.u
    area, grads = element_geometry(mesh)
    vol = grad = 0.0
    for t, tri in enumerate(mesh.triangles):
        ut = u[tri]
        # exact P1 integral of |u|^2 = area/12 (sum |u_i|^2 + |sum u_i|^2)
        vol += area[t] / 12.0 * (np.sum(np.abs(ut) ** 2) + abs(np.sum(ut)) ** 2)
        g = grads[t].T @ ut
        grad += area[t] * float(np.sum(np.abs(g) ** 2))
    wall = 0.0
    for a, b in mesh.edges_with(BoundaryTag.ROBIN):
        length = float(np.hypot(*(mesh.nodes[b] - mesh.nodes[a])))
        wall += length / 3.0 * (abs(u[a]) ** 2 + (u[a] * np.conj(u[b])).real + abs(u[b]) ** 2)
    vol, grad, wall = w.A * vol, w.B * grad, w.C * wall
    return Energy(vol + grad + wall, vol, grad, wall)


def volume_penalty(shape: ShapeParam, w: EnergyWeights) -> float:
    ref = shape.vol_ref if w.vol_ref is None else w.vol_ref
    return w.kappa * (domain_volume(shape) - ref) ** 2


def energy_J1(sol: HelmholtzSolution, w: EnergyWeights, shape: ShapeParam) -> float:
    return energy_J(sol, w).value + volume_penalty(shape, w)


@dataclass(frozen=True)
class ProblemData:
    """Mesh resolution and data shared by every frequency.

    The finite-element coefficient is ``omega * slowness``; with
    ``slowness = 1 / c0`` a physical angular frequency becomes a wavenumber.
    """

    nx: int = 32
    ny: int = 32
    f: Any = None
    g: Any = 1.0
    h: Any = None
    slowness: float = 1.0
    workers: int = 1


class FrequencyEnergy(NamedTuple):
    omega: float
    J: float
    J1: float


def frequency_energies(shape: ShapeParam, omegas, alphas, w: EnergyWeights,
                       data: ProblemData) -> list[FrequencyEnergy]:
    """Solve once per frequency on a single mesh and report ``J`` and ``J1``."""
    omegas = [float(o) for o in omegas]
    alphas = [complex(a) for a in alphas]
    if len(omegas) != len(alphas) or not omegas:
        raise ValueError("need matching, nonempty frequency and alpha lists")
    mesh = build_wall_mesh(shape, data.nx, data.ny)
    ops = p1_operators(mesh)
    penalty = volume_penalty(shape, w)

    def one(pair):
        omega, alpha = pair
        prob = HelmholtzProblem(mesh, omega * data.slowness, alpha, data.f, data.g, data.h)
        try:
            sol = solve(prob, ops)
        except ResonanceError as exc:
            raise ResonanceError(omega, f"solve failed ({exc})") from exc
        J = energy_J(sol, w).value
        return FrequencyEnergy(omega, J, J + penalty)

    pairs = list(zip(omegas, alphas))
    if data.workers > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=data.workers) as pool:
            return list(pool.map(one, pairs))
    return [one(p) for p in pairs]


def multi_frequency_energy(shape: ShapeParam, omegas, alphas, w: EnergyWeights,
                           data: ProblemData) -> float:
    """Mean of ``J1`` over the frequencies, each with its own alpha."""
    return float(np.mean([e.J1 for e in frequency_energies(shape, omegas, alphas, w, data)]))


def write_history_csv(rows, stream) -> None:
    """Rows are ``(iter, J, J1, vol, len, omega_mean)`` tuples."""
    stream.write(",".join(HISTORY_HEADER) + "\n")
    for it, J, J1, vol, length, om in rows:
        stream.write(f"{int(it)},{float(J)!r},{float(J1)!r},{float(vol)!r},{float(length)!r},{float(om)!r}\n")


def read_history_csv(stream) -> list[tuple]:
    reader = csv.reader(stream)
    header = next(reader, None)
    if header != HISTORY_HEADER:
        raise ValueError(f"unexpected history header {header!r}")
    return [(int(r[0]), *map(float, r[1:])) for r in reader if r]
