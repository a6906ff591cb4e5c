"""P1 finite elements for the Helmholtz problem with a complex Robin wall.

Discrete form, for every test function ``v`` vanishing on the Dirichlet side::

    int grad u . grad conj(v) - omega^2 int u conj(v) + int_wall alpha u conj(v)
        = -int f conj(v) + int_wall h conj(v)

The basis is real, so the system matrix ``K - omega^2 M + M_alpha`` is
complex-symmetric (not Hermitian).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, NamedTuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ContractError, ResonanceError
from .geometry import BoundaryTag, Mesh

log = logging.getLogger(__name__)


class P1Operators(NamedTuple):
    """Real P1 stiffness, mass and wall (Robin edge) mass matrices, CSR."""

    K: sp.csr_matrix
    M: sp.csr_matrix
    M_wall: sp.csr_matrix


def element_geometry(mesh: Mesh):
    """Signed areas and shape-function gradients (``T x 3 x 2``) of every triangle."""
    p = mesh.nodes[mesh.triangles]
    x, y = p[..., 0], p[..., 1]
    # b_i = y_j - y_k, c_i = x_k - x_j over cyclic (i, j, k)
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    area = 0.5 * (b[:, 0] * c[:, 1] - b[:, 1] * c[:, 0])
    grads = np.stack([b, c], axis=2) / (2.0 * area)[:, None, None]
    return area, grads


def _scatter(n, rows, cols, vals):
    return sp.coo_matrix((vals.ravel(), (rows.ravel(), cols.ravel())), shape=(n, n)).tocsr()


def _edge_mass(mesh: Mesh, edges, weights=None):
    n = mesh.n_nodes
    if len(edges) == 0:
        return sp.csr_matrix((n, n))
    length = np.linalg.norm(mesh.nodes[edges[:, 1]] - mesh.nodes[edges[:, 0]], axis=1)
    w = length / 6.0 if weights is None else weights * length / 6.0
    local = np.array([[2.0, 1.0], [1.0, 2.0]])
    vals = w[:, None, None] * local[None]
    rows = np.repeat(edges[:, :, None], 2, axis=2)
    cols = np.repeat(edges[:, None, :], 2, axis=1)
    return _scatter(n, rows, cols, vals)


def p1_operators(mesh: Mesh) -> P1Operators:
    area, grads = element_geometry(mesh)
    if np.any(area <= 0):
        raise ValueError("mesh has non-positive triangle areas")
    tri = mesh.triangles
    rows = np.repeat(tri[:, :, None], 3, axis=2)
    cols = np.repeat(tri[:, None, :], 3, axis=1)
    ke = area[:, None, None] * np.einsum("tid,tjd->tij", grads, grads)
    me = (area / 12.0)[:, None, None] * (np.ones((3, 3)) + np.eye(3))[None]
    n = mesh.n_nodes
    return P1Operators(_scatter(n, rows, cols, ke), _scatter(n, rows, cols, me),
                       _edge_mass(mesh, mesh.edges_with(BoundaryTag.ROBIN)))


def _as_nodal(data, mesh: Mesh, name) -> np.ndarray:
    """Nodal values from ``None`` (zero), a scalar, an array, or ``callable(x, y)``."""
    n = mesh.n_nodes
    if data is None:
        return np.zeros(n, dtype=complex)
    if callable(data):
        vals = data(mesh.nodes[:, 0], mesh.nodes[:, 1])
        return np.broadcast_to(np.asarray(vals, dtype=complex), (n,)).copy()
    arr = np.asarray(data, dtype=complex)
    if arr.ndim == 0:
        return np.full(n, complex(arr))
    if arr.shape != (n,):
        raise ValueError(f"{name}: expected {n} nodal values, got shape {arr.shape}")
    return arr.copy()


@dataclass(frozen=True, eq=False)
class HelmholtzProblem:
    """``Delta u + omega^2 u = f``; ``u = g`` on the Dirichlet side,
    ``du/dn = 0`` on the rigid sides, ``du/dn + alpha u = h`` on the wall.

    ``alpha`` is a complex constant or one value per Robin edge. ``f``, ``g``
    and ``h`` accept ``None``, a constant, nodal values or ``callable(x, y)``.
    ``strict=False`` skips the physical checks (``omega > 0`` and ``alpha`` in
    the absorbing quadrant) for verification runs.
    """

    mesh: Mesh
    omega: float
    alpha: Any
    f: Any = None
    g: Any = None
    h: Any = None
    strict: bool = True

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.alpha, dtype=complex))
        n_robin = len(self.mesh.edges_with(BoundaryTag.ROBIN))
        if a.size not in (1, n_robin):
            raise ValueError(f"alpha must be a constant or have {n_robin} edge values")
        if self.strict:
            if not self.omega > 0:
                raise ValueError("omega must be positive")
            if not (np.all(a.real > 0) and np.all(a.imag < 0)):
                raise ValueError("alpha must satisfy Re(alpha) > 0 and Im(alpha) < 0")

    def edge_alpha(self) -> np.ndarray:
        n_robin = len(self.mesh.edges_with(BoundaryTag.ROBIN))
        return np.broadcast_to(np.atleast_1d(np.asarray(self.alpha, dtype=complex)), (n_robin,))


@dataclass(frozen=True)
class SolverReport:
    residual: float
    n_free: int
    n_dirichlet: int
    factor_nnz: int
    warnings: tuple = ()


@dataclass(frozen=True, eq=False)
class HelmholtzSolution:
    u: np.ndarray
    problem: HelmholtzProblem
    report: SolverReport
    operators: P1Operators = field(repr=False)
    matrix: sp.csr_matrix = field(repr=False)
    rhs: np.ndarray = field(repr=False)


def assemble(problem: HelmholtzProblem, operators: P1Operators | None = None):
    """System matrix and load vector before Dirichlet elimination.

    ``operators`` may carry precomputed ``p1_operators(problem.mesh)``.
    """
    mesh = problem.mesh
    ops = p1_operators(mesh) if operators is None else operators
    a = problem.edge_alpha()
    if a.size == 0:
        robin = ops.M_wall * 0.0
    elif np.all(a == a[0]):
        robin = ops.M_wall * a[0]
    else:
        robin = _edge_mass(mesh, mesh.edges_with(BoundaryTag.ROBIN), a)
    A = (ops.K - problem.omega**2 * ops.M).astype(complex) + robin
    f = _as_nodal(problem.f, mesh, "f")
    h = _as_nodal(problem.h, mesh, "h")
    b = -(ops.M @ f) + ops.M_wall @ h
    return A.tocsr(), b


def dirichlet_values(problem: HelmholtzProblem):
    nodes = problem.mesh.nodes_with(BoundaryTag.DIRICHLET)
    return nodes, _as_nodal(problem.g, problem.mesh, "g")[nodes]


def solve(problem: HelmholtzProblem, operators: P1Operators | None = None) -> HelmholtzSolution:
    """Sparse LU solve with the Dirichlet values imposed strongly."""
    mesh = problem.mesh
    ops = p1_operators(mesh) if operators is None else operators
    A, b = assemble(problem, ops)
    n = mesh.n_nodes
    dn, dv = dirichlet_values(problem)
    warnings = []
    if len(mesh.edges_with(BoundaryTag.ROBIN)) == 0:
        warnings.append("no Robin edges: uniqueness is not guaranteed at resonant frequencies")
    if len(dn) == 0 and len(mesh.edges_with(BoundaryTag.ROBIN)) == 0:
        raise ContractError("need at least one Dirichlet or Robin edge")

    free = np.setdiff1d(np.arange(n), dn)
    u = np.zeros(n, dtype=complex)
    u[dn] = dv
    A_ff = A[free][:, free].tocsc()
    rhs = b[free] - A[free][:, dn] @ dv
    nnz = 0
    if free.size:
        try:
            lu = spla.splu(A_ff)
        except RuntimeError as exc:
            raise ResonanceError(problem.omega, str(exc)) from exc
        u_f = lu.solve(rhs)
        if not np.all(np.isfinite(u_f)):
            raise ResonanceError(problem.omega, "non-finite solution")
        u[free] = u_f
        nnz = lu.L.nnz + lu.U.nnz
        res_vec = A_ff @ u_f - rhs
        bnorm = np.linalg.norm(rhs)
        residual = float(np.linalg.norm(res_vec) / bnorm) if bnorm > 0 else float(np.linalg.norm(res_vec))
    else:
        residual = 0.0
    for w in warnings:
        log.warning(w)
    report = SolverReport(residual, int(free.size), int(len(dn)), int(nnz), tuple(warnings))
    return HelmholtzSolution(u, problem, report, ops, A, b)


def _test_space_check(sol: HelmholtzSolution, v):
    v = np.asarray(v, dtype=complex)
    dn = sol.problem.mesh.nodes_with(BoundaryTag.DIRICHLET)
    if np.any(v[dn] != 0):
        raise ContractError("test function must vanish on the Dirichlet side")
    return v


def variational_residual(sol: HelmholtzSolution, v) -> complex:
    """``a(u_h, v) - l(v)`` for a test vector vanishing on the Dirichlet nodes."""
    v = _test_space_check(sol, v)
    return complex(np.vdot(v, sol.matrix @ sol.u - sol.rhs))


class EnergyBalance(NamedTuple):
    form: float  # Im a(u, v) with v = u on the free nodes
    data: float  # Im l(v)
    wall: float  # Im of the Robin term alone


def energy_balance(sol: HelmholtzSolution) -> EnergyBalance:
    """Imaginary parts of the discrete form tested against the solution itself.

    With zero Dirichlet data only the wall term carries an imaginary part on
    the left, so the wall dissipation balances the work done by the sources.
    """
    v = sol.u.copy()
    v[sol.problem.mesh.nodes_with(BoundaryTag.DIRICHLET)] = 0.0
    form = np.vdot(v, sol.matrix @ sol.u)
    data = np.vdot(v, sol.rhs)
    p = sol.problem
    a = p.edge_alpha()
    if a.size and np.all(a == a[0]):
        wall = a[0] * np.vdot(v, sol.operators.M_wall @ sol.u)
    else:
        wall = np.vdot(v, _edge_mass(p.mesh, p.mesh.edges_with(BoundaryTag.ROBIN), a) @ sol.u)
    return EnergyBalance(float(form.imag), float(data.imag), float(np.imag(wall)))


# Degree-5, 7-point rule on the reference triangle (barycentric points, weights sum to 1)
_A1, _B1 = 0.059715871789770, 0.470142064105115
_A2, _B2 = 0.797426985353087, 0.101286507323456
_QUAD_BARY = np.array([
    [1 / 3, 1 / 3, 1 / 3],
    [_A1, _B1, _B1], [_B1, _A1, _B1], [_B1, _B1, _A1],
    [_A2, _B2, _B2], [_B2, _A2, _B2], [_B2, _B2, _A2],
])
_QUAD_W = np.array([0.225] + [0.132394152788506] * 3 + [0.125939180544827] * 3)


def l2_error(mesh: Mesh, u: np.ndarray, exact: Callable) -> float:
    """``||u_h - exact||_{L2}`` with a degree-5 quadrature on every triangle."""
    area, _ = element_geometry(mesh)
    p = mesh.nodes[mesh.triangles]
    qp = np.einsum("qk,tkd->tqd", _QUAD_BARY, p)
    uh = np.einsum("qk,tk->tq", _QUAD_BARY, np.asarray(u)[mesh.triangles])
    diff = uh - exact(qp[..., 0], qp[..., 1])
    return math.sqrt(float(np.sum(area[:, None] * _QUAD_W[None, :] * np.abs(diff) ** 2)))
