"""Derivative-free search for the wall shape of least acoustic energy.

Candidates are projected onto the box and slope constraints before
meshing, so every solve sees a valid mesh; the raw candidate pays a
quadratic penalty for each constraint it violates. Only projections that
satisfy every constraint (length included) can become the incumbent.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .energy import EnergyWeights, ProblemData, frequency_energies
from .errors import ContractError, GeometryError, MalformedShapeError, ResonanceError
from .geometry import ShapeParam, domain_volume, project_shape, shape_length, validate_shape
from .simplex import nelder_mead

CAP_FACTOR = 1e6


@dataclass(frozen=True)
class OptConfig:
    """Search settings.

    ``simplex_scale``, ``xtol`` and ``initial_height`` are fractions of the
    box width; the default start is the flat wall in the middle of the box.
    With ``tied`` all heights move together (one free parameter).
    """

    m: int = 8
    budget: int = 300
    simplex_scale: float = 0.25
    xtol: float = 1e-3
    restarts: int = 3
    seed: int = 0
    penalty_box: float = 1e4
    penalty_slope: float = 1e4
    penalty_length: float = 1e4
    tied: bool = False
    initial_height: float = 0.5

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("need m >= 2 control heights")
        if self.budget < 1:
            raise ValueError("budget must be at least 1")

    def penalty_weight(self, constraint: str) -> float:
        if constraint.startswith("box"):
            return self.penalty_box
        if constraint == "slope":
            return self.penalty_slope
        return self.penalty_length


@dataclass(frozen=True)
class OptContext:
    """Everything needed to score a shape.

    ``template`` supplies the constraint metadata, including the reference
    volume of the volume penalty; its heights are ignored by the search.
    """

    template: ShapeParam
    omegas: tuple
    alphas: tuple
    weights: EnergyWeights = field(default_factory=EnergyWeights)
    data: ProblemData = field(default_factory=ProblemData)
    cfg: OptConfig = field(default_factory=OptConfig)


class Evaluation(NamedTuple):
    value: float  # penalized objective
    J: float  # mean energy of the projected shape
    J1: float  # mean volume-penalized energy of the projected shape
    penalty: float
    projected: ShapeParam
    feasible: bool  # projected shape satisfies every constraint
    failed: bool  # meshing or solving failed, value is the cap


def constraint_penalty(shape: ShapeParam, cfg: OptConfig) -> float:
    return float(sum(cfg.penalty_weight(v.constraint) * v.magnitude**2 for v in validate_shape(shape)))


def evaluate(shape: ShapeParam, ctx: OptContext, cap: float | None = None) -> Evaluation:
    if shape.m != ctx.template.m:
        raise MalformedShapeError(f"expected {ctx.template.m} heights, got {shape.m}")
    penalty = constraint_penalty(shape, ctx.cfg)
    proj = project_shape(shape)
    feasible = not validate_shape(proj)
    try:
        energies = frequency_energies(proj, ctx.omegas, ctx.alphas, ctx.weights, ctx.data)
    except (GeometryError, ResonanceError):
        if cap is None:
            raise
        return Evaluation(cap, np.nan, np.nan, penalty, proj, False, True)
    J = float(np.mean([e.J for e in energies]))
    J1 = float(np.mean([e.J1 for e in energies]))
    return Evaluation(J1 + penalty, J, J1, penalty, proj, feasible, False)


def penalized_objective(shape: ShapeParam, ctx: OptContext) -> float:
    """Mean ``J1`` of the projected shape plus the constraint penalties of ``shape``."""
    return evaluate(shape, ctx).value


class HistoryEntry(NamedTuple):
    iter: int
    objective: float  # best-so-far accepted J1
    J: float
    J1: float
    vol: float
    len: float
    omega_mean: float
    feasible: bool  # the candidate of this evaluation projected to a feasible shape

    def csv_row(self):
        return (self.iter, self.J, self.J1, self.vol, self.len, self.omega_mean)


@dataclass
class OptResult:
    best_shape: ShapeParam
    history: list[HistoryEntry]
    initial_objective: float
    final_objective: float
    evaluations: int
    accepted: list[ShapeParam] = field(default_factory=list)


def optimize_shape(cfg: OptConfig, ctx: OptContext, initial: ShapeParam | None = None,
                   callback: Callable[[list, ShapeParam], None] | None = None) -> OptResult:
    """Nelder-Mead over the control heights with seeded restarts.

    ``callback(history, best_shape)`` fires with the history so far whenever
    the incumbent improves (and once for the initial shape).
    """
    template = ctx.template
    if cfg.m != template.m:
        raise ValueError("OptConfig.m does not match the template shape")
    if initial is None:
        initial = template.with_heights(np.full(cfg.m, cfg.initial_height * template.box_width))
    shape0 = initial
    if validate_shape(shape0):
        raise ContractError("initial shape is not admissible")
    omega_mean = float(np.mean(ctx.omegas))
    width = template.box_width

    def to_shape(p):
        return template.with_heights(np.full(cfg.m, p[0]) if cfg.tied else p)

    first = evaluate(shape0, ctx)
    cap = CAP_FACTOR * max(abs(first.value), np.finfo(float).tiny)
    best = {"shape": shape0, "eval": first}
    accepted = [shape0]

    def entry(n, feasible):
        b, s = best["eval"], best["shape"]
        return HistoryEntry(n, b.J1, b.J, b.J1, domain_volume(s), shape_length(s), omega_mean, feasible)

    history = [entry(1, True)]
    if callback:
        callback(history, shape0)

    def objective(p):
        ev = evaluate(to_shape(p), ctx, cap)
        improved = ev.feasible and not ev.failed and ev.J1 < best["eval"].J1
        if improved:
            best["shape"], best["eval"] = ev.projected, ev
            accepted.append(ev.projected)
        history.append(entry(len(history) + 1, ev.feasible and not ev.failed))
        if improved and callback:
            callback(history, ev.projected)
        return ev.value

    rng = np.random.default_rng(cfg.seed)
    p0 = np.array([shape0.heights.mean()]) if cfg.tied else shape0.heights.copy()
    f0 = first.value
    step = cfg.simplex_scale * width * np.ones(p0.size)
    for attempt in range(cfg.restarts + 1):
        remaining = cfg.budget - len(history)
        if remaining <= 0:
            break
        nelder_mead(objective, p0, step, xtol=cfg.xtol * width, max_evals=remaining, f0=f0)
        bs = best["shape"].heights
        p0 = np.array([bs.mean()]) if cfg.tied else bs.copy()
        f0 = None
        signs = rng.choice([-1.0, 1.0], size=p0.size)
        step = cfg.simplex_scale * width * 0.5 ** (attempt + 1) * signs

    final_shape = project_shape(best["shape"])
    final = evaluate(final_shape, ctx)
    if not final.feasible:
        raise RuntimeError("incumbent shape is not admissible after projection")
    return OptResult(final_shape, history, first.J1, final.J1, len(history), accepted)
