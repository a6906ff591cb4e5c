"""Command-line entry point: ``wallshape <subcommand> --config <path>``.

Exit codes: 0 success, 1 run completed with unconverged fits, 2 bad
configuration or failed run.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import files
from .alpha_fit import alpha_sweep
from .analytic import ModeProblem, mode_u2
from .config import RunConfig, load_config
from .energy import energy_J, frequency_energies, volume_penalty, write_history_csv
from .errors import ConfigError, WallshapeError
from .fem import HelmholtzProblem, l2_error, p1_operators, solve
from .geometry import ShapeParam, build_wall_mesh, shape_csv_text, validate_shape
from .shape_opt import OptContext, optimize_shape

log = logging.getLogger("wallshape")

EXIT_OK, EXIT_UNCONVERGED, EXIT_ERROR = 0, 1, 2


def worker_count() -> int:
    raw = os.environ.get("WALLSHAPE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        log.warning("ignoring non-integer WALLSHAPE_THREADS=%r", raw)
        return 1


def _alphas(cfg: RunConfig, workers: int):
    """Robin coefficients per frequency: fixed by the config or fitted."""
    if cfg.solve.alpha is not None:
        a = complex(*cfg.solve.alpha)
        return [a] * len(cfg.frequencies), True
    table = alpha_sweep(cfg.frequencies, cfg.fit, cfg.material, warm_start=cfg.warm_start, workers=workers)
    if not table.all_converged:
        log.warning("alpha fit did not converge at every frequency")
    return [r.alpha for r in table.rows], table.all_converged


def _write(out: Path, name: str, text: str):
    files.atomic_write_text(out / name, text)


def cmd_fit_alpha(cfg: RunConfig, out: Path, args) -> int:
    table = alpha_sweep(cfg.frequencies, cfg.fit, cfg.material, warm_start=cfg.warm_start,
                        workers=worker_count())
    _write(out, "alpha_table.csv", files.render(table.write_csv))
    for name, pairs in table.plot_series().items():
        _write(out, f"alpha_plot_{name}.csv", files.render(files.write_xy_csv, pairs, ("omega", name)))
    bad = [r.omega for r in table.rows if not r.converged]
    for w in bad:
        print(f"unconverged: omega={w!r}", file=sys.stderr)
    print(f"fitted {len(table.rows)} frequencies, {len(bad)} unconverged")
    return EXIT_OK if not bad else EXIT_UNCONVERGED


def _mode_oracle(cfg: RunConfig, shape: ShapeParam, omega_fem: float, alpha: complex):
    """Analytic Robin-mode field for a flat wall, or ``None`` when not applicable."""
    s = cfg.solve
    if s.source or s.robin_data or np.ptp(shape.heights) != 0:
        return None
    ell = cfg.geometry.ell
    x0 = float(shape.heights[0])
    k = s.dirichlet_mode * np.pi / (2.0 * ell)
    # unit wave speed: the finite-element coefficient already is a wavenumber
    mat = replace(cfg.material, c0=1.0)
    mp = ModeProblem(k, omega_fem, cfg.geometry.L + x0, s.dirichlet_amplitude, mat)

    def exact(x, y):
        return mode_u2(mp, alpha, x - x0) * np.cos(k * (y + ell))

    return exact


def cmd_solve(cfg: RunConfig, out: Path, args) -> int:
    workers = worker_count()
    shape = cfg.shape_template()
    alphas, converged = _alphas(cfg, workers)
    data = cfg.problem_data(workers)
    mesh = build_wall_mesh(shape, data.nx, data.ny)
    ops = p1_operators(mesh)
    Js, J1s = [], []
    for i, (omega, alpha) in enumerate(zip(cfg.frequencies, alphas)):
        prob = HelmholtzProblem(mesh, omega * data.slowness, alpha, data.f, data.g, data.h)
        sol = solve(prob, ops)
        J = energy_J(sol, cfg.energy).value
        Js.append(J)
        J1s.append(J + volume_penalty(shape, cfg.energy))
        name = "solution.vtk" if len(cfg.frequencies) == 1 else f"solution_{i:03d}.vtk"
        _write(out, name, files.render(files.write_vtk, mesh, sol.u, title=f"omega={omega!r} alpha={alpha!r}"))
        if args.verify:
            exact = _mode_oracle(cfg, shape, prob.omega, alpha)
            if exact is None:
                print("verify: requires a flat wall with zero source and Robin data", file=sys.stderr)
                return EXIT_ERROR
            print(f"L2_error omega={omega!r} value={l2_error(mesh, sol.u, exact)!r}")
    if cfg.solve.dump_mesh:
        _write(out, "nodes.csv", files.render(files.write_nodes_csv, mesh))
        _write(out, "triangles.csv", files.render(files.write_triangles_csv, mesh))
    print(f"J={float(np.mean(Js))!r} J1={float(np.mean(J1s))!r}")
    return EXIT_OK if converged else EXIT_UNCONVERGED


def cmd_optimize(cfg: RunConfig, out: Path, args) -> int:
    workers = worker_count()
    template = cfg.shape_template()
    if validate_shape(template):
        raise ConfigError("initial shape violates the admissibility constraints")
    alphas, converged = _alphas(cfg, workers)
    opt_cfg = cfg.optimize
    ctx = OptContext(template, tuple(cfg.frequencies), tuple(alphas), cfg.energy,
                     cfg.problem_data(workers), opt_cfg)

    def on_improvement(history, shape):
        _write(out, "history.csv", files.render(write_history_csv, [e.csv_row() for e in history]))
        _write(out, "best_shape.csv", shape_csv_text(shape))
        if cfg.snapshots:
            _snapshot(ctx, shape, out / "snapshots" / f"iter_{history[-1].iter:05d}.vtk")

    result = optimize_shape(opt_cfg, ctx, initial=template, callback=on_improvement)
    rows = [e.csv_row() for e in result.history]
    _write(out, "history.csv", files.render(write_history_csv, rows))
    _write(out, "best_shape.csv", shape_csv_text(result.best_shape))
    print(f"initial J1={result.initial_objective!r}")
    print(f"final J1={result.final_objective!r}")
    return EXIT_OK if converged else EXIT_UNCONVERGED


def _snapshot(ctx, shape, path):
    mesh = build_wall_mesh(shape, ctx.data.nx, ctx.data.ny)
    d = ctx.data
    prob = HelmholtzProblem(mesh, ctx.omegas[0] * d.slowness, ctx.alphas[0], d.f, d.g, d.h)
    files.atomic_write_text(path, files.render(files.write_vtk, mesh, solve(prob).u, title=path.stem))


def cmd_sweep(cfg: RunConfig, out: Path, args) -> int:
    """Energy of the configured wall across the frequency list."""
    workers = worker_count()
    shape = cfg.shape_template()
    alphas, converged = _alphas(cfg, workers)
    energies = frequency_energies(shape, cfg.frequencies, alphas, cfg.energy, cfg.problem_data(workers))
    lines = ["omega,re_alpha,im_alpha,J,J1\n"]
    for e, a in zip(energies, alphas):
        lines.append(f"{e.omega!r},{a.real!r},{a.imag!r},{e.J!r},{e.J1!r}\n")
    _write(out, "sweep.csv", "".join(lines))
    print(f"swept {len(energies)} frequencies")
    return EXIT_OK if converged else EXIT_UNCONVERGED


COMMANDS = {
    "fit-alpha": cmd_fit_alpha,
    "solve": cmd_solve,
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wallshape", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="TOML run configuration")
    parser.add_argument("--out", help="output directory (overrides output_dir)")
    parser.add_argument("--verify", action="store_true", help="compare solve output with the analytic mode")
    parser.add_argument("--seed", type=int, help="override the configured seed")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s", stream=sys.stderr)
    notes: list[str] = []
    try:
        cfg = load_config(args.config, notes)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed, optimize=replace(cfg.optimize, seed=args.seed))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for note in notes:
        print(f"note: {note}", file=sys.stderr)
    out = Path(args.out) if args.out else cfg.base_dir / cfg.output_dir
    try:
        return COMMANDS[args.command](cfg, out, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (WallshapeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
