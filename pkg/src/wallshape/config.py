"""Run configuration: TOML parsing, validation and defaults."""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .alpha_fit import FitConfig
from .analytic import MaterialParams
from .energy import EnergyWeights, ProblemData
from .errors import ConfigError
from .geometry import ShapeParam, read_shape_csv
from .shape_opt import OptConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass(frozen=True)
class GeometryConfig:
    L: float = 1.0
    ell: float = 0.5
    box_width: float = 0.25
    m: int = 8
    slope_max: float = 4.0
    len_max: float | None = None
    nx: int = 32
    ny: int = 32
    initial_height: float = 0.5  # fraction of box_width
    shape_csv: str | None = None


@dataclass(frozen=True)
class SolveConfig:
    """Data of the Helmholtz problem solved at every frequency.

    Dirichlet data is ``dirichlet_amplitude * cos(k_n (y + ell))`` with
    ``n = dirichlet_mode``; ``source`` and ``robin_data`` are constants.
    ``alpha`` (``[re, im]``) bypasses the fit.
    """

    alpha: tuple | None = None
    dirichlet_amplitude: float = 1.0
    dirichlet_mode: int = 0
    source: float = 0.0
    robin_data: float = 0.0
    dump_mesh: bool = False


@dataclass(frozen=True)
class RunConfig:
    geometry: GeometryConfig
    material: MaterialParams
    fit: FitConfig
    energy: EnergyWeights
    optimize: OptConfig
    solve: SolveConfig
    frequencies: tuple
    output_dir: str = "out"
    seed: int = 0
    warm_start: bool = True
    snapshots: bool = False
    base_dir: Path = field(default=Path("."), compare=False)

    def shape_template(self) -> ShapeParam:
        """Reference wall: flat at ``initial_height`` of the box, or read from ``shape_csv``."""
        g = self.geometry
        kw = dict(box_width=g.box_width, slope_max=g.slope_max, len_max=g.len_max,
                  half_height=g.ell, length=g.L)
        if g.shape_csv:
            path = self.base_dir / g.shape_csv
            with open(path, newline="") as fh:
                heights = read_shape_csv(fh)
            return ShapeParam(heights, **kw)
        return ShapeParam.flat(g.m, g.initial_height * g.box_width, **kw)

    def problem_data(self, workers: int = 1) -> ProblemData:
        s, g = self.solve, self.geometry
        k = s.dirichlet_mode * math.pi / (2.0 * g.ell)
        amp = s.dirichlet_amplitude
        ell = g.ell

        def dirichlet(x, y):
            return amp * np.cos(k * (y + ell))

        return ProblemData(nx=g.nx, ny=g.ny, f=s.source or None, g=dirichlet,
                           h=s.robin_data or None, slowness=1.0 / self.material.c0, workers=workers)


_SECTIONS = ("geometry", "material", "fit", "energy", "optimize", "solve")
_TOP = {"frequencies", "output_dir", "seed", *_SECTIONS}


def _take(table: dict, cls, section: str, exclude=()) -> dict:
    allowed = {f.name for f in fields(cls)} - set(exclude)
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ConfigError(f"unknown key '{section}.{unknown[0]}'")
    return dict(table)


def _frequencies(spec) -> tuple:
    if isinstance(spec, list):
        values = [float(v) for v in spec]
    elif isinstance(spec, dict):
        extra = sorted(set(spec) - {"start", "stop", "count", "spacing"})
        if extra:
            raise ConfigError(f"unknown key 'frequencies.{extra[0]}'")
        try:
            start, stop, count = float(spec["start"]), float(spec["stop"]), int(spec["count"])
        except KeyError as exc:
            raise ConfigError(f"frequencies: missing key {exc.args[0]!r}") from None
        spacing = spec.get("spacing", "log")
        if spacing == "log":
            values = list(np.geomspace(start, stop, count))
        elif spacing == "linear":
            values = list(np.linspace(start, stop, count))
        else:
            raise ConfigError(f"frequencies.spacing must be 'log' or 'linear', got {spacing!r}")
    else:
        raise ConfigError("frequencies must be a list or a {start, stop, count} table")
    if not values or any(not v > 0 for v in values):
        raise ConfigError("frequencies must be a nonempty list of positive values")
    return tuple(float(v) for v in values)


def _g_spectrum(table) -> dict:
    out = {}
    for key, val in table.items():
        try:
            n = int(key)
        except ValueError:
            raise ConfigError(f"fit.g: mode index must be an integer, got {key!r}") from None
        if isinstance(val, list):
            if len(val) != 2:
                raise ConfigError(f"fit.g.{key}: expected [re, im]")
            out[n] = complex(float(val[0]), float(val[1]))
        else:
            out[n] = complex(float(val))
    return out


def parse_config(data: dict, base_dir: Path = Path("."), notes: list | None = None) -> RunConfig:
    """Build a :class:`RunConfig` from a parsed TOML mapping.

    ``notes`` collects human-readable messages about applied defaults.
    """
    notes = [] if notes is None else notes
    unknown = sorted(set(data) - _TOP)
    if unknown:
        raise ConfigError(f"unknown key '{unknown[0]}'")
    for sec in _SECTIONS:
        if sec in data and not isinstance(data[sec], dict):
            raise ConfigError(f"'{sec}' must be a table")
    try:
        geo_t = _take(data.get("geometry", {}), GeometryConfig, "geometry")
        for key in ("nx", "ny"):
            if key not in geo_t:
                notes.append(f"geometry.{key} not set; using default {getattr(GeometryConfig, key)}")
        geometry = GeometryConfig(**geo_t)

        mat_t = dict(data.get("material", {"preset": "isorel"}))
        preset = mat_t.pop("preset", None)
        _take(mat_t, MaterialParams, "material")
        if preset is not None:
            if preset != "isorel":
                raise ConfigError(f"material.preset: unknown preset {preset!r}")
            material = replace(MaterialParams.isorel(), **mat_t)
        else:
            material = MaterialParams(**mat_t)

        fit_t = dict(data.get("fit", {}))
        warm = fit_t.pop("warm_start", True)
        _take(fit_t, FitConfig, "fit", exclude=("L", "ell"))
        if "g_spectrum" in fit_t:
            fit_t["g_spectrum"] = _g_spectrum(fit_t["g_spectrum"])
        fit = FitConfig(L=geometry.L, ell=geometry.ell, **fit_t)

        energy = EnergyWeights(**_take(data.get("energy", {}), EnergyWeights, "energy"))

        opt_t = dict(data.get("optimize", {}))
        snapshots = bool(opt_t.pop("snapshots", False))
        _take(opt_t, OptConfig, "optimize", exclude=("m", "seed"))
        seed = int(data.get("seed", 0))
        optimize = OptConfig(m=geometry.m, seed=seed, initial_height=geometry.initial_height, **opt_t)

        solve_t = _take(data.get("solve", {}), SolveConfig, "solve")
        if "alpha" in solve_t:
            a = solve_t["alpha"]
            if not (isinstance(a, list) and len(a) == 2):
                raise ConfigError("solve.alpha: expected [re, im]")
            solve_t["alpha"] = (float(a[0]), float(a[1]))
        solve = SolveConfig(**solve_t)

        if "frequencies" not in data:
            raise ConfigError("missing key 'frequencies'")
        freqs = _frequencies(data["frequencies"])
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return RunConfig(geometry, material, fit, energy, optimize, solve, freqs,
                     output_dir=str(data.get("output_dir", "out")), seed=seed,
                     warm_start=bool(warm), snapshots=snapshots, base_dir=base_dir)


def load_config(path, notes: list | None = None) -> RunConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    return parse_config(data, path.parent, notes)
