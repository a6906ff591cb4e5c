"""Wall shapes, admissibility constraints and mapped triangulations.

The moving wall is the graph ``x = s(y)`` of a piecewise-linear function
through ``m`` control heights at equispaced stations on ``[-ell, ell]``.
The computational domain is ``{(x, y) : -L <= x <= s(y), |y| <= ell}``:
the left side ``x = -L`` carries Dirichlet data, the horizontal sides are
rigid (Neumann) and the wall carries the Robin condition.
"""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .errors import GeometryError, MalformedShapeError

# relative slack on the floating-point length and slope comparisons
FEASIBILITY_RTOL = 1e-12


def _frozen(a, dtype=float):
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ShapeParam:
    """Control-point description of the wall plus its constraint metadata.

    ``len_min`` defaults to the straight-wall length ``2 * half_height``,
    ``len_max`` to twice that, and ``vol_ref`` to the area enclosed by the
    heights the object is first built with (the reference wall). Shapes
    derived through ``with_heights`` keep the reference.
    """

    heights: np.ndarray
    box_width: float = 0.25
    slope_max: float = 4.0
    len_min: float | None = None
    len_max: float | None = None
    vol_ref: float | None = None
    half_height: float = 0.5
    length: float = 1.0

    def __post_init__(self):
        h = np.atleast_1d(np.asarray(self.heights, dtype=float))
        if h.ndim != 1:
            raise MalformedShapeError("heights must be a 1-D vector")
        object.__setattr__(self, "heights", _frozen(h))
        if self.len_min is None:
            object.__setattr__(self, "len_min", 2.0 * self.half_height)
        if self.len_max is None:
            object.__setattr__(self, "len_max", 2.0 * (2.0 * self.half_height))
        if not (self.box_width > 0 and self.half_height > 0 and self.length > 0):
            raise MalformedShapeError("box_width, half_height and length must be positive")
        if self.vol_ref is None and h.size >= 2 and np.all(np.isfinite(h)):
            object.__setattr__(self, "vol_ref", domain_volume(self))

    @classmethod
    def flat(cls, m: int, height: float = 0.0, **kwargs) -> "ShapeParam":
        return cls(np.full(m, float(height)), **kwargs)

    @property
    def m(self) -> int:
        return self.heights.size

    @property
    def dy(self) -> float:
        return 2.0 * self.half_height / (self.m - 1)

    @property
    def stations(self) -> np.ndarray:
        """y-coordinates of the control heights."""
        m = self.m
        return -self.half_height + 2.0 * self.half_height * np.arange(m) / (m - 1)

    def with_heights(self, heights) -> "ShapeParam":
        return replace(self, heights=np.asarray(heights, dtype=float))

    def wall(self, y) -> np.ndarray:
        """Piecewise-linear interpolation s(y)."""
        return np.interp(y, self.stations, self.heights)


class Violation(NamedTuple):
    constraint: str  # "box_low", "box_high", "slope", "length_min", "length_max"
    index: int  # control (or segment) index, -1 for global constraints
    magnitude: float


def _require_wellformed(shape: ShapeParam):
    if shape.m < 2:
        raise MalformedShapeError(f"need at least 2 control heights, got {shape.m}")
    if not np.all(np.isfinite(shape.heights)):
        raise MalformedShapeError("control heights must be finite")


def shape_length(shape: ShapeParam) -> float:
    """Polyline length of the wall."""
    _require_wellformed(shape)
    ds = np.diff(shape.heights)
    return float(np.sum(np.hypot(shape.dy, ds)))


def domain_volume(shape: ShapeParam) -> float:
    """Area of the domain; exact for the piecewise-linear wall."""
    _require_wellformed(shape)
    s = shape.heights
    wall_integral = shape.dy * (np.sum(s) - 0.5 * (s[0] + s[-1]))
    return float(2.0 * shape.half_height * shape.length + wall_integral)


def validate_shape(shape: ShapeParam) -> list[Violation]:
    """Return every violated admissibility constraint with its excess.

    An empty list means the shape lies in the box, respects the slope bound
    and has a length in ``[len_min, len_max]``.
    """
    _require_wellformed(shape)
    s = shape.heights
    report = []
    for j, sj in enumerate(s):
        if sj < 0.0:
            report.append(Violation("box_low", j, float(-sj)))
        elif sj > shape.box_width:
            report.append(Violation("box_high", j, float(sj - shape.box_width)))
    bound = shape.slope_max * shape.dy
    for j, d in enumerate(np.abs(np.diff(s))):
        if d > bound * (1.0 + FEASIBILITY_RTOL):
            report.append(Violation("slope", j, float(d - bound)))
    length = shape_length(shape)
    if length < shape.len_min * (1.0 - FEASIBILITY_RTOL):
        report.append(Violation("length_min", -1, float(shape.len_min - length)))
    if length > shape.len_max * (1.0 + FEASIBILITY_RTOL):
        report.append(Violation("length_max", -1, float(length - shape.len_max)))
    return report


def project_shape(shape: ShapeParam) -> ShapeParam:
    """Map heights onto the box and slope constraints.

    Clips to ``[0, box_width]`` and replaces the heights by the mean of the
    largest slope-bounded minorant and the smallest slope-bounded majorant.
    Both envelopes stay in the box, so the result is box- and slope-feasible;
    feasible shapes are returned unchanged. The map commutes with reversing
    the heights.
    """
    _require_wellformed(shape)
    s = np.clip(shape.heights, 0.0, shape.box_width)
    if not _slope_violations(s, shape):
        return shape.with_heights(s)
    idx = np.arange(shape.m)
    dist = np.abs(idx[:, None] - idx[None, :]) * (shape.slope_max * shape.dy)
    minorant = np.min(s[None, :] + dist, axis=1)
    majorant = np.max(s[None, :] - dist, axis=1)
    return shape.with_heights(np.clip(0.5 * (minorant + majorant), 0.0, shape.box_width))


def _slope_violations(s, shape: ShapeParam) -> list[int]:
    bound = shape.slope_max * shape.dy * (1.0 + FEASIBILITY_RTOL)
    return [int(j) for j in np.nonzero(np.abs(np.diff(s)) > bound)[0]]


class BoundaryTag(enum.IntEnum):
    DIRICHLET = 0
    NEUMANN = 1
    ROBIN = 2


@dataclass(frozen=True, eq=False)
class Mesh:
    """Triangulation with tagged boundary edges.

    ``triangles`` are counterclockwise; ``boundary_edges[e]`` carries tag
    ``edge_tags[e]``.
    """

    nodes: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    edge_tags: np.ndarray
    h: float = field(default=0.0)

    def __post_init__(self):
        object.__setattr__(self, "nodes", _frozen(np.reshape(self.nodes, (-1, 2))))
        object.__setattr__(self, "triangles", _frozen(np.reshape(self.triangles, (-1, 3)), np.int64))
        object.__setattr__(self, "boundary_edges", _frozen(np.reshape(self.boundary_edges, (-1, 2)), np.int64))
        object.__setattr__(self, "edge_tags", _frozen(self.edge_tags, np.int64))

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def edges_with(self, tag: BoundaryTag) -> np.ndarray:
        return self.boundary_edges[self.edge_tags == int(tag)]

    def nodes_with(self, tag: BoundaryTag) -> np.ndarray:
        return np.unique(self.edges_with(tag))

    def signed_areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def permuted(self, perm) -> "Mesh":
        """Same mesh with node ``i`` renumbered to ``perm[i]``."""
        perm = np.asarray(perm)
        nodes = np.empty_like(self.nodes)
        nodes[perm] = self.nodes
        return Mesh(nodes, perm[self.triangles], perm[self.boundary_edges], self.edge_tags, self.h)


def _row_stations(shape: ShapeParam, ny: int) -> np.ndarray:
    """Uniform row coordinates with the nearest row snapped onto each control knot.

    Snapping keeps the mesh boundary identical to the wall polyline whenever
    ``ny >= m - 1``; ties are broken towards the centre so the stations stay
    mirror-symmetric.
    """
    ell = shape.half_height
    y = -ell + 2.0 * ell * np.arange(ny + 1) / ny
    m = shape.m
    if ny < m - 1:
        return y
    for k, yk in enumerate(shape.stations):
        t = k * ny / (m - 1)
        j = math.floor(t + 0.5) if 2 * k < m - 1 else ny - math.floor(ny - t + 0.5)
        y[j] = yk
    y[0], y[-1] = -ell, ell
    return y


def build_wall_mesh(shape: ShapeParam, nx: int, ny: int) -> Mesh:
    """Mapped structured triangulation of the domain bounded by ``shape``.

    Row ``j`` spans ``[-L, s(y_j)]`` with ``nx`` equal cells. Quads in the
    lower half are split along the rising diagonal and those in the upper
    half along the falling one, so the triangulation is mirror-symmetric
    about ``y = 0`` for even ``ny``.
    """
    _require_wellformed(shape)
    if nx < 1 or ny < 1:
        raise ValueError("nx and ny must be positive")
    L = shape.length
    y = _row_stations(shape, ny)
    width = L + shape.wall(y)
    if np.any(width <= 0.0):
        raise GeometryError("wall crosses the Dirichlet side: s(y) <= -L")

    frac = np.arange(nx + 1) / nx
    xs = -L + frac[None, :] * width[:, None]
    ys = np.broadcast_to(y[:, None], xs.shape)
    nodes = np.column_stack([xs.ravel(), ys.ravel()])

    def nid(i, j):
        return j * (nx + 1) + i

    I, J = np.meshgrid(np.arange(nx), np.arange(ny))
    I, J = I.ravel(), J.ravel()
    a, b, c, d = nid(I, J), nid(I + 1, J), nid(I + 1, J + 1), nid(I, J + 1)
    lower = (2 * J + 1 < ny)[:, None]
    t1 = np.where(lower, np.column_stack([a, b, c]), np.column_stack([a, b, d]))
    t2 = np.where(lower, np.column_stack([a, c, d]), np.column_stack([b, c, d]))
    triangles = np.stack([t1, t2], axis=1).reshape(-1, 3)

    js = np.arange(ny)
    ii = np.arange(nx)
    edges = [
        np.column_stack([nid(0, js + 1), nid(0, js)]),
        np.column_stack([nid(ii, 0), nid(ii + 1, 0)]),
        np.column_stack([nid(ii + 1, ny), nid(ii, ny)]),
        np.column_stack([nid(nx, js), nid(nx, js + 1)]),
    ]
    tags = np.concatenate([
        np.full(ny, BoundaryTag.DIRICHLET),
        np.full(2 * nx, BoundaryTag.NEUMANN),
        np.full(ny, BoundaryTag.ROBIN),
    ])
    h = max(float(width.max()) / nx, float(np.max(np.diff(y))))
    return Mesh(nodes, triangles, np.concatenate(edges), tags, h)


def write_shape_csv(shape_or_heights, stream) -> None:
    heights = getattr(shape_or_heights, "heights", shape_or_heights)
    stream.write("s\n")
    for v in np.asarray(heights, dtype=float):
        stream.write(f"{float(v)!r}\n")


def shape_csv_text(shape_or_heights) -> str:
    buf = io.StringIO()
    write_shape_csv(shape_or_heights, buf)
    return buf.getvalue()


def read_shape_csv(stream) -> np.ndarray:
    """Read control heights from a single-column CSV with header ``s``."""
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["s"]:
        raise MalformedShapeError(f"expected header 's', got {header!r}")
    values = [float(row[0]) for row in reader if row and row[0].strip()]
    return np.array(values, dtype=float)
