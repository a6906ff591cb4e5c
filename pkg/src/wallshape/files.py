"""Atomic file emission, legacy VTK output and debugging CSV dumps."""
from __future__ import annotations

import io
import os
import tempfile
from pathlib import Path

import numpy as np

from .geometry import Mesh

VTK_TRIANGLE = 5


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file and rename.

    Readers see either the previous file or the complete new one.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def render(writer, *args, **kwargs) -> str:
    """Text produced by ``writer(*args, stream, **kwargs)``."""
    buf = io.StringIO()
    writer(*args, buf, **kwargs)
    return buf.getvalue()


def write_vtk(mesh: Mesh, u, stream, title: str = "wallshape solution") -> None:
    """Legacy 3.0 ASCII unstructured grid with point scalars re_u, im_u, abs_u."""
    u = np.asarray(u, dtype=complex)
    n, t = mesh.n_nodes, len(mesh.triangles)
    w = stream.write
    w("# vtk DataFile Version 3.0\n")
    w(title.replace("\n", " ")[:255] + "\n")
    w("ASCII\nDATASET UNSTRUCTURED_GRID\n")
    w(f"POINTS {n} double\n")
    for x, y in mesh.nodes:
        w(f"{float(x)!r} {float(y)!r} 0.0\n")
    w(f"CELLS {t} {4 * t}\n")
    for a, b, c in mesh.triangles:
        w(f"3 {a} {b} {c}\n")
    w(f"CELL_TYPES {t}\n")
    w(f"{VTK_TRIANGLE}\n" * t)
    w(f"POINT_DATA {n}\n")
    for name, vals in (("re_u", u.real), ("im_u", u.imag), ("abs_u", np.abs(u))):
        w(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
        for v in vals:
            w(f"{float(v)!r}\n")


def read_vtk(stream):
    """Parse files produced by :func:`write_vtk`.

    Returns ``(nodes, triangles, fields)`` with ``fields`` mapping scalar
    names to arrays.
    """
    lines = [ln.strip() for ln in stream.read().split("\n")]
    if not lines[0].startswith("# vtk DataFile Version"):
        raise ValueError("not a legacy VTK file")
    if lines[2] != "ASCII" or lines[3] != "DATASET UNSTRUCTURED_GRID":
        raise ValueError("expected an ASCII unstructured grid")
    i = 4
    n = int(lines[i].split()[1])
    pts = np.array([[float(v) for v in lines[i + 1 + k].split()] for k in range(n)])
    i += n + 1
    t = int(lines[i].split()[1])
    cells = np.array([[int(v) for v in lines[i + 1 + k].split()] for k in range(t)], dtype=np.int64)
    if t and np.any(cells[:, 0] != 3):
        raise ValueError("only triangle cells are supported")
    i += t + 1
    i += t + 1  # CELL_TYPES block
    if int(lines[i].split()[1]) != n:
        raise ValueError("POINT_DATA size mismatch")
    i += 1
    fields = {}
    while i < len(lines) and lines[i].startswith("SCALARS"):
        name = lines[i].split()[1]
        fields[name] = np.array([float(v) for v in lines[i + 2:i + 2 + n]])
        i += 2 + n
    return pts[:, :2], cells[:, 1:], fields


def write_nodes_csv(mesh: Mesh, stream) -> None:
    stream.write("x,y\n")
    for x, y in mesh.nodes:
        stream.write(f"{float(x)!r},{float(y)!r}\n")


def write_triangles_csv(mesh: Mesh, stream) -> None:
    stream.write("a,b,c\n")
    for a, b, c in mesh.triangles:
        stream.write(f"{a},{b},{c}\n")


def write_xy_csv(pairs, header: tuple[str, str], stream) -> None:
    stream.write(f"{header[0]},{header[1]}\n")
    for x, y in pairs:
        stream.write(f"{float(x)!r},{float(y)!r}\n")
