"""ASCII OBJ / OFF reading and OBJ writing.

Only vertex positions and triangle connectivity are read. Nothing is
welded, reordered or triangulated.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .mesh import TriangleMesh


class MeshFormatError(ValueError):
    pass


def _infer_format(path: Path, fmt):
    if fmt is not None:
        fmt = fmt.lower()
    else:
        fmt = path.suffix.lower().lstrip(".")
    if fmt not in ("obj", "off"):
        raise MeshFormatError(f"unsupported mesh format {fmt!r} (expected obj or off)")
    return fmt


def load_mesh(path, format=None) -> TriangleMesh:
    """Read a triangle mesh from an ASCII OBJ or OFF file.

    Parameters
    ----------
    path : str or Path
        Mesh file.
    format : {"obj", "off"}, optional
        Overrides the format inferred from the file extension.

    Raises
    ------
    MeshFormatError
        On malformed records, non-triangular faces or out-of-range indices.
    """
    path = Path(path)
    fmt = _infer_format(path, format)
    text = path.read_text()
    if fmt == "obj":
        return _parse_obj(text, path)
    return _parse_off(text, path)


def _parse_obj(text, path):
    verts = []
    faces = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        parts = raw.split("#", 1)[0].split()
        if not parts:
            continue
        tag = parts[0]
        if tag == "v":
            if len(parts) < 4:
                raise MeshFormatError(f"{path}:{lineno}: vertex needs 3 coordinates")
            try:
                verts.append([float(x) for x in parts[1:4]])
            except ValueError as e:
                raise MeshFormatError(f"{path}:{lineno}: {e}") from None
        elif tag == "f":
            if len(parts) != 4:
                raise MeshFormatError(
                    f"{path}:{lineno}: face with {len(parts) - 1} vertices; only triangles are supported"
                )
            idx = []
            for tok in parts[1:]:
                try:
                    k = int(tok.split("/", 1)[0])
                except ValueError:
                    raise MeshFormatError(f"{path}:{lineno}: bad face index {tok!r}") from None
                if k < 0:
                    k = len(verts) + k + 1
                if k < 1:
                    raise MeshFormatError(f"{path}:{lineno}: face index {tok} out of range")
                idx.append(k - 1)
            faces.append(idx)
    return _build(verts, faces, path)


def _parse_off(text, path):
    tokens = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            tokens.append(line.split())
    if not tokens or not tokens[0][0].upper().endswith("OFF"):
        raise MeshFormatError(f"{path}: missing OFF header")
    head = tokens[0][1:]
    rows = tokens[1:]
    if not head:
        if not rows:
            raise MeshFormatError(f"{path}: missing counts line")
        head, rows = rows[0], rows[1:]
    try:
        nv, nf = int(head[0]), int(head[1])
    except (ValueError, IndexError):
        raise MeshFormatError(f"{path}: bad counts line {' '.join(head)!r}") from None
    if len(rows) < nv + nf:
        raise MeshFormatError(f"{path}: expected {nv} vertices and {nf} faces, file is truncated")
    try:
        verts = [[float(x) for x in r[:3]] for r in rows[:nv]]
    except ValueError as e:
        raise MeshFormatError(f"{path}: {e}") from None
    if any(len(v) != 3 for v in verts):
        raise MeshFormatError(f"{path}: vertex needs 3 coordinates")
    faces = []
    for r in rows[nv : nv + nf]:
        try:
            k = int(r[0])
            idx = [int(x) for x in r[1 : 1 + k]]
        except ValueError:
            raise MeshFormatError(f"{path}: bad face record {' '.join(r)!r}") from None
        if k != 3 or len(idx) != 3:
            raise MeshFormatError(f"{path}: face with {k} vertices; only triangles are supported")
        faces.append(idx)
    return _build(verts, faces, path)


def _build(verts, faces, path):
    V = np.array(verts, dtype=np.float64).reshape(-1, 3)
    F = np.array(faces, dtype=np.int64).reshape(-1, 3)
    if F.size and (F.min() < 0 or F.max() >= len(V)):
        raise MeshFormatError(f"{path}: face index out of range (mesh has {len(V)} vertices)")
    return TriangleMesh(V, F)


def save_obj(mesh: TriangleMesh, path) -> None:
    """Write ``mesh`` as OBJ with 17 significant digits per coordinate."""
    lines = [f"v {x:.17g} {y:.17g} {z:.17g}" for x, y, z in mesh.vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.faces]
    Path(path).write_text("\n".join(lines) + "\n")


def save_off(mesh: TriangleMesh, path) -> None:
    lines = ["OFF", f"{mesh.n_vertices} {mesh.n_faces} 0"]
    lines += [f"{x:.17g} {y:.17g} {z:.17g}" for x, y, z in mesh.vertices]
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.faces]
    Path(path).write_text("\n".join(lines) + "\n")
