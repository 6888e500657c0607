"""Triangle mesh container, topology validation and elementary geometry."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np


class InvalidMeshError(ValueError):
    """Raised when a mesh is refused as input to a flow."""


@dataclass(frozen=True)
class TriangleMesh:
    """Vertex positions plus oriented triangle connectivity.

    Faces are ordered counterclockwise with respect to the outward normal.
    Both arrays are copied and frozen on construction.
    """

    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=np.float64, copy=True)
        f = np.array(self.faces, dtype=np.int64, copy=True)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError(f"vertices must have shape (N, 3), got {v.shape}")
        if f.size == 0:
            f = f.reshape(0, 3)
        if f.ndim != 2 or f.shape[1] != 3:
            raise ValueError(f"faces must have shape (F, 3), got {f.shape}")
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise ValueError("face index out of range")
        v.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def with_vertices(self, vertices) -> TriangleMesh:
        """Same connectivity, new positions."""
        return TriangleMesh(vertices, self.faces)

    def flipped(self) -> TriangleMesh:
        """Reverse the orientation of every face."""
        return TriangleMesh(self.vertices, self.faces[:, ::-1])


class EdgeFlap(NamedTuple):
    """An interior edge (i, j) with its two opposite vertices.

    ``m`` is opposite the edge in the face containing the directed edge
    i->j, ``k`` in the face containing j->i.
    """

    i: int
    j: int
    m: int
    k: int


@dataclass
class ValidationReport:
    n_vertices: int
    n_edges: int
    n_faces: int
    euler_characteristic: int
    components: int
    bad_faces: list = field(default_factory=list)
    boundary_edges: int = 0
    nonmanifold_edges: int = 0
    nonmanifold_vertices: list = field(default_factory=list)
    inconsistent_edges: int = 0
    isolated_vertices: list = field(default_factory=list)
    degenerate_faces: list = field(default_factory=list)

    @property
    def closed(self) -> bool:
        return self.boundary_edges == 0

    @property
    def manifold(self) -> bool:
        return (
            not self.bad_faces
            and self.nonmanifold_edges == 0
            and not self.nonmanifold_vertices
        )

    @property
    def oriented(self) -> bool:
        return self.inconsistent_edges == 0

    @property
    def genus(self) -> float | None:
        """Genus of a closed connected orientable surface, else None."""
        if not (self.closed and self.manifold and self.oriented) or self.components != 1:
            return None
        return (2 - self.euler_characteristic) / 2

    @property
    def closed_manifold(self) -> bool:
        return (
            self.closed
            and self.manifold
            and self.oriented
            and not self.isolated_vertices
            and not self.degenerate_faces
        )

    @property
    def passed(self) -> bool:
        """Eligible as cMCF input: closed, oriented, genus zero, no zero-area face."""
        return (
            self.closed_manifold
            and self.components == 1
            and self.euler_characteristic == 2
        )

    def problems(self) -> list[str]:
        out = []
        if self.bad_faces:
            out.append(f"{len(self.bad_faces)} faces with repeated vertex indices: {self.bad_faces[:10]}")
        if self.boundary_edges:
            out.append(f"{self.boundary_edges} boundary edges (mesh is not closed)")
        if self.nonmanifold_edges:
            out.append(f"{self.nonmanifold_edges} edges shared by more than two faces")
        if self.nonmanifold_vertices:
            out.append(f"{len(self.nonmanifold_vertices)} non-manifold vertices: {self.nonmanifold_vertices[:10]}")
        if self.inconsistent_edges:
            out.append(f"{self.inconsistent_edges} edges with inconsistent face orientation")
        if self.isolated_vertices:
            out.append(f"{len(self.isolated_vertices)} unreferenced vertices: {self.isolated_vertices[:10]}")
        if self.degenerate_faces:
            out.append(f"{len(self.degenerate_faces)} zero-area faces: {self.degenerate_faces[:10]}")
        if self.components != 1:
            out.append(f"{self.components} connected components")
        if self.euler_characteristic != 2:
            out.append(f"Euler characteristic {self.euler_characteristic} != 2 (not genus zero)")
        return out

    def summary(self) -> str:
        g = self.genus
        lines = [
            f"V={self.n_vertices} E={self.n_edges} F={self.n_faces} chi={self.euler_characteristic}",
            f"closed={self.closed} manifold={self.manifold} oriented={self.oriented} "
            f"components={self.components} genus={'n/a' if g is None else int(g)}",
        ]
        lines += [f"  - {p}" for p in self.problems()]
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# geometry on raw arrays (used in the flow's inner loop)


def _face_areas(V, F):
    a, b, c = V[F[:, 0]], V[F[:, 1]], V[F[:, 2]]
    return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


def _signed_volume(V, F):
    a, b, c = V[F[:, 0]], V[F[:, 1]], V[F[:, 2]]
    return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)


def _corner_angles(V, F):
    """Interior angle at each corner; column k is the angle at F[:, k].

    Uses arccos of the clamped dot product of normalized edge vectors.
    Corners touching a zero-length edge get NaN.
    """
    out = np.empty(F.shape, dtype=np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        for k in range(3):
            o = V[F[:, k]]
            u = V[F[:, (k + 1) % 3]] - o
            w = V[F[:, (k + 2) % 3]] - o
            u = u / np.linalg.norm(u, axis=1, keepdims=True)
            w = w / np.linalg.norm(w, axis=1, keepdims=True)
            out[:, k] = np.arccos(np.clip(np.einsum("ij,ij->i", u, w), -1.0, 1.0))
    return out


def degenerate_face_mask(V, F, ratio=1e-8):
    """Faces with area below ``ratio`` times the mean face area."""
    areas = _face_areas(V, F)
    ref = areas.sum() / max(len(F), 1)
    return ~(areas >= ratio * ref)


# ---------------------------------------------------------------------------
# public per-mesh quantities


def face_areas(mesh: TriangleMesh) -> np.ndarray:
    return _face_areas(mesh.vertices, mesh.faces)


def face_area(mesh: TriangleMesh, face: int) -> float:
    """Half the cross-product norm of the face's edge vectors."""
    return float(_face_areas(mesh.vertices, mesh.faces[face : face + 1])[0])


def corner_angles(mesh: TriangleMesh) -> np.ndarray:
    return _corner_angles(mesh.vertices, mesh.faces)


def face_angles(mesh: TriangleMesh, face: int) -> tuple[float, float, float]:
    """Angles at the face's three vertices, in face vertex order."""
    a = _corner_angles(mesh.vertices, mesh.faces[face : face + 1])[0]
    return float(a[0]), float(a[1]), float(a[2])


def is_degenerate_face(mesh: TriangleMesh, face: int, atol: float = 0.0) -> bool:
    return face_area(mesh, face) <= atol


def total_area(mesh: TriangleMesh) -> float:
    return float(face_areas(mesh).sum())


def signed_volume(mesh: TriangleMesh) -> float:
    """Enclosed volume by the divergence theorem; positive for outward faces.

    Only meaningful for closed meshes.
    """
    return _signed_volume(mesh.vertices, mesh.faces)


def area_centroid(mesh: TriangleMesh) -> np.ndarray:
    """Area-weighted mean of the face barycenters."""
    return _area_centroid(mesh.vertices, mesh.faces)


def _area_centroid(V, F):
    areas = _face_areas(V, F)
    bary = V[F].mean(axis=1)
    return (areas[:, None] * bary).sum(axis=0) / areas.sum()


# ---------------------------------------------------------------------------
# topology


def unique_edges(faces) -> np.ndarray:
    """Sorted array of undirected edges (i < j)."""
    F = np.asarray(faces)
    e = np.concatenate([F[:, [0, 1]], F[:, [1, 2]], F[:, [2, 0]]])
    e.sort(axis=1)
    return np.unique(e, axis=0)


def edge_flaps(mesh: TriangleMesh) -> np.ndarray:
    """(E, 4) array of flaps (i, j, m, k), one per undirected edge with i < j.

    The mesh must be a closed, consistently oriented edge-manifold.
    """
    F = mesh.faces
    nf = len(F)
    i = F.reshape(-1)
    j = F[:, [1, 2, 0]].reshape(-1)
    opp = F[:, [2, 0, 1]].reshape(-1)
    n = mesh.n_vertices
    key = i * n + j
    order = np.argsort(key, kind="stable")
    skey = key[order]
    if np.any(skey[1:] == skey[:-1]):
        raise InvalidMeshError("directed edge used by more than one face")
    fwd = i < j
    rkey = j[fwd] * n + i[fwd]
    pos = np.searchsorted(skey, rkey)
    pos = np.minimum(pos, 3 * nf - 1)
    if np.any(skey[pos] != rkey):
        raise InvalidMeshError("edge without an opposite half-edge (mesh not closed or not oriented)")
    flaps = np.column_stack([i[fwd], j[fwd], opp[fwd], opp[order[pos]]])
    return flaps[np.lexsort((flaps[:, 1], flaps[:, 0]))]


def edge_flap(mesh: TriangleMesh, i: int, j: int) -> EdgeFlap:
    """Flap for the edge (i, j) with the orientation convention of EdgeFlap."""
    m = k = None
    for a, b, c in mesh.faces:
        for p, q, r in ((a, b, c), (b, c, a), (c, a, b)):
            if p == i and q == j:
                m = int(r)
            elif p == j and q == i:
                k = int(r)
    if m is None or k is None:
        raise ValueError(f"({i}, {j}) is not an interior edge")
    return EdgeFlap(int(i), int(j), m, k)


def _count_components(n, edges, used):
    parent = np.arange(n)

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    return len({find(v) for v in np.flatnonzero(used)})


def _nonmanifold_vertices(F, n):
    """Vertices whose incident faces do not form a single fan."""
    # corner (face, slot) -> next corner around the vertex across the edge
    # (v, c): face (v, b, c) is followed by the face holding directed edge (v, c)
    out_edge = {}
    for f, (a, b, c) in enumerate(F):
        out_edge[(a, b)] = (f, c)
        out_edge[(b, c)] = (f, a)
        out_edge[(c, a)] = (f, b)
    valence = np.bincount(F.reshape(-1), minlength=n)
    seen = np.zeros(n, dtype=bool)
    bad = []
    for (v, b), (f, c) in out_edge.items():
        if seen[v]:
            continue
        seen[v] = True
        count = 1
        nxt = c
        while nxt != b:
            hit = out_edge.get((v, nxt))
            if hit is None:
                break
            count += 1
            nxt = hit[1]
            if count > valence[v]:
                break
        if count != valence[v]:
            bad.append(int(v))
    return sorted(bad)


def validate_closed_genus_zero(mesh: TriangleMesh, degenerate_ratio: float = 0.0) -> ValidationReport:
    """Diagnose whether ``mesh`` is a closed, oriented, genus-zero manifold.

    Never raises on bad topology. Faces whose area is at most
    ``degenerate_ratio`` times the mean face area are listed as degenerate;
    the default flags only exactly zero areas.
    """
    F = mesh.faces
    n = mesh.n_vertices
    bad_faces = [
        int(f) for f in np.flatnonzero((F[:, 0] == F[:, 1]) | (F[:, 1] == F[:, 2]) | (F[:, 0] == F[:, 2]))
    ]
    good = np.ones(len(F), dtype=bool)
    good[bad_faces] = False
    Fg = F[good]

    directed = Counter()
    undirected = Counter()
    for a, b, c in Fg:
        for p, q in ((a, b), (b, c), (c, a)):
            directed[(int(p), int(q))] += 1
            undirected[(min(p, q), max(p, q))] += 1

    boundary = sum(1 for c in undirected.values() if c == 1)
    nonmanifold = sum(1 for c in undirected.values() if c > 2)
    inconsistent = 0
    for (p, q), c in undirected.items():
        if c == 2 and (directed.get((p, q), 0) != 1 or directed.get((q, p), 0) != 1):
            inconsistent += 1

    used = np.zeros(n, dtype=bool)
    used[F.reshape(-1)] = True
    isolated = [int(v) for v in np.flatnonzero(~used)]

    nm_vertices = []
    if boundary == 0 and nonmanifold == 0 and inconsistent == 0 and len(Fg):
        nm_vertices = _nonmanifold_vertices(Fg, n)

    areas = face_areas(mesh)
    mean = areas.mean() if len(areas) else 0.0
    degenerate = [int(f) for f in np.flatnonzero(areas <= degenerate_ratio * mean)]

    n_edges = len(undirected)
    return ValidationReport(
        n_vertices=n,
        n_edges=n_edges,
        n_faces=len(F),
        euler_characteristic=n - n_edges + len(F),
        components=_count_components(n, list(undirected), used),
        bad_faces=bad_faces,
        boundary_edges=boundary,
        nonmanifold_edges=nonmanifold,
        nonmanifold_vertices=nm_vertices,
        inconsistent_edges=inconsistent,
        isolated_vertices=isolated,
        degenerate_faces=degenerate,
    )
