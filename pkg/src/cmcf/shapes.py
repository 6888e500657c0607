"""Procedural test surfaces."""

import numpy as np

from .mesh import TriangleMesh


def icosahedron(radius=1.0) -> TriangleMesh:
    t = (1.0 + 5.0**0.5) / 2.0
    V = np.array(
        [
            [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
            [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
            [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
        ],
        dtype=np.float64,
    )
    F = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ]
    )
    V *= radius / np.linalg.norm(V, axis=1, keepdims=True)
    return TriangleMesh(V, F)


def icosphere(subdivisions=3, radius=1.0) -> TriangleMesh:
    """Loop-style 1:4 subdivision of the icosahedron, projected to the sphere.

    Subdivision level s gives 10*4**s + 2 vertices.
    """
    mesh = icosahedron()
    V = [tuple(v) for v in mesh.vertices]
    F = mesh.faces.tolist()
    for _ in range(subdivisions):
        mid = {}

        def midpoint(a, b):
            key = (a, b) if a < b else (b, a)
            if key not in mid:
                p = (np.asarray(V[a]) + np.asarray(V[b])) / 2.0
                V.append(tuple(p / np.linalg.norm(p)))
                mid[key] = len(V) - 1
            return mid[key]

        new = []
        for a, b, c in F:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        F = new
    return TriangleMesh(np.array(V) * radius, np.array(F))


def unit_cube() -> TriangleMesh:
    """Axis-aligned [0, 1]^3 cube, 8 vertices and 12 outward triangles."""
    V = np.array(
        [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0], [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]],
        dtype=np.float64,
    )
    F = np.array(
        [
            [0, 2, 1], [0, 3, 2],  # z = 0
            [4, 5, 6], [4, 6, 7],  # z = 1
            [0, 1, 5], [0, 5, 4],  # y = 0
            [3, 7, 6], [3, 6, 2],  # y = 1
            [0, 4, 7], [0, 7, 3],  # x = 0
            [1, 2, 6], [1, 6, 5],  # x = 1
        ]
    )
    return TriangleMesh(V, F)


def torus(major=1.0, minor=0.35, nu=24, nv=12) -> TriangleMesh:
    u = np.arange(nu) * 2 * np.pi / nu
    v = np.arange(nv) * 2 * np.pi / nv
    uu, vv = np.meshgrid(u, v, indexing="ij")
    r = major + minor * np.cos(vv)
    V = np.column_stack([(r * np.cos(uu)).ravel(), (r * np.sin(uu)).ravel(), (minor * np.sin(vv)).ravel()])
    F = []
    for i in range(nu):
        for j in range(nv):
            a = i * nv + j
            b = ((i + 1) % nu) * nv + j
            c = ((i + 1) % nu) * nv + (j + 1) % nv
            d = i * nv + (j + 1) % nv
            F += [[a, b, c], [a, c, d]]
    return TriangleMesh(V, np.array(F))


def star_shaped(radii_fn, subdivisions=3) -> TriangleMesh:
    """Icosphere with each vertex scaled radially by ``radii_fn(unit_dirs)``."""
    base = icosphere(subdivisions)
    d = base.vertices
    return base.with_vertices(d * np.asarray(radii_fn(d)).reshape(-1, 1))


def flat_grid(n=5, size=1.0, jitter=0.0, seed=None) -> TriangleMesh:
    """Open planar (z = 0) triangulated square with (n+1)^2 vertices."""
    x = np.linspace(0.0, size, n + 1)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    V = np.column_stack([xx.ravel(), yy.ravel(), np.zeros(xx.size)])
    if jitter:
        rng = np.random.default_rng(seed)
        interior = (xx.ravel() > 0) & (xx.ravel() < size) & (yy.ravel() > 0) & (yy.ravel() < size)
        V[interior, :2] += rng.uniform(-jitter, jitter, (interior.sum(), 2)) * size / n
    F = []
    for i in range(n):
        for j in range(n):
            a = i * (n + 1) + j
            b = (i + 1) * (n + 1) + j
            F += [[a, b, b + 1], [a, b + 1, a + 1]]
    return TriangleMesh(V, np.array(F))
