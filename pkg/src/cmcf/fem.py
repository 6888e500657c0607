"""Mass and stiffness matrices over the piecewise-linear hat basis.

Sign convention: the stiffness matrix is the *negative* Gram matrix of the
basis gradients, so it is negative semidefinite and off-diagonal entries
are the usual half cotangent sums.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse

from .mesh import TriangleMesh


class DegenerateFaceError(ArithmeticError):
    """A face with zero (or non-finite) area was met during assembly."""

    def __init__(self, faces):
        self.faces = [int(f) for f in np.atleast_1d(faces)]
        shown = ", ".join(map(str, self.faces[:10]))
        more = "" if len(self.faces) <= 10 else f" (+{len(self.faces) - 10} more)"
        super().__init__(f"zero-area face(s) {shown}{more}")


def element_stiffness(p0, p1, p2) -> np.ndarray:
    """3x3 element stiffness of one triangle.

    Entry (a, b), a != b, is half the cotangent of the angle opposite the
    edge ab; diagonal entries make each row sum to zero.
    """
    P = np.array([p0, p1, p2], dtype=np.float64)
    K = np.zeros((3, 3))
    for o in range(3):
        a, b = (o + 1) % 3, (o + 2) % 3
        u, w = P[a] - P[o], P[b] - P[o]
        cross = np.linalg.norm(np.cross(u, w))
        if not cross > 0:
            raise DegenerateFaceError(0)
        half_cot = 0.5 * np.dot(u, w) / cross
        K[a, b] = K[b, a] = half_cot
    K[np.diag_indices(3)] = -K.sum(axis=1)
    return K


def element_mass(p0, p1, p2) -> np.ndarray:
    """3x3 consistent (Galerkin) element mass: A/6 on the diagonal, A/12 off it."""
    area = 0.5 * np.linalg.norm(np.cross(np.subtract(p1, p0), np.subtract(p2, p0)))
    if not area > 0:
        raise DegenerateFaceError(0)
    return area / 12.0 * (np.ones((3, 3)) + np.eye(3))


def _cotangents(V, F):
    """Per-face cotangent of the angle at each corner, plus face areas."""
    cots = np.empty(F.shape, dtype=np.float64)
    double_area = None
    for k in range(3):
        o = V[F[:, k]]
        u = V[F[:, (k + 1) % 3]] - o
        w = V[F[:, (k + 2) % 3]] - o
        cross = np.linalg.norm(np.cross(u, w), axis=1)
        if double_area is None:
            double_area = cross
        with np.errstate(divide="ignore", invalid="ignore"):
            cots[:, k] = np.einsum("ij,ij->i", u, w) / cross
    bad = ~(double_area > 0) | ~np.isfinite(cots).all(axis=1)
    if bad.any():
        raise DegenerateFaceError(np.flatnonzero(bad))
    return cots, 0.5 * double_area


def _areas_checked(V, F):
    a, b, c = V[F[:, 0]], V[F[:, 1]], V[F[:, 2]]
    areas = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
    bad = ~(areas > 0)
    if bad.any():
        raise DegenerateFaceError(np.flatnonzero(bad))
    return areas


def stiffness_from_arrays(V, F) -> sparse.csr_matrix:
    n = len(V)
    cots, _ = _cotangents(V, F)
    rows, cols, vals = [], [], []
    for k in range(3):
        i = F[:, (k + 1) % 3]
        j = F[:, (k + 2) % 3]
        w = 0.5 * cots[:, k]
        rows += [i, j, i, j]
        cols += [j, i, i, j]
        vals += [w, w, -w, -w]
    L = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )
    return L.tocsr()


def galerkin_mass_from_arrays(V, F) -> sparse.csr_matrix:
    n = len(V)
    areas = _areas_checked(V, F)
    rows, cols, vals = [], [], []
    for k in range(3):
        i = F[:, k]
        j = F[:, (k + 1) % 3]
        rows += [i, j, i]
        cols += [j, i, i]
        vals += [areas / 12.0, areas / 12.0, areas / 6.0]
    D = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )
    return D.tocsr()


def lumped_mass_from_arrays(V, F) -> sparse.csr_matrix:
    n = len(V)
    areas = _areas_checked(V, F)
    diag = np.bincount(F.reshape(-1), weights=np.repeat(areas / 3.0, 3), minlength=n)
    return sparse.diags(diag, format="csr")


def assemble_stiffness(mesh: TriangleMesh) -> sparse.csr_matrix:
    """Cotangent stiffness matrix L, with L_ij = (cot a_ij + cot b_ij) / 2.

    Obtuse angles give negative weights; they are kept as-is.

    Raises
    ------
    DegenerateFaceError
        If any face has zero area.
    """
    return stiffness_from_arrays(mesh.vertices, mesh.faces)


def assemble_mass_galerkin(mesh: TriangleMesh) -> sparse.csr_matrix:
    """Consistent mass matrix; the sum of all entries equals the surface area."""
    return galerkin_mass_from_arrays(mesh.vertices, mesh.faces)


def assemble_mass_lumped(mesh: TriangleMesh) -> sparse.csr_matrix:
    """Diagonal barycentric mass, one third of each incident face area."""
    return lumped_mass_from_arrays(mesh.vertices, mesh.faces)


def assemble_mass(mesh: TriangleMesh, scheme: str = "galerkin") -> sparse.csr_matrix:
    if scheme == "galerkin":
        return assemble_mass_galerkin(mesh)
    if scheme == "lumped":
        return assemble_mass_lumped(mesh)
    raise ValueError(f"unknown mass scheme {scheme!r}")


def write_matrix_market(path, matrix, comment="") -> None:
    """Debug dump in Matrix Market coordinate format (symmetric storage)."""
    from scipy.io import mmwrite

    mmwrite(str(path), sparse.coo_matrix(matrix), comment=comment, symmetry="symmetric")
