"""Sparse symmetric positive definite solves with several right-hand sides."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as spla

_LOGGER = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10


class SolverError(ArithmeticError):
    pass


class NotPositiveDefiniteError(SolverError):
    """Cholesky breakdown; upstream geometry is usually degenerate."""


@dataclass
class SpdSolveResult:
    x: np.ndarray
    residuals: np.ndarray
    method: str
    tol: float
    iterations: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return bool(np.all(self.residuals <= self.tol))

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals)) if self.residuals.size else 0.0


def relative_residuals(A, X, B) -> np.ndarray:
    R = A @ X - B
    bn = np.linalg.norm(B, axis=0)
    rn = np.linalg.norm(R, axis=0)
    return np.where(bn > 0, rn / np.where(bn > 0, bn, 1.0), rn)


def _cholmod():
    try:
        from cvxopt import cholmod
    except ImportError:
        return None
    return cholmod


def cholesky_solve(A, B) -> np.ndarray:
    """Direct supernodal LL^T solve via CHOLMOD (through cvxopt).

    Raises NotPositiveDefiniteError if the factorization breaks down.
    """
    cholmod = _cholmod()
    if cholmod is None:
        raise SolverError("cvxopt.cholmod is not available")
    from cvxopt import matrix, spmatrix

    n = A.shape[0]
    lower = sparse.tril(A, format="coo")
    S = spmatrix(lower.data, lower.row.tolist(), lower.col.tolist(), (n, n))
    rhs = matrix(np.ascontiguousarray(B, dtype=np.float64).reshape(n, -1))
    saved = dict(cholmod.options)
    # supernodal mode always computes LL^T and so detects indefiniteness;
    # the simplicial default is LDL^T and would factor indefinite matrices
    cholmod.options["supernodal"] = 2
    try:
        factor = cholmod.symbolic(S)
        cholmod.numeric(S, factor)
        cholmod.solve(factor, rhs)
    except ArithmeticError as e:
        raise NotPositiveDefiniteError(f"Cholesky factorization failed (pivot {e})") from None
    finally:
        cholmod.options.clear()
        cholmod.options.update(saved)
    return np.array(rhs).reshape(np.shape(B))


def pcg_solve(A, B, tol=DEFAULT_TOL, maxiter=None):
    """Jacobi-preconditioned conjugate gradients, one column at a time."""
    A = sparse.csr_matrix(A)
    d = A.diagonal()
    if np.any(d <= 0):
        raise NotPositiveDefiniteError("non-positive diagonal entry; matrix is not SPD")
    M = sparse.diags(1.0 / d)
    B2 = np.asarray(B, dtype=np.float64).reshape(A.shape[0], -1)
    X = np.zeros_like(B2)
    iters = []
    maxiter = maxiter or 10 * A.shape[0]
    for c in range(B2.shape[1]):
        count = [0]

        def cb(_xk, count=count):
            count[0] += 1

        # ask for a little more than tol so the true residual also meets it
        x, info = spla.cg(A, B2[:, c], rtol=tol * 0.1, atol=0.0, maxiter=maxiter, M=M, callback=cb)
        if info > 0:
            raise SolverError(f"CG did not converge in {maxiter} iterations (column {c})")
        if info < 0:
            raise SolverError(f"CG breakdown (info={info}, column {c})")
        X[:, c] = x
        iters.append(count[0])
    return X.reshape(np.shape(B)), iters


def solve_spd(A, B, tol: float = DEFAULT_TOL, method: str = "auto", maxiter=None) -> SpdSolveResult:
    """Solve ``A X = B`` for symmetric positive definite sparse ``A``.

    Parameters
    ----------
    A : (N, N) sparse matrix
    B : (N,) or (N, k) array
    tol : float
        Contract on the relative residual ``|AX - B| / |B|`` per column.
        The result's ``ok`` is False when it is not met.
    method : {"auto", "cholesky", "cg"}
        "auto" factors once with Cholesky and falls back to Jacobi-PCG when
        the factorization is unavailable, breaks down, or misses ``tol``.

    Raises
    ------
    NotPositiveDefiniteError
        Cholesky breakdown with ``method="cholesky"``, or both paths fail
        on a non-SPD matrix.
    SolverError
        CG reached its iteration cap.
    """
    B = np.asarray(B, dtype=np.float64)
    if method not in ("auto", "cholesky", "cg"):
        raise ValueError(f"unknown method {method!r}")
    notes = []
    X = None
    used = None
    if method in ("auto", "cholesky"):
        try:
            X = cholesky_solve(A, B)
            used = "cholesky"
        except SolverError as e:
            if method == "cholesky":
                raise
            notes.append(str(e))
            _LOGGER.debug("falling back to PCG: %s", e)
        if X is not None:
            res = relative_residuals(A, X.reshape(A.shape[0], -1), B.reshape(A.shape[0], -1))
            if method == "cholesky" or np.all(res <= tol):
                return SpdSolveResult(X, res, used, tol, notes=notes)
            notes.append(f"cholesky residual {res.max():.3e} above tol")
    X, iters = pcg_solve(A, B, tol=tol, maxiter=maxiter)
    res = relative_residuals(A, X.reshape(A.shape[0], -1), B.reshape(A.shape[0], -1))
    return SpdSolveResult(X, res, "cg", tol, iterations=iters, notes=notes)
