"""Small dense linear-algebra plumbing: rank, affine fits, least squares."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFitError, InputError
from .net_core import Hyperplane, canonical_hyperplane
from .tolerances import DEFAULT_TOL, ToleranceConfig

__all__ = ["ToleranceConfig", "DEFAULT_TOL", "AffineFit", "rank",
           "rank_by_elimination", "affine_fit", "solve_least_squares"]


@dataclass(frozen=True)
class AffineFit:
    """Hyperplane through a point set plus the worst absolute residual."""

    hyperplane: Hyperplane
    max_residual: float


def _as_matrix(matrix) -> np.ndarray:
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.size == 0:
        raise InputError("expected a nonempty 2-d matrix", shape=list(a.shape))
    return a


def rank(matrix, tol: ToleranceConfig = DEFAULT_TOL) -> int:
    """Numerical rank: singular values above rank_tol times the largest."""

    a = _as_matrix(matrix)
    sv = np.linalg.svd(a, compute_uv=False)
    if sv.size == 0 or sv[0] <= tol.zero_tol:
        return 0
    return int(np.sum(sv > tol.rank_tol * sv[0]))


def rank_by_elimination(matrix, tol: ToleranceConfig = DEFAULT_TOL) -> int:
    """Column-pivoted Gaussian elimination with the same relative threshold.

    Kept as a cross-check for the singular-value route; the two must agree.
    """

    a = _as_matrix(matrix).copy()
    scale = float(np.max(np.abs(a)))
    if scale <= tol.zero_tol:
        return 0
    threshold = tol.rank_tol * scale
    rows, cols = a.shape
    r = 0
    for col in range(cols):
        if r == rows:
            break
        pivot = r + int(np.argmax(np.abs(a[r:, col])))
        if abs(a[pivot, col]) <= threshold:
            continue
        a[[r, pivot]] = a[[pivot, r]]
        a[r + 1:] -= np.outer(a[r + 1:, col] / a[r, col], a[r])
        r += 1
    return r


def affine_fit(points, tol: ToleranceConfig = DEFAULT_TOL) -> AffineFit:
    """Fit the unique hyperplane containing a set of d-dimensional points.

    The normal is the singular vector of the centered point matrix belonging
    to its smallest singular value, which treats all points symmetrically.
    Requires the points to affinely span exactly a (d-1)-flat.
    """

    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise InputError("points must form an (n, d) array", shape=list(pts.shape))
    n, d = pts.shape
    if n < d:
        raise InputError(f"need at least {d} points, got {n}")
    center = pts.mean(axis=0)
    centered = pts - center
    r = rank(centered, tol) if float(np.max(np.abs(centered))) > tol.zero_tol else 0
    if r != d - 1:
        raise DegenerateFitError(
            f"points affinely span a flat of dimension {r}, expected {d - 1}",
            spanned=r, expected=d - 1)
    _, _, vt = np.linalg.svd(centered)
    normal = vt[-1]
    h, _ = canonical_hyperplane(normal, -float(normal @ center), tol)
    residual = float(np.max(np.abs(pts @ h.a + h.b)))
    return AffineFit(h, residual)


def solve_least_squares(a, y, tol: ToleranceConfig = DEFAULT_TOL) -> tuple[np.ndarray, float]:
    """Minimum-norm least-squares solution of A z = y and its residual norm."""

    mat = _as_matrix(a)
    rhs = np.asarray(y, dtype=float)
    if rhs.ndim != 1 or rhs.shape[0] != mat.shape[0]:
        raise InputError("right-hand side length must match the row count",
                         rows=mat.shape[0], rhs=list(rhs.shape))
    solution, _, _, _ = np.linalg.lstsq(mat, rhs, rcond=tol.rank_tol)
    residual = float(np.linalg.norm(mat @ solution - rhs))
    return solution, residual
