"""Small dense kernels used by the plane updates."""

from __future__ import annotations

import numpy as np

from .core import InvalidInputError, NumericalFailureError

SIGN_TOL = 1e-10
PIVOT_TOL = 1e-12


def canonical_sign(vecs: np.ndarray) -> np.ndarray:
    """Flip each column so its first component with |.| > SIGN_TOL is positive."""
    big = np.abs(vecs) > SIGN_TOL
    first = np.argmax(big, axis=-2)
    lead = np.take_along_axis(vecs, first[..., None, :], axis=-2)[..., 0, :]
    flip = np.where(lead < 0.0, -1.0, 1.0)
    return vecs * flip[..., None, :]


def smallest_eigenpairs(w: np.ndarray):
    """Batched smallest eigenpair of a stack of symmetric matrices.

    No validation; callers own that. ``w`` has shape (..., D, D). Returns
    eigenvalues (...,) and unit eigenvectors (..., D) under the sign
    convention of :func:`smallest_eigenpair`.
    """
    sym = 0.5 * (w + np.swapaxes(w, -1, -2))
    vals, vecs = np.linalg.eigh(sym)
    v = canonical_sign(vecs[..., :, :1])[..., 0]
    v = v / np.linalg.norm(v, axis=-1, keepdims=True)
    return vals[..., 0], v


def smallest_eigenpair(w) -> tuple[float, np.ndarray]:
    """Smallest eigenvalue of a symmetric matrix and its unit eigenvector.

    The matrix is symmetrized as (w + w.T) / 2 before decomposition. The
    returned eigenvector has its first component of magnitude above 1e-10
    positive, so repeated calls are reproducible.

    Args:
        w: D x D symmetric real matrix (relative asymmetry at most 1e-8).

    Returns:
        (xi, v) with ``w @ v ~= xi * v`` and ``||v|| = 1``.

    Raises:
        InvalidInputError: non-square, non-finite or non-symmetric input.
    """
    w = np.asarray(w, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] == 0:
        raise InvalidInputError(f"expected a square matrix, got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise InvalidInputError("matrix contains NaN or Inf")
    scale = max(np.abs(w).max(), np.finfo(float).tiny)
    if np.abs(w - w.T).max() > 1e-8 * scale:
        raise InvalidInputError("matrix is not symmetric")
    xi, v = smallest_eigenpairs(w)
    return float(xi), v


def solve_spd(b, rhs) -> np.ndarray:
    """Solve ``b x = rhs`` for symmetric positive definite ``b`` by Cholesky.

    A pivot at or below ``max(1e-12, D * eps * max(diag(b)))`` counts as
    singular; the second term keeps rank-deficient systems with a large
    diagonal from slipping through on round-off.

    Raises:
        InvalidInputError: shape mismatch or non-finite entries.
        NumericalFailureError: singular or indefinite ``b``; ``.pivot`` holds
            the index of the failing pivot.
    """
    b = np.asarray(b, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if b.ndim != 2 or b.shape[0] != b.shape[1] or rhs.shape != (b.shape[0],):
        raise InvalidInputError(f"incompatible shapes {b.shape} and {rhs.shape}")
    if not (np.all(np.isfinite(b)) and np.all(np.isfinite(rhs))):
        raise InvalidInputError("system contains NaN or Inf")
    d = b.shape[0]
    a = 0.5 * (b + b.T)
    tol = max(PIVOT_TOL, d * np.finfo(float).eps * max(np.diag(a).max(), 0.0))
    low = np.zeros_like(a)
    for j in range(d):
        pivot = a[j, j] - low[j, :j] @ low[j, :j]
        if not pivot > tol:
            raise NumericalFailureError(
                f"matrix is singular or indefinite at pivot {j} (value {pivot:.3e})", pivot=j
            )
        low[j, j] = np.sqrt(pivot)
        low[j + 1:, j] = (a[j + 1:, j] - low[j + 1:, :j] @ low[j, :j]) / low[j, j]
    y = np.empty(d)
    for i in range(d):
        y[i] = (rhs[i] - low[i, :i] @ y[:i]) / low[i, i]
    x = np.empty(d)
    for i in range(d - 1, -1, -1):
        x[i] = (y[i] - low[i + 1:, i] @ x[i + 1:]) / low[i, i]
    return x


def frob_diff(a, b) -> float:
    """Frobenius norm of ``a - b``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise InvalidInputError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum((a - b) ** 2)))
