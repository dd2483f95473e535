"""Comparison methods: hard k-plane (KPC), fuzzy k-plane (FkPC), fuzzy c-regression (FCRM)."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .core import (
    FitReport,
    InvalidInputError,
    Membership,
    NumericalFailureError,
    PlaneModel,
    as_points,
    hard_labels,
)
from .init import init_from_assignment, kmeans, scatter_fit, soft_membership
from .linalg import frob_diff, smallest_eigenpairs, solve_spd
from .rflkpc import EPS_ZERO, _fcm_memberships

RIDGE_JITTER = 1e-10


def _plane_residuals(x, normals, offsets):
    return (x @ normals.T + offsets[None, :]) ** 2


def _kpc_planes(x, assign, k):
    normals = np.empty((k, x.shape[1]))
    centers = np.empty((k, x.shape[1]))
    for j in range(k):
        centers[j], normals[j] = scatter_fit(x[assign == j])
    # b_k = -mean(A_k^T v_k)
    offsets = -np.einsum("kd,kd->k", normals, centers)
    return normals, centers, offsets


def _kpc_repair(x, assign, res, k):
    counts = np.bincount(assign, minlength=k)
    for j in np.flatnonzero(counts == 0):
        own = res[np.arange(x.shape[0]), assign].copy()
        own[counts[assign] <= 1] = -1.0
        i = int(np.argmax(own))
        counts[assign[i]] -= 1
        assign[i] = j
        counts[j] = 1
    return assign


def kpc_fit(data, k: int, seed: int = 0, max_iter: int = 100, kmeans_max_iter: int = 100) -> FitReport:
    """Hard k-plane clustering.

    Alternates nearest-plane assignment under ``(x.v_k + b_k)**2`` (ties to
    the lower index) with a per-cluster refit: ``v_k`` is the
    smallest-eigenvalue direction of the cluster's centered scatter and
    ``b_k = -mean(x.v_k)``. An emptied cluster takes the point with the
    largest residual to its own plane. ``objective_trace`` holds the total
    squared residual after every refit.
    """
    x = as_points(data)
    if x.shape[0] < k:
        raise InvalidInputError(f"N = {x.shape[0]} is smaller than K = {k}")
    start = time.perf_counter()
    assign = kmeans(x, k, seed=seed, max_iter=kmeans_max_iter).assignment.copy()
    normals, centers, offsets = _kpc_planes(x, assign, k)
    res = _plane_residuals(x, normals, offsets)
    trace = [float(res[np.arange(x.shape[0]), assign].sum())]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        new = np.argmin(res, axis=1)
        new = _kpc_repair(x, new, res, k)
        if np.array_equal(new, assign):
            converged = True
            break
        assign = new
        normals, centers, offsets = _kpc_planes(x, assign, k)
        res = _plane_residuals(x, normals, offsets)
        trace.append(float(res[np.arange(x.shape[0]), assign].sum()))
    membership = Membership.one_hot(assign, k)
    return FitReport(
        model=PlaneModel(normals, centers, offsets),
        membership=membership,
        hard_labels=hard_labels(membership),
        objective_trace=trace,
        outer_iters=it,
        converged=converged,
        wall_time=time.perf_counter() - start,
    )


def fkpc_characteristic_matrix(x, u_col, m: float) -> np.ndarray:
    """``sum u**m x x^T - (sum u**m x)(sum u**m x)^T / sum u**m`` for one cluster."""
    x = as_points(x)
    um = np.asarray(u_col, dtype=float) ** m
    s = um @ x
    return (x * um[:, None]).T @ x - np.outer(s, s) / um.sum()


def fkpc_fit(data, k: int, m: float = 2.0, seed: int = 0, tol: float = 1e-5,
             max_iter: int = 100, kmeans_max_iter: int = 100) -> FitReport:
    """Fuzzy k-plane clustering.

    Memberships come from the squared residuals ``(x.v_k + b_k)**2`` by the
    FCM rule (zero residuals take the whole row, split evenly). Each normal
    is the smallest-eigenvalue direction of the fuzzy characteristic matrix
    and ``b_k = -sum u**m x.v_k / sum u**m``. Stops once the Frobenius change
    of the membership matrix drops below ``tol``.
    """
    x = as_points(data)
    n = x.shape[0]
    if n < k:
        raise InvalidInputError(f"N = {n} is smaller than K = {k}")
    if not m > 1.0:
        raise InvalidInputError("fuzzifier m must be > 1")
    start = time.perf_counter()
    st = kmeans(x, k, seed=seed, max_iter=kmeans_max_iter)
    model, u_seed = init_from_assignment(x, st.assignment, k)
    normals = np.array(model.normals)
    offsets = -np.einsum("kd,kd->k", normals, model.centers)
    centers = np.array(model.centers)
    u_prev = np.array(u_seed.u)
    trace = []
    converged = False
    it = 0
    u = u_prev
    for it in range(1, max_iter + 1):
        u = _fcm_memberships(_plane_residuals(x, normals, offsets), m, EPS_ZERO)
        um = u**m
        for j in range(k):
            if not um[:, j].sum() > 0.0:
                raise NumericalFailureError(f"cluster {j} lost all membership at iteration {it}",
                                            cluster=j, iteration=it)
            w = fkpc_characteristic_matrix(x, u[:, j], m)
            _, normals[j] = smallest_eigenpairs(w)
            centers[j] = um[:, j] @ x / um[:, j].sum()
            offsets[j] = -(um[:, j] @ (x @ normals[j])) / um[:, j].sum()
        trace.append(float(np.sum(um * _plane_residuals(x, normals, offsets))))
        if frob_diff(u, u_prev) < tol:
            converged = True
            break
        u_prev = u
    membership = Membership(u)
    return FitReport(
        model=PlaneModel(normals, centers, offsets),
        membership=membership,
        hard_labels=hard_labels(membership),
        objective_trace=trace,
        outer_iters=it,
        converged=converged,
        wall_time=time.perf_counter() - start,
    )


@dataclass
class RegressionModel:
    """K regression hyperplanes ``y = beta_k . (x_tilde; 1)``.

    The last entry of each row of ``betas`` is the intercept.
    """

    betas: np.ndarray
    objective_trace: list = field(default_factory=list)
    n_iter: int = 0
    converged: bool = False

    def __post_init__(self):
        self.betas = np.atleast_2d(np.asarray(self.betas, dtype=float))
        if not np.all(np.isfinite(self.betas)):
            raise InvalidInputError("regression coefficients must be finite")

    def residuals(self, x_tilde, y) -> np.ndarray:
        """N x K squared residuals."""
        xd = design_matrix(x_tilde)
        return (np.asarray(y, dtype=float)[:, None] - xd @ self.betas.T) ** 2


def design_matrix(x_tilde) -> np.ndarray:
    """Rows ``X_i = (x_tilde_i; 1)``."""
    xt = np.asarray(x_tilde, dtype=float)
    if xt.ndim == 1:
        xt = xt[:, None]
    return np.hstack([xt, np.ones((xt.shape[0], 1))])


def fcrm_betas(xd, y, u, m: float) -> np.ndarray:
    """Weighted least-squares coefficients for every cluster.

    Weights are ``u_ik**m`` so that the step minimizes the fuzzy regression
    objective for fixed memberships. A singular normal matrix is retried
    once with ``1e-10 * I`` added.
    """
    um = np.asarray(u, dtype=float) ** m
    betas = np.empty((um.shape[1], xd.shape[1]))
    for j in range(um.shape[1]):
        a = (xd * um[:, j][:, None]).T @ xd
        rhs = xd.T @ (um[:, j] * y)
        try:
            betas[j] = solve_spd(a, rhs)
        except NumericalFailureError:
            try:
                betas[j] = solve_spd(a + RIDGE_JITTER * np.eye(a.shape[0]), rhs)
            except NumericalFailureError as exc:
                raise NumericalFailureError(f"regression system for cluster {j} is singular",
                                            pivot=exc.pivot, cluster=j) from exc
    return betas


def fcrm_objective(xd, y, betas, u, m: float) -> float:
    r = (y[:, None] - xd @ betas.T) ** 2
    return float(np.sum(np.asarray(u) ** m * r))


def fcrm_fit(x_tilde, y, k: int, m: float = 2.0, seed: int = 0, tol: float = 1e-5,
             max_iter: int = 100, kmeans_max_iter: int = 100):
    """Fuzzy c-regression: alternate weighted least squares and FCM memberships.

    Starts from K-means on the joint ``(x_tilde, y)`` table, softened the same
    way as the plane methods.

    Returns:
        (RegressionModel, Membership). The model's ``objective_trace`` holds
        the fuzzy regression objective after each membership update.
    """
    xd = design_matrix(x_tilde)
    y = np.asarray(y, dtype=float).reshape(-1)
    n, d = xd.shape
    if y.shape != (n,):
        raise InvalidInputError("y must have one response per row of x_tilde")
    if n < d:
        raise InvalidInputError(f"need N >= D, got N = {n}, D = {d}")
    if not m > 1.0:
        raise InvalidInputError("fuzzifier m must be > 1")
    joint = np.hstack([xd[:, :-1], y[:, None]])
    st = kmeans(joint, k, seed=seed, max_iter=kmeans_max_iter)
    u = np.array(soft_membership(st.assignment, k).u)
    trace = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        betas = fcrm_betas(xd, y, u, m)
        u_new = _fcm_memberships((y[:, None] - xd @ betas.T) ** 2, m, EPS_ZERO)
        trace.append(fcrm_objective(xd, y, betas, u_new, m))
        done = frob_diff(u_new, u) < tol
        u = u_new
        if done:
            converged = True
            break
    model = RegressionModel(betas, objective_trace=trace, n_iter=it, converged=converged)
    return model, Membership(u)
