"""Robust fuzzy local k-plane clustering (RFLkPC).

Each cluster is a hyperplane through a center ``mu_k`` with unit normal
``v_k``. A point's cost against cluster k mixes the squared and absolute
signed projection ``t = v_k.(x - mu_k)`` and adds a locality penalty that
keeps the cluster bounded around its center::

    D_ik = alpha * t**2 + (1 - alpha) * |t| + lam * ||x_i - mu_k||**2

and the fit minimizes ``sum_ik u_ik**m * D_ik`` over memberships and planes.
Memberships follow the FCM update; planes are refit by iterative
reweighting, where ``|t|`` is replaced by ``s * t**2`` with
``s = 1 / |t|`` frozen from the previous pass, turning the normal update
into a smallest-eigenvector problem and the center update into a D x D
linear solve.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    DegenerateClusterError,
    FitReport,
    HyperParams,
    InvalidInputError,
    Membership,
    NumericalFailureError,
    PlaneModel,
    as_points,
    hard_labels,
)
from .init import init_from_assignment, kmeans, scatter_fit, sq_dists
from .linalg import frob_diff, smallest_eigenpairs, solve_spd

EPS_ZERO = 1e-12
DEGENERATE_WEIGHT = 1e-12


@dataclass
class WorkState:
    """Per-iteration auxiliaries of the reweighted plane updates."""

    s: np.ndarray
    g: np.ndarray
    w_k: Optional[np.ndarray] = None
    b_k: Optional[np.ndarray] = None
    xi: Optional[np.ndarray] = None


def _projections(x, normals, centers):
    # t_ik = v_k . (x_i - mu_k)
    return x @ normals.T - np.einsum("kd,kd->k", normals, centers)[None, :]


def distance_matrix(data, model: PlaneModel, alpha: float, lam: float) -> np.ndarray:
    """N x K matrix of mixture distances ``D_ik``."""
    return _mixture(as_points(data), model.normals, model.centers, alpha, lam)


def _mixture(x, normals, centers, alpha, lam):
    t = _projections(x, normals, centers)
    return alpha * t**2 + (1.0 - alpha) * np.abs(t) + lam * sq_dists(x, centers)


def mixture_distance(x, v, mu, alpha: float, lam: float) -> float:
    """Mixture distance of one point to one plane cluster.

    ``alpha * t**2 + (1 - alpha) * |t| + lam * ||x - mu||**2`` with
    ``t = v.(x - mu)``.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if abs(np.linalg.norm(v) - 1.0) > 1e-6:
        raise InvalidInputError("normal vector must have unit length")
    r = x - mu
    t = float(v @ r)
    return alpha * t * t + (1.0 - alpha) * abs(t) + lam * float(r @ r)


def _fcm_memberships(distances: np.ndarray, m: float, eps_zero: float) -> np.ndarray:
    zero = distances <= eps_zero
    zero_rows = zero.any(axis=1)
    u = np.empty_like(distances)
    if np.any(~zero_rows):
        d = distances[~zero_rows]
        # (d_min / d)^(1/(m-1)) stays in (0, 1], so no overflow for tiny d
        inv = (d.min(axis=1, keepdims=True) / d) ** (1.0 / (m - 1.0))
        u[~zero_rows] = inv / inv.sum(axis=1, keepdims=True)
    if np.any(zero_rows):
        z = zero[zero_rows].astype(float)
        u[zero_rows] = z / z.sum(axis=1, keepdims=True)
    return u


def update_membership(distances, m: float, eps_zero: float = EPS_ZERO) -> Membership:
    """FCM membership update from a distance matrix.

    ``u_ik`` is proportional to ``D_ik ** (-1 / (m - 1))`` with rows summing
    to one. A row with any distance at or below ``eps_zero`` splits its
    membership evenly among those zero-distance clusters.
    """
    d = np.asarray(distances, dtype=float)
    if d.ndim != 2:
        raise InvalidInputError("distances must be an N x K matrix")
    if not np.all(np.isfinite(d)):
        raise InvalidInputError("distances must be finite")
    if np.any(d < 0.0):
        raise InvalidInputError("distances must be non-negative")
    if not m > 1.0:
        raise InvalidInputError("fuzzifier m must be > 1")
    return Membership(_fcm_memberships(d, m, eps_zero))


REWEIGHTING = ("mm", "plain")


def _reweight(x, normals, centers, alpha, eps_proj, mode="plain"):
    t = _projections(x, normals, centers)
    s = 1.0 / np.maximum(np.abs(t), eps_proj)
    if mode == "plain":
        g = alpha + s * (1.0 - alpha)
    elif mode == "mm":
        g = alpha + 0.5 * s * (1.0 - alpha)
    else:
        raise InvalidInputError(f"unknown reweighting {mode!r}; expected one of {REWEIGHTING}")
    return s, g


def reweight(data, model: PlaneModel, alpha: float, eps_proj: float = 1e-8, mode: str = "plain"):
    """IRLS weights ``s = 1 / max(|t|, eps_proj)`` and the quadratic weight ``g``.

    ``mode="plain"`` gives ``g = alpha + s (1 - alpha)``. ``mode="mm"`` halves
    the absolute-term share, ``g = alpha + s (1 - alpha) / 2``, which makes
    ``g t**2`` (plus a constant) a tight upper bound of
    ``alpha t**2 + (1 - alpha) |t|`` at the current projection.
    """
    return _reweight(as_points(data), model.normals, model.centers, alpha, eps_proj, mode)


def _normal(x, wts, mu):
    r = x - mu
    w = (r * wts[:, None]).T @ r
    xi, v = smallest_eigenpairs(w)
    return v, float(xi), w


def update_normal(data, u_col, g_col, mu, m: float):
    """Reweighted normal update for one cluster.

    Builds ``W = sum_i u_i**m g_i (x_i - mu)(x_i - mu)^T`` and returns its
    smallest eigenpair as ``(v, xi)``.

    Raises:
        DegenerateClusterError: every weight ``u_i**m g_i`` is zero.
    """
    x = as_points(data)
    u_col = np.asarray(u_col, dtype=float)
    g_col = np.asarray(g_col, dtype=float)
    wts = u_col**m * g_col
    if not np.any(wts > 0.0):
        raise DegenerateClusterError("cluster has no weight; its normal is undefined")
    v, xi, _ = _normal(x, wts, np.asarray(mu, dtype=float))
    return v, xi


def _center(x, um, g, v, lam):
    a = float(um @ g)
    c = float(um.sum())
    proj = x @ v
    if lam == 0.0:
        # B = a v v^T is singular; take the lam -> 0+ limit: along v the
        # g-weighted mean projection, across v the u^m-weighted mean
        if not a > 0.0:
            raise NumericalFailureError("center system is singular: no weight along the normal")
        xbar = um @ x / c
        return xbar + v * ((um * g) @ proj / a - v @ xbar)
    b = a * np.outer(v, v) + lam * c * np.eye(x.shape[1])
    rhs = v * float((um * g) @ proj) + lam * (um @ x)
    return solve_spd(b, rhs)


def update_center(data, u_col, g_col, v, lam: float, m: float) -> np.ndarray:
    """Reweighted center update for one cluster.

    Solves ``B mu = rhs`` with ``B = sum_i u_i**m (g_i v v^T + lam I)`` and
    ``rhs = sum_i u_i**m (g_i v v^T + lam I) x_i``. For ``lam == 0`` the
    system is rank one and the limiting solution as lam -> 0 is returned.

    Raises:
        NumericalFailureError: the system is singular (no weight at all).
    """
    x = as_points(data)
    um = np.asarray(u_col, dtype=float) ** m
    g = np.asarray(g_col, dtype=float)
    if not um.sum() > 0.0:
        raise DegenerateClusterError("cluster has no weight; its center is undefined")
    return _center(x, um, g, np.asarray(v, dtype=float), lam)


def work_state(data, model: PlaneModel, membership, params: HyperParams) -> WorkState:
    """Assemble every auxiliary of one reweighted pass at the current state.

    ``w_k`` stacks the characteristic matrices ``sum u**m g (x - mu)(x - mu)^T``,
    ``b_k`` the center-system matrices ``(sum u**m g) v v^T + lam (sum u**m) I``
    and ``xi`` the smallest eigenvalue of each ``w_k``.
    """
    x = as_points(data)
    u = membership.u if isinstance(membership, Membership) else np.asarray(membership)
    um = u**params.m
    s, g = _reweight(x, model.normals, model.centers, params.alpha, params.eps_proj,
                     params.reweighting)
    k, dim = model.normals.shape
    w_k = np.empty((k, dim, dim))
    b_k = np.empty((k, dim, dim))
    xi = np.empty(k)
    for j in range(k):
        wts = um[:, j] * g[:, j]
        r = x - model.centers[j]
        w_k[j] = (r * wts[:, None]).T @ r
        v = model.normals[j]
        b_k[j] = wts.sum() * np.outer(v, v) + params.lam * um[:, j].sum() * np.eye(dim)
    xi[:], _ = smallest_eigenpairs(w_k)
    return WorkState(s=s, g=g, w_k=w_k, b_k=b_k, xi=xi)


def surrogate(data, model: PlaneModel, membership, g, m: float, lam: float) -> float:
    """Reweighted inner-loop cost ``sum u**m (g t**2 + lam ||x - mu||**2)``."""
    x = as_points(data)
    u = membership.u if isinstance(membership, Membership) else np.asarray(membership)
    t = _projections(x, model.normals, model.centers)
    cost = g * t**2 + lam * sq_dists(x, model.centers)
    return float(np.sum(u**m * cost))


def objective(data, model: PlaneModel, membership, params: HyperParams) -> float:
    """Fuzzy objective ``sum_k sum_i u_ik**m D_ik``."""
    u = membership.u if isinstance(membership, Membership) else np.asarray(membership)
    d = distance_matrix(data, model, params.alpha, params.lam)
    return float(np.sum(u**params.m * d))


def _reseed_plane(x, dist, k_total):
    """Fit a fresh plane around the point that is worst served by every cluster."""
    worst = int(np.argmax(dist.min(axis=1)))
    size = min(x.shape[0], max(x.shape[1] + 1, x.shape[0] // k_total))
    near = np.argsort(np.sum((x - x[worst]) ** 2, axis=1), kind="stable")[:size]
    return scatter_fit(x[near])


def fit(data, params: HyperParams, init=None, record_surrogate: bool = False) -> FitReport:
    """Fit RFLkPC by alternating FCM memberships and reweighted plane updates.

    Args:
        data: Dataset or N x D array.
        params: hyperparameters; ``params.seed`` drives the K-means seeding.
        init: optional ``(PlaneModel, Membership)``. Without it, K-means
            followed by :func:`init_from_assignment` provides the start.
        record_surrogate: keep ``(before, after)`` surrogate values for every
            inner step in ``report.surrogate_steps``.

    Returns:
        FitReport whose objective trace holds the fuzzy objective after each
        outer pass.
    """
    x = as_points(data)
    n, dim = x.shape
    k = params.k
    if n < k:
        raise InvalidInputError(f"N = {n} is smaller than K = {k}")
    start = time.perf_counter()
    if init is None:
        st = kmeans(x, k, seed=params.seed, max_iter=params.kmeans_max_iter)
        model, u_seed = init_from_assignment(x, st.assignment, k)
    else:
        model, u_seed = init
        if model.k != k or model.normals.shape[1] != dim or u_seed.u.shape != (n, k):
            raise InvalidInputError("initial model/membership shapes do not match data and k")
    normals = np.array(model.normals)
    centers = np.array(model.centers)
    u_prev = np.array(u_seed.u)
    m, alpha, lam = params.m, params.alpha, params.lam

    trace = []
    steps = []
    reseeded = []
    inner_total = 0
    converged = False
    outer = 0
    u = u_prev
    for outer in range(1, params.max_outer + 1):
        dist = _mixture(x, normals, centers, alpha, lam)
        u = _fcm_memberships(dist, m, EPS_ZERO)
        um = u**m
        starved = np.flatnonzero(um.sum(axis=0) < DEGENERATE_WEIGHT)
        if starved.size:
            for j in starved:
                centers[j], normals[j] = _reseed_plane(x, dist, k)
                reseeded.append((outer, int(j)))
            # memberships must see the new planes before they are refit
            dist = _mixture(x, normals, centers, alpha, lam)
            u = _fcm_memberships(dist, m, EPS_ZERO)
            um = u**m
            still = np.flatnonzero(um.sum(axis=0) < DEGENERATE_WEIGHT)
            if still.size:
                raise DegenerateClusterError(
                    f"cluster {int(still[0])} has no membership even after reseeding "
                    f"(outer iteration {outer})", cluster=int(still[0]), iteration=outer)

        for _ in range(params.max_inner):
            _, g = _reweight(x, normals, centers, alpha, params.eps_proj, params.reweighting)
            if record_surrogate:
                before = _surrogate_raw(x, normals, centers, um, g, lam)
            old = normals.copy()
            for j in range(k):
                wts = um[:, j] * g[:, j]
                if not np.any(wts > 0.0):
                    raise DegenerateClusterError(
                        f"cluster {j} lost all weight at outer iteration {outer}",
                        cluster=j, iteration=outer)
                try:
                    normals[j], _, _ = _normal(x, wts, centers[j])
                    centers[j] = _center(x, um[:, j], g[:, j], normals[j], lam)
                except NumericalFailureError as exc:
                    raise NumericalFailureError(
                        f"cluster {j}, outer iteration {outer}: {exc}",
                        pivot=exc.pivot, cluster=j, iteration=outer) from exc
            inner_total += 1
            if record_surrogate:
                steps.append((before, _surrogate_raw(x, normals, centers, um, g, lam)))
            if frob_diff(normals, old) < params.inner_tol:
                break

        trace.append(float(np.sum(um * _mixture(x, normals, centers, alpha, lam))))
        if frob_diff(u, u_prev) < params.eta:
            converged = True
            break
        u_prev = u

    membership = Membership(u)
    report = FitReport(
        model=PlaneModel(normals, centers),
        membership=membership,
        hard_labels=hard_labels(membership),
        objective_trace=trace,
        outer_iters=outer,
        inner_iters_total=inner_total,
        converged=converged,
        wall_time=time.perf_counter() - start,
        reseeded=reseeded,
        surrogate_steps=steps,
    )
    return report


def _surrogate_raw(x, normals, centers, um, g, lam):
    t = _projections(x, normals, centers)
    return float(np.sum(um * (g * t**2 + lam * sq_dists(x, centers))))
