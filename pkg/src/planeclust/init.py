"""Seeded Lloyd K-means and plane seeding from a hard assignment."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import InvalidInputError, Membership, PlaneModel, as_points
from .linalg import smallest_eigenpairs

SOFT_ASSIGNED = 0.9


@dataclass(frozen=True)
class InitState:
    centers: np.ndarray
    assignment: np.ndarray
    inertia: float
    inertia_trace: list = field(default_factory=list)
    n_iter: int = 0


def sq_dists(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    """N x K squared Euclidean distances, computed from explicit differences."""
    diff = x[:, None, :] - c[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def _repair_empty(x, centers, assign, k):
    """Move each empty cluster's center onto the point farthest from its center."""
    counts = np.bincount(assign, minlength=k)
    for j in np.flatnonzero(counts == 0):
        d = np.sum((x - centers[assign]) ** 2, axis=1)
        # only steal from clusters that keep at least one point
        d[counts[assign] <= 1] = -1.0
        i = int(np.argmax(d))
        counts[assign[i]] -= 1
        assign[i] = j
        counts[j] = 1
        centers[j] = x[i]
    return centers, assign


def _means(x, assign, k):
    d = x.shape[1]
    sums = np.zeros((k, d))
    np.add.at(sums, assign, x)
    return sums / np.bincount(assign, minlength=k)[:, None]


def _lloyd(x, k, rng, max_iter):
    n = x.shape[0]
    centers = x[rng.choice(n, size=k, replace=False)].copy()
    assign = np.argmin(sq_dists(x, centers), axis=1)
    centers, assign = _repair_empty(x, centers, assign, k)

    trace = []
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        centers = _means(x, assign, k)
        trace.append(float(np.sum((x - centers[assign]) ** 2)))
        new_assign = np.argmin(sq_dists(x, centers), axis=1)
        centers, new_assign = _repair_empty(x, centers, new_assign, k)
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
    centers = _means(x, assign, k)

    inertia = float(np.sum((x - centers[assign]) ** 2))
    return InitState(centers=centers, assignment=assign.astype(np.int64), inertia=inertia,
                     inertia_trace=trace, n_iter=n_iter)


def kmeans(data, k: int, seed: int = 0, max_iter: int = 100, n_init: int = 1) -> InitState:
    """Lloyd's algorithm started from k distinct, uniformly sampled points.

    Empty clusters are repaired by moving their center onto the point
    farthest from its own center. Stops at an assignment fixpoint or after
    ``max_iter`` center updates. Deterministic for a given seed.

    A single start can stop at a poor fixpoint. ``n_init > 1`` draws that
    many starts from the same generator and keeps the lowest inertia (the
    earliest on ties). The benchmarks use one start per restart.
    """
    x = as_points(data)
    n = x.shape[0]
    if int(k) != k or k < 1:
        raise InvalidInputError("k must be a positive integer")
    if k > n:
        raise InvalidInputError(f"k = {k} exceeds the number of samples N = {n}")
    if n_init < 1:
        raise InvalidInputError("n_init must be >= 1")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_init):
        cand = _lloyd(x, k, rng, max_iter)
        if best is None or cand.inertia < best.inertia:
            best = cand
    return best


def scatter_fit(x: np.ndarray, weights: np.ndarray | None = None):
    """Weighted mean and best-fit plane normal of a point set."""
    if weights is None:
        weights = np.ones(x.shape[0])
    mu = weights @ x / weights.sum()
    c = x - mu
    w = (c * weights[:, None]).T @ c
    _, v = smallest_eigenpairs(w)
    return mu, v


def soft_membership(assignment, k: int) -> Membership:
    """One-hot assignment softened to 0.9 on the assigned cluster."""
    assignment = np.asarray(assignment, dtype=np.int64)
    if k == 1:
        return Membership(np.ones((assignment.shape[0], 1)))
    u = np.full((assignment.shape[0], k), (1.0 - SOFT_ASSIGNED) / (k - 1))
    u[np.arange(assignment.shape[0]), assignment] = SOFT_ASSIGNED
    return Membership(u)


def init_from_assignment(data, assignment, k: int) -> tuple[PlaneModel, Membership]:
    """Seed K planes from a hard assignment.

    Each center is the cluster mean and each normal the smallest-eigenvalue
    direction of the cluster's centered scatter.
    """
    x = as_points(data)
    assignment = np.asarray(assignment, dtype=np.int64)
    if assignment.shape != (x.shape[0],):
        raise InvalidInputError("assignment length must equal N")
    if assignment.min() < 0 or assignment.max() >= k:
        raise InvalidInputError("assignment ids must lie in [0, k)")
    normals = np.empty((k, x.shape[1]))
    centers = np.empty((k, x.shape[1]))
    for j in range(k):
        members = x[assignment == j]
        if members.shape[0] == 0:
            raise InvalidInputError(f"cluster {j} is empty")
        centers[j], normals[j] = scatter_fit(members)
    return PlaneModel(normals, centers), soft_membership(assignment, k)
