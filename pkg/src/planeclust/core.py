"""Shared domain types, errors and dataset normalization."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class InvalidInputError(ValueError):
    """Raised when an argument violates a documented precondition."""


class NumericalFailureError(ArithmeticError):
    """Raised when a linear-algebra step cannot be carried out reliably.

    Attributes:
        pivot: index of the failing pivot, when the failure comes from a solve.
        cluster: index of the offending cluster, when known.
        iteration: outer iteration at which the failure surfaced, when known.
    """

    def __init__(self, message, *, pivot=None, cluster=None, iteration=None):
        super().__init__(message)
        self.pivot = pivot
        self.cluster = cluster
        self.iteration = iteration


class DegenerateClusterError(NumericalFailureError):
    """A cluster carries no weight, so its plane is undefined."""


def _frozen(a, dtype=float):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.flags.writeable = False
    return arr


def canonicalize_labels(labels) -> np.ndarray:
    """Map arbitrary integer ids to 0-based contiguous ids.

    Negative ids are treated as outlier markers and kept as ``-1``.
    Non-negative ids are relabelled in increasing order of their value.
    """
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise InvalidInputError("labels must be one-dimensional")
    out = np.full(labels.shape, -1, dtype=np.int64)
    keep = labels >= 0
    _, inverse = np.unique(labels[keep], return_inverse=True)
    out[keep] = inverse
    return out


@dataclass(frozen=True)
class Dataset:
    """N samples by D features with optional ground truth.

    Rows of ``points`` are samples. Arrays are copied and marked read-only
    on construction.
    """

    points: np.ndarray
    labels: Optional[np.ndarray] = None
    feature_names: Optional[tuple] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise InvalidInputError(f"points must be a non-empty N x D matrix, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise InvalidInputError("points contain NaN or Inf")
        object.__setattr__(self, "points", _frozen(pts))
        if self.labels is not None:
            lab = np.asarray(self.labels)
            if lab.shape != (pts.shape[0],):
                raise InvalidInputError(f"labels length {lab.shape} does not match N = {pts.shape[0]}")
            object.__setattr__(self, "labels", _frozen(canonicalize_labels(lab), dtype=np.int64))
        if self.feature_names is not None:
            names = tuple(str(n) for n in self.feature_names)
            if len(names) != pts.shape[1]:
                raise InvalidInputError("feature_names length does not match D")
            object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class PlaneModel:
    """K hyperplanes given by unit normals and centers (and optional offsets).

    KPC and FkPC describe a plane as ``{x : v.x + b = 0}``; RFLkPC uses a
    center ``mu`` on the plane. Both are carried so either method can be
    converted to the other with ``b = -v.mu``.
    """

    normals: np.ndarray
    centers: np.ndarray
    offsets: Optional[np.ndarray] = None

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.normals, dtype=float))
        mu = np.atleast_2d(np.asarray(self.centers, dtype=float))
        if v.shape != mu.shape or v.shape[0] < 1:
            raise InvalidInputError(f"normals {v.shape} and centers {mu.shape} must both be K x D with K >= 1")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(mu))):
            raise InvalidInputError("plane model contains NaN or Inf")
        norms = np.linalg.norm(v, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise InvalidInputError(f"normals must be unit length, got norms {norms}")
        object.__setattr__(self, "normals", _frozen(v))
        object.__setattr__(self, "centers", _frozen(mu))
        if self.offsets is not None:
            b = np.asarray(self.offsets, dtype=float).reshape(-1)
            if b.shape != (v.shape[0],) or not np.all(np.isfinite(b)):
                raise InvalidInputError("offsets must be a finite length-K vector")
            object.__setattr__(self, "offsets", _frozen(b))

    @property
    def k(self) -> int:
        return self.normals.shape[0]

    def plane_offsets(self) -> np.ndarray:
        """Offsets ``b_k``; derived from the centers when not stored."""
        if self.offsets is not None:
            return self.offsets
        return -np.einsum("kd,kd->k", self.normals, self.centers)


@dataclass(frozen=True)
class Membership:
    """Row-stochastic N x K fuzzy assignment matrix."""

    u: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        if u.ndim != 2 or u.shape[0] < 1 or u.shape[1] < 1:
            raise InvalidInputError(f"membership must be N x K, got {u.shape}")
        if not np.all(np.isfinite(u)) or np.any(u < 0.0) or np.any(u > 1.0 + 1e-12):
            raise InvalidInputError("membership entries must lie in [0, 1]")
        if np.any(np.abs(u.sum(axis=1) - 1.0) > 1e-9):
            raise InvalidInputError("membership rows must sum to 1")
        object.__setattr__(self, "u", _frozen(np.clip(u, 0.0, 1.0)))

    @classmethod
    def one_hot(cls, assignment, k: int) -> "Membership":
        assignment = np.asarray(assignment, dtype=np.int64)
        u = np.zeros((assignment.shape[0], k))
        u[np.arange(assignment.shape[0]), assignment] = 1.0
        return cls(u)


@dataclass(frozen=True)
class HyperParams:
    """Settings for a plane-clustering fit.

    ``lam`` is the locality weight (``lambda`` is reserved in Python).
    Defaults: m = 2 (FCM convention), alpha = 0.5, lam = 1.
    """

    k: int
    m: float = 2.0
    alpha: float = 0.5
    lam: float = 1.0
    eta: float = 1e-5
    max_outer: int = 100
    max_inner: int = 20
    inner_tol: float = 1e-6
    eps_proj: float = 1e-8
    seed: int = 0
    kmeans_max_iter: int = 100
    reweighting: str = "mm"

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise InvalidInputError("k must be a positive integer")
        if not self.m > 1.0:
            raise InvalidInputError("fuzzifier m must be > 1")
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidInputError("alpha must lie in [0, 1]")
        if not self.lam >= 0.0:
            raise InvalidInputError("lam must be >= 0")
        if not (self.eta > 0.0 and self.eps_proj > 0.0 and self.inner_tol > 0.0):
            raise InvalidInputError("eta, inner_tol and eps_proj must be > 0")
        if self.reweighting not in ("mm", "plain"):
            raise InvalidInputError("reweighting must be 'mm' or 'plain'")
        if min(self.max_outer, self.max_inner, self.kmeans_max_iter) < 1:
            raise InvalidInputError("iteration caps must be >= 1")


@dataclass
class FitReport:
    """Outcome of one clustering fit."""

    model: PlaneModel
    membership: Membership
    hard_labels: np.ndarray
    objective_trace: list = field(default_factory=list)
    outer_iters: int = 0
    inner_iters_total: int = 0
    converged: bool = False
    wall_time: float = 0.0
    reseeded: list = field(default_factory=list)
    surrogate_steps: list = field(default_factory=list)

    @property
    def objective(self) -> float:
        return float(self.objective_trace[-1])


def minmax_normalize(data: Dataset) -> Dataset:
    """Scale every feature column to [0, 1].

    Constant columns map to all zeros. Labels and feature names are carried
    through unchanged.
    """
    if not isinstance(data, Dataset):
        data = Dataset(np.asarray(data, dtype=float))
    x = data.points
    lo = x.min(axis=0)
    span = x.max(axis=0) - lo
    out = np.zeros_like(x)
    nz = span > 0
    out[:, nz] = (x[:, nz] - lo[nz]) / span[nz]
    # guard against 1 + tiny from rounding
    np.clip(out, 0.0, 1.0, out=out)
    return Dataset(out, data.labels, data.feature_names)


def hard_labels(membership) -> np.ndarray:
    """Per-row argmax; ties go to the lowest cluster index."""
    u = membership.u if isinstance(membership, Membership) else np.asarray(membership, dtype=float)
    # np.argmax returns the first maximal index
    return np.argmax(u, axis=1).astype(np.int64)


def as_points(data) -> np.ndarray:
    if isinstance(data, Dataset):
        return data.points
    return Dataset(data).points


def feature_names_or_default(names: Optional[Sequence[str]], d: int) -> tuple:
    if names is not None:
        return tuple(names)
    return tuple(f"x{j}" for j in range(d))
