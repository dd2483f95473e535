"""Seeded synthetic plane-cluster benchmarks.

Every cluster is a bounded flat patch: a center, D-1 orthonormal in-plane
axes and a half-extent per axis. Clean points are drawn uniformly over the
patch; noise is added along the patch normal only, so the perpendicular
residual of a point is exactly its noise draw.

Families (2-D unless stated):

``S1``
    Three separated segments with distinct directions (3 x 50 points).
``S2``
    One oblique segment plus two collinear horizontal segments that are
    separated along their shared direction (3 x 50 points). Unbounded plane
    models cannot tell the two horizontal clusters apart.
``S3``
    The S1 segments plus a fourth segment crossing the diagonal one, so two
    clusters overlap (4 x 50 points).
``Toy``
    Two collinear segments far apart along the same line (2 x 50 points).
``Room3D``
    Two walls and a table top in 3-D (667 + 667 + 666 points).

Random streams: ``SeedSequence(seed).spawn(K + 1)`` gives one child stream
per cluster, in cluster order, and the last child drives the outliers.
Changing one cluster's count therefore leaves every other cluster intact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .core import Dataset, InvalidInputError, PlaneModel
from .linalg import canonical_sign

FAMILIES = ("S1", "S2", "S3", "Toy", "Room3D")
NOISES = ("clean", "gaussian", "laplace", "student_t1", "uniform_outliers")
NOISE_TAGS = {"N": "gaussian", "L": "laplace", "T": "student_t1", "UN": "uniform_outliers"}
DEFAULT_NOISE_SCALE = 0.2
DEFAULT_OUTLIER_FRACTION = 0.4


def _segment(p0, p1):
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    axis = p1 - p0
    half = np.linalg.norm(axis) / 2.0
    return 0.5 * (p0 + p1), (axis / (2.0 * half))[None, :], np.array([half])


def _patch(center, axes, halves):
    return np.asarray(center, float), np.asarray(axes, float), np.asarray(halves, float)


# (center, in-plane axes, half extents) per cluster
_GEOMETRY = {
    "S1": [
        _segment((0.0, 0.0), (4.0, 0.0)),
        _segment((6.5, 1.0), (6.5, 5.0)),
        _segment((0.5, 2.0), (3.5, 5.0)),
    ],
    "S2": [
        _segment((0.5, 2.5), (3.5, 5.5)),
        _segment((0.0, 0.0), (3.0, 0.0)),
        _segment((5.0, 0.0), (8.0, 0.0)),
    ],
    "S3": [
        _segment((0.0, 0.0), (4.0, 0.0)),
        _segment((6.5, 1.0), (6.5, 5.0)),
        _segment((0.5, 2.0), (3.5, 5.0)),
        _segment((2.0, 5.5), (5.0, 2.5)),
    ],
    "Toy": [
        _segment((0.0, 0.0), (2.0, 0.0)),
        _segment((6.0, 0.0), (8.0, 0.0)),
    ],
    "Room3D": [
        _patch((0.0, 2.0, 1.5), [(0, 1, 0), (0, 0, 1)], (2.0, 1.5)),
        _patch((2.5, 0.0, 1.5), [(1, 0, 0), (0, 0, 1)], (1.5, 1.5)),
        _patch((2.5, 2.5, 0.8), [(1, 0, 0), (0, 1, 0)], (1.0, 1.0)),
    ],
}

_DEFAULT_COUNTS = {"S1": 50, "S2": 50, "S3": 50, "Toy": 50, "Room3D": (667, 667, 666)}


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for one synthetic dataset.

    ``n_per_cluster`` is a single count or one count per cluster; ``None``
    uses the family default. ``outlier_fraction`` only applies to
    ``uniform_outliers``. ``noise_scale`` is the scale parameter of the
    perpendicular noise (standard deviation for gaussian, the Laplace scale
    b, and the Cauchy scale for student_t1). Outlier sets also carry
    ``noise_scale`` perpendicular gaussian noise on the inliers when
    ``inlier_noise`` is set.
    """

    family: str = "S1"
    noise: str = "clean"
    n_per_cluster: Union[int, Sequence[int], None] = None
    noise_scale: float = DEFAULT_NOISE_SCALE
    outlier_fraction: float = DEFAULT_OUTLIER_FRACTION
    seed: int = 0
    inlier_noise: str = "clean"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidInputError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.noise not in NOISES:
            raise InvalidInputError(f"unknown noise {self.noise!r}; expected one of {NOISES}")
        if self.inlier_noise not in NOISES[:4]:
            raise InvalidInputError("inlier_noise must be a perpendicular noise type")
        if self.inlier_noise != "clean" and self.noise != "uniform_outliers":
            raise InvalidInputError("inlier_noise only combines with uniform_outliers")
        if not 0.0 <= self.outlier_fraction < 1.0:
            raise InvalidInputError("outlier_fraction must lie in [0, 1)")
        if self.noise_scale < 0.0:
            raise InvalidInputError("noise_scale must be >= 0")
        if any(c < 2 for c in self.counts()):
            raise InvalidInputError("every cluster needs at least 2 points")

    @property
    def k(self) -> int:
        return len(_GEOMETRY[self.family])

    def counts(self) -> tuple:
        n = self.n_per_cluster if self.n_per_cluster is not None else _DEFAULT_COUNTS[self.family]
        if np.ndim(n) == 0:
            return (int(n),) * self.k
        n = tuple(int(c) for c in n)
        if len(n) != self.k:
            raise InvalidInputError(f"{self.family} has {self.k} clusters, got {len(n)} counts")
        return n

    @classmethod
    def from_name(cls, name: str, **kwargs) -> "SyntheticSpec":
        """Parse names such as ``S1``, ``S2-T`` or ``S3-UN``."""
        family, _, tag = name.partition("-")
        noise = NOISE_TAGS.get(tag, "clean") if tag else "clean"
        if tag and tag not in NOISE_TAGS:
            raise InvalidInputError(f"unknown noise tag {tag!r} in {name!r}")
        return cls(family=family, noise=noise, **kwargs)


def _normal_of(axes):
    # orthogonal complement of the in-plane axes
    _, _, vt = np.linalg.svd(axes, full_matrices=True)
    v = vt[-1][:, None]
    return canonical_sign(v)[:, 0]


def _noise(rng, kind, scale, size):
    if kind == "clean" or kind == "uniform_outliers":
        return np.zeros(size)
    if kind == "gaussian":
        return scale * rng.standard_normal(size)
    if kind == "laplace":
        return rng.laplace(0.0, scale, size)
    if kind == "student_t1":
        return scale * rng.standard_t(1, size)
    raise InvalidInputError(f"unknown noise {kind!r}")


def true_planes(spec: SyntheticSpec) -> PlaneModel:
    """Exact generating planes: patch normals and patch centers."""
    geo = _GEOMETRY[spec.family]
    normals = np.array([_normal_of(axes) for _, axes, _ in geo])
    centers = np.array([c for c, _, _ in geo])
    return PlaneModel(normals, centers)


def generate(spec: SyntheticSpec) -> Dataset:
    """Draw the dataset described by ``spec``; outliers carry label -1."""
    geo = _GEOMETRY[spec.family]
    counts = spec.counts()
    streams = [np.random.Generator(np.random.PCG64(s))
               for s in np.random.SeedSequence(spec.seed).spawn(len(geo) + 1)]
    perp = spec.inlier_noise if spec.noise == "uniform_outliers" else spec.noise
    blocks, labels = [], []
    for j, ((center, axes, halves), n, rng) in enumerate(zip(geo, counts, streams)):
        coords = rng.uniform(-1.0, 1.0, size=(n, axes.shape[0])) * halves
        pts = center + coords @ axes
        pts = pts + np.outer(_noise(rng, perp, spec.noise_scale, n), _normal_of(axes))
        blocks.append(pts)
        labels.append(np.full(n, j))
    x = np.vstack(blocks)
    y = np.concatenate(labels)
    if spec.noise == "uniform_outliers":
        n_out = int(round(spec.outlier_fraction * x.shape[0]))
        lo, hi = x.min(axis=0), x.max(axis=0)
        out = streams[-1].uniform(lo, hi, size=(n_out, x.shape[1]))
        x = np.vstack([x, out])
        y = np.concatenate([y, np.full(n_out, -1)])
    names = tuple(f"x{j}" for j in range(x.shape[1]))
    return Dataset(x, y, names)
