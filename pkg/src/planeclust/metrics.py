"""External clustering scores: ACC, NMI, ARI and purity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import InvalidInputError


@dataclass(frozen=True)
class Contingency:
    """Counts of samples per (true class, predicted cluster) pair."""

    table: np.ndarray
    n: int

    @classmethod
    def from_labels(cls, truth, pred) -> "Contingency":
        truth = np.asarray(truth)
        pred = np.asarray(pred)
        if truth.ndim != 1 or pred.ndim != 1:
            raise InvalidInputError("labels must be one-dimensional")
        if truth.shape != pred.shape:
            raise InvalidInputError(f"length mismatch: {truth.shape[0]} vs {pred.shape[0]}")
        if truth.shape[0] == 0:
            raise InvalidInputError("need at least one sample")
        _, t = np.unique(truth, return_inverse=True)
        _, p = np.unique(pred, return_inverse=True)
        table = np.zeros((t.max() + 1, p.max() + 1), dtype=np.int64)
        np.add.at(table, (t, p), 1)
        return cls(table, int(truth.shape[0]))


def accuracy(truth, pred) -> float:
    """Best one-to-one matching of clusters to classes (Hungarian method)."""
    c = Contingency.from_labels(truth, pred)
    size = max(c.table.shape)
    padded = np.zeros((size, size), dtype=np.int64)
    padded[: c.table.shape[0], : c.table.shape[1]] = c.table
    rows, cols = linear_sum_assignment(padded, maximize=True)
    return float(padded[rows, cols].sum()) / c.n


def _entropy(counts, n):
    p = counts[counts > 0] / n
    return float(-np.sum(p * np.log(p)))


def nmi(truth, pred, average: str = "geometric") -> float:
    """Normalized mutual information with natural-log entropies.

    ``average`` selects the normalizer: ``"geometric"`` uses
    ``sqrt(H(T) H(P))``, ``"arithmetic"`` uses ``(H(T) + H(P)) / 2``.
    Two single-cluster partitions score 1; if exactly one side has zero
    entropy the score is 0.
    """
    c = Contingency.from_labels(truth, pred)
    n = c.n
    a = c.table.sum(axis=1)
    b = c.table.sum(axis=0)
    ht, hp = _entropy(a, n), _entropy(b, n)
    if ht == 0.0 and hp == 0.0:
        return 1.0
    if ht == 0.0 or hp == 0.0:
        return 0.0
    i, j = np.nonzero(c.table)
    nij = c.table[i, j].astype(float)
    mi = float(np.sum(nij / n * np.log(n * nij / (a[i] * b[j]))))
    if average == "geometric":
        denom = np.sqrt(ht * hp)
    elif average == "arithmetic":
        denom = 0.5 * (ht + hp)
    else:
        raise InvalidInputError(f"unknown NMI normalization {average!r}")
    return float(min(max(mi / denom, 0.0), 1.0))


def _comb2(x):
    x = np.asarray(x, dtype=np.float64)
    return x * (x - 1.0) / 2.0


def ari(truth, pred) -> float:
    """Adjusted Rand index (Hubert-Arabie)."""
    c = Contingency.from_labels(truth, pred)
    sum_ij = float(_comb2(c.table).sum())
    sum_a = float(_comb2(c.table.sum(axis=1)).sum())
    sum_b = float(_comb2(c.table.sum(axis=0)).sum())
    expected = sum_a * sum_b / float(_comb2(c.n)) if c.n > 1 else 0.0
    max_index = 0.5 * (sum_a + sum_b)
    denom = max_index - expected
    if denom == 0.0:
        identical = c.table.shape[0] == c.table.shape[1] and np.count_nonzero(c.table) == c.table.shape[0]
        return 1.0 if identical else 0.0
    return (sum_ij - expected) / denom


def purity(truth, pred) -> float:
    """Fraction of samples that belong to the majority class of their cluster."""
    c = Contingency.from_labels(truth, pred)
    return float(c.table.max(axis=0).sum()) / c.n


METRICS = {"acc": accuracy, "nmi": nmi, "ari": ari, "purity": purity}


def score(truth, pred, outliers: str = "exclude") -> dict:
    """All four scores, with outlier handling for labels equal to -1.

    ``outliers="exclude"`` drops samples whose true label is -1;
    ``"own_class"`` scores them as one extra class.
    """
    truth = np.asarray(truth)
    pred = np.asarray(pred)
    if outliers == "exclude":
        keep = truth >= 0
        truth, pred = truth[keep], pred[keep]
    elif outliers != "own_class":
        raise InvalidInputError(f"unknown outlier policy {outliers!r}")
    return {name: fn(truth, pred) for name, fn in METRICS.items()}
