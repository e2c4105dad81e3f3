"""Classification and clustering metrics.

Clustering accuracy maximizes agreement over relabelings of the predicted
cluster ids by solving the assignment problem on the contingency table; the
test suite validates it against factorial brute force for small k.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

MAX_CLUSTER_K = 20


def _check_labels(pred, truth):
    p = np.asarray(pred, dtype=np.int64)
    t = np.asarray(truth, dtype=np.int64)
    if p.shape != t.shape or p.ndim != 1:
        raise ValueError("pred and truth must be 1-d arrays of equal length")
    if p.size == 0:
        raise ValueError("empty label arrays")
    if np.any(p < 0) or np.any(t < 0):
        raise ValueError("labels must be non-negative")
    return p, t


def accuracy(pred, truth) -> float:
    p, t = _check_labels(pred, truth)
    return float(np.mean(p == t))


def macro_f1(pred, truth) -> float:
    """Unweighted mean of per-class one-vs-rest F1; classes with no true
    positives contribute zero."""
    p, t = _check_labels(pred, truth)
    k = int(max(p.max(), t.max())) + 1
    scores = np.zeros(k)
    for c in range(k):
        tp = np.sum((p == c) & (t == c))
        fp = np.sum((p == c) & (t != c))
        fn = np.sum((p != c) & (t == c))
        if tp == 0:
            continue
        precision = tp / (tp + fp)
        recall = tp / (tp + fn)
        scores[c] = 2.0 * precision * recall / (precision + recall)
    return float(scores.mean())


def contingency(pred, truth, k: int) -> np.ndarray:
    p, t = _check_labels(pred, truth)
    table = np.zeros((k, k), dtype=np.int64)
    np.add.at(table, (p, t), 1)
    return table


def clustering_accuracy(pred_clusters, truth, k: int) -> float:
    """Fraction correct under the best permutation mapping of cluster ids."""
    if k > MAX_CLUSTER_K:
        raise ValueError(f"clustering accuracy limited to k <= {MAX_CLUSTER_K}")
    p, t = _check_labels(pred_clusters, truth)
    if p.max() >= k or t.max() >= k:
        raise ValueError("labels exceed the stated number of clusters")
    table = contingency(p, t, k)
    rows, cols = linear_sum_assignment(table.max() - table)
    return float(table[rows, cols].sum() / p.size)


def lloyd_clusters(points, k: int, seed, max_iter: int = 100) -> np.ndarray:
    """Seeded Lloyd iterations on raw points; deterministic per seed.

    Centers start from a random point followed by farthest-point selection,
    which keeps the initialization spread out.
    """
    x = np.asarray(points, dtype=np.float64)
    n = x.shape[0]
    if k == 1:
        return np.zeros(n, dtype=np.int64)
    rng = np.random.default_rng(seed)
    first = rng.integers(n)
    chosen = [first]
    min_dist = ((x - x[first]) ** 2).sum(axis=1)
    for _ in range(k - 1):
        nxt = int(min_dist.argmax())
        chosen.append(nxt)
        min_dist = np.minimum(min_dist, ((x - x[nxt]) ** 2).sum(axis=1))
    centers = x[chosen].copy()
    assign = np.zeros(n, dtype=np.int64)
    for _ in range(max_iter):
        dist = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assign = dist.argmin(axis=1)
        for c in range(k):
            sel = new_assign == c
            if sel.any():
                centers[c] = x[sel].mean(axis=0)
            else:
                # reseed an empty cluster at the overall farthest point
                centers[c] = x[dist.min(axis=1).argmax()]
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
    return assign


def cluster_assignments(model, batch, k: int, seed=0) -> np.ndarray:
    """Cluster ids from centroid clustering of fused belief vectors."""
    from .model import forward

    result = forward(model, batch)
    return lloyd_clusters(result.beliefs_fused, k, seed)


@dataclass
class MetricsReport:
    accuracy: float
    macro_f1: float
    fused_accuracy: float
    per_view_accuracies: list[float] = field(default_factory=list)
    mean_uncertainty_per_view: list[float] = field(default_factory=list)
    clustering_accuracy: float | None = None

    def __post_init__(self):
        rates = [self.accuracy, self.macro_f1, self.fused_accuracy]
        rates += list(self.per_view_accuracies)
        rates += list(self.mean_uncertainty_per_view)
        if self.clustering_accuracy is not None:
            rates.append(self.clustering_accuracy)
        for r in rates:
            if not 0.0 <= r <= 1.0:
                raise ValueError("metric rates must lie in [0, 1]")
