"""Multi-view batches, synthetic data generation, corruption protocols, and
the dataset CSV format.

Synthetic data: each class gets one Gaussian center per view, scaled by the
configured separation and per-view informativeness; samples scatter around
their center with a fixed within-class standard deviation.  Corruption adds
zero-mean Gaussian noise and/or clears the presence mask of targeted views
at a given missing rate.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

# Within-class feature scale of the generator.  Kept fixed so the absolute
# noise variances used by the corruption protocol stay meaningful.
WITHIN_STD = 0.1


@dataclass
class MultiViewBatch:
    """Per-view feature matrices, integer labels, and a presence mask."""

    views: list[np.ndarray]
    labels: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        self.views = [np.asarray(v, dtype=np.float64) for v in self.views]
        self.labels = np.asarray(self.labels, dtype=np.int64)
        n = self.labels.shape[0]
        for v in self.views:
            if v.ndim != 2 or v.shape[0] != n:
                raise ValueError("every view needs one feature row per sample")
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.mask.shape != (n, len(self.views)):
            raise ValueError("mask must be (n_samples, n_views)")
        if np.any(self.labels < 0):
            raise ValueError("labels must be non-negative integers")

    @property
    def n(self) -> int:
        return self.labels.shape[0]

    @property
    def m(self) -> int:
        return len(self.views)

    @property
    def dims(self) -> list[int]:
        return [v.shape[1] for v in self.views]

    def pseudo_features(self) -> np.ndarray:
        """Concatenated per-view features; missing views contribute zeros."""
        parts = [
            np.where(self.mask[:, i, None], v, 0.0) for i, v in enumerate(self.views)
        ]
        return np.concatenate(parts, axis=1)

    def copy(self) -> "MultiViewBatch":
        return MultiViewBatch(
            [v.copy() for v in self.views], self.labels.copy(), self.mask.copy()
        )

    def take(self, idx) -> "MultiViewBatch":
        return MultiViewBatch(
            [v[idx] for v in self.views], self.labels[idx], self.mask[idx]
        )


@dataclass
class SyntheticConfig:
    k: int = 3
    m: int = 2
    dims: tuple[int, ...] = (8, 8)
    separation: float = 1.0
    informativeness: tuple[float, ...] = ()
    n_train: int = 1200
    n_test: int = 300
    seed: int = 0

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("need at least two classes")
        if self.m < 1 or len(self.dims) != self.m:
            raise ValueError("dims must list one dimension per view")
        if any(d < 1 for d in self.dims):
            raise ValueError("view dimensions must be at least 1")
        if self.separation < 0:
            raise ValueError("separation must be non-negative")
        if not self.informativeness:
            self.informativeness = tuple(1.0 for _ in range(self.m))
        if len(self.informativeness) != self.m:
            raise ValueError("informativeness must list one weight per view")


@dataclass
class CorruptionSpec:
    noise_sigma2: float = 0.0
    missing_rate: float = 0.0
    target_views: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.noise_sigma2 < 0.0:
            raise ValueError("noise variance must be non-negative")
        if not 0.0 <= self.missing_rate <= 1.0:
            raise ValueError("missing rate must lie in [0, 1]")


def _balanced_labels(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    base = np.repeat(np.arange(k), n // k)
    extra = np.arange(n - base.size) % k
    labels = np.concatenate([base, extra])
    rng.shuffle(labels)
    return labels


def generate_synthetic(cfg: SyntheticConfig) -> tuple[MultiViewBatch, MultiViewBatch]:
    """Deterministic (train, test) pair of balanced multi-view batches."""
    rng = np.random.default_rng(cfg.seed)
    centers = [
        cfg.separation * cfg.informativeness[m] * rng.standard_normal((cfg.k, d))
        for m, d in enumerate(cfg.dims)
    ]

    def draw(n: int) -> MultiViewBatch:
        labels = _balanced_labels(n, cfg.k, rng)
        views = [
            centers[m][labels] + WITHIN_STD * rng.standard_normal((n, d))
            for m, d in enumerate(cfg.dims)
        ]
        return MultiViewBatch(views, labels, np.ones((n, cfg.m), dtype=bool))

    return draw(cfg.n_train), draw(cfg.n_test)


def corrupt(batch: MultiViewBatch, spec: CorruptionSpec, seed) -> MultiViewBatch:
    """Apply Gaussian noise and missing-view dropout to the targeted views.

    An empty ``target_views`` means every view is targeted.
    """
    out = batch.copy()
    targets = spec.target_views if spec.target_views else tuple(range(batch.m))
    for m in targets:
        if not 0 <= m < batch.m:
            raise ValueError(f"target view {m} out of range")
    rng = np.random.default_rng(seed)
    sigma = float(np.sqrt(spec.noise_sigma2))
    for m in targets:
        if sigma > 0.0:
            out.views[m] = out.views[m] + sigma * rng.standard_normal(
                out.views[m].shape
            )
        if spec.missing_rate > 0.0:
            drop = rng.random(batch.n) < spec.missing_rate
            out.mask[drop, m] = False
    return out


# --- dataset CSV -----------------------------------------------------------
#
# One row per (sample, view): `view,sample,label,f0..f{d-1}`.  A missing
# view is encoded by the absence of its row.


def save_dataset_csv(batch: MultiViewBatch, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        width = max(batch.dims)
        writer.writerow(["view", "sample", "label"] + [f"f{j}" for j in range(width)])
        for m, view in enumerate(batch.views):
            d = view.shape[1]
            for i in range(batch.n):
                if not batch.mask[i, m]:
                    continue
                row = [m, i, int(batch.labels[i])]
                row += [repr(float(x)) for x in view[i, :d]]
                writer.writerow(row)


def load_dataset_csv(path) -> MultiViewBatch:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:3] != ["view", "sample", "label"]:
            raise ValueError("dataset CSV must start with view,sample,label columns")
        for rec in reader:
            if not rec:
                continue
            feats = [float(x) for x in rec[3:] if x != ""]
            rows.append((int(rec[0]), int(rec[1]), int(rec[2]), feats))
    if not rows:
        raise ValueError("dataset CSV contains no rows")
    n = max(r[1] for r in rows) + 1
    m = max(r[0] for r in rows) + 1
    dims = [0] * m
    for view, _, _, feats in rows:
        if dims[view] and dims[view] != len(feats):
            raise ValueError(f"inconsistent feature width in view {view}")
        dims[view] = len(feats)
    views = [np.zeros((n, d)) for d in dims]
    labels = np.full(n, -1, dtype=np.int64)
    mask = np.zeros((n, m), dtype=bool)
    for view, sample, label, feats in rows:
        views[view][sample] = feats
        mask[sample, view] = True
        if labels[sample] >= 0 and labels[sample] != label:
            raise ValueError(f"conflicting labels for sample {sample}")
        labels[sample] = label
    if np.any(labels < 0):
        raise ValueError("some samples have no rows at all")
    return MultiViewBatch(views, labels, mask)
