"""Dataset containers, loaders, synthetic generators and batch sampling."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist


class DataError(ValueError):
    """Raised for malformed or degenerate input data."""


@dataclass
class Dataset:
    """Dense N x d feature matrix with integer labels.

    ``class_map`` records how raw class ids were folded into {-1, +1}
    when the dataset was binarized.
    """

    features: np.ndarray
    labels: np.ndarray
    class_map: dict | None = None
    name: str = ""

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels).astype(np.int64)
        if self.features.ndim != 2:
            raise DataError(f"features must be 2-D, got shape {self.features.shape}")
        n, d = self.features.shape
        if n < 1 or d < 1:
            raise DataError(f"dataset must have N >= 1 and d >= 1, got {n}x{d}")
        if self.labels.shape != (n,):
            raise DataError(f"expected {n} labels, got shape {self.labels.shape}")
        if not np.all(np.isfinite(self.features)):
            raise DataError("features contain non-finite entries")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def is_binary(self) -> bool:
        return bool(np.all(np.isin(self.labels, (-1, 1))))

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices)
        return Dataset(self.features[idx], self.labels[idx], self.class_map, self.name)


@dataclass(frozen=True)
class PairSample:
    i: int
    j: int


# ---------------------------------------------------------------------------
# loaders


def load_libsvm(path) -> Dataset:
    """Read a LIBSVM/SVMlight text file (``label idx:val ...``, 1-based)."""
    path = Path(path)
    rows = []
    labels = []
    d = 0
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            try:
                label = int(float(tokens[0]))
                entries = {}
                for tok in tokens[1:]:
                    idx, val = tok.split(":", 1)
                    idx = int(idx)
                    if idx < 1:
                        raise ValueError(f"index {idx} is not 1-based")
                    entries[idx] = float(val)
            except ValueError as exc:
                raise DataError(f"{path}: parse error at line {lineno}: {exc}") from None
            if entries:
                d = max(d, max(entries))
            labels.append(label)
            rows.append(entries)
    if not rows:
        raise DataError(f"{path}: empty file")
    if d == 0:
        raise DataError(f"{path}: no feature entries found")
    X = np.zeros((len(rows), d))
    for r, entries in enumerate(rows):
        for idx, val in entries.items():
            X[r, idx - 1] = val
    return Dataset(X, np.array(labels), name=path.stem)


def save_libsvm(dataset: Dataset, path) -> None:
    with open(path, "w") as fh:
        for x, y in zip(dataset.features, dataset.labels):
            nz = np.flatnonzero(x)
            feats = " ".join(f"{j + 1}:{float(x[j])!r}" for j in nz)
            fh.write(f"{int(y):+d} {feats}".rstrip() + "\n")


def load_csv(path, label_column: int = 0, header: bool = False) -> Dataset:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if header:
        rows = rows[1:]
    if not rows:
        raise DataError(f"{path}: empty file")
    width = len(rows[0])
    if not -width <= label_column < width:
        raise DataError(f"{path}: label column {label_column} out of range for {width} columns")
    values = np.empty((len(rows), width))
    first_row = 2 if header else 1
    for r, row in enumerate(rows):
        if len(row) != width:
            raise DataError(
                f"{path}: ragged row {r + first_row}: {len(row)} columns, expected {width}"
            )
        for c, cell in enumerate(row):
            try:
                values[r, c] = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: non-numeric cell {cell!r} at row {r + first_row}, column {c}"
                ) from None
    label_column %= width
    labels = values[:, label_column]
    if not np.all(labels == np.round(labels)):
        raise DataError(f"{path}: label column {label_column} is not integer-valued")
    X = np.delete(values, label_column, axis=1)
    return Dataset(X, labels.astype(np.int64), name=path.stem)


def binarize(dataset: Dataset, positive=None) -> Dataset:
    """Fold labels into {-1, +1}.

    With ``positive`` given, that class becomes +1 and every other class -1.
    Otherwise the dataset must have exactly two classes; the larger id maps
    to +1.
    """
    classes = np.unique(dataset.labels)
    if positive is None:
        if len(classes) != 2:
            raise DataError(f"need exactly two classes to binarize, found {len(classes)}")
        positive = classes[1]
    cmap = {int(c): (1 if c == positive else -1) for c in classes}
    y = np.where(dataset.labels == positive, 1, -1)
    return Dataset(dataset.features, y, cmap, dataset.name)


def standardize(train: Dataset, *others: Dataset):
    """Zero-mean / unit-variance scaling fitted on ``train``. Off by default everywhere."""
    mu = train.features.mean(axis=0)
    sd = train.features.std(axis=0)
    sd[sd == 0] = 1.0
    out = [Dataset((ds.features - mu) / sd, ds.labels, ds.class_map, ds.name) for ds in (train, *others)]
    return out[0] if not others else tuple(out)


# ---------------------------------------------------------------------------
# synthetic data


def make_two_rings(n_per_class: int, inner_radius: float = 1.0, outer_radius: float = 3.0,
                   noise_sd: float = 0.1, seed: int = 0) -> Dataset:
    """Two concentric noisy rings: label -1 inside, +1 outside."""
    if n_per_class < 1:
        raise DataError(f"n_per_class must be positive, got {n_per_class}")
    if inner_radius <= 0 or outer_radius <= 0:
        raise DataError("radii must be positive")
    if outer_radius <= inner_radius + 3 * noise_sd:
        raise DataError("outer_radius must exceed inner_radius + 3*noise_sd")
    rng = np.random.default_rng(seed)
    parts = []
    for radius in (inner_radius, outer_radius):
        angle = rng.uniform(0.0, 2 * np.pi, n_per_class)
        rad = radius + noise_sd * rng.standard_normal(n_per_class)
        parts.append(np.column_stack([rad * np.cos(angle), rad * np.sin(angle)]))
    X = np.vstack(parts)
    y = np.concatenate([-np.ones(n_per_class, dtype=np.int64), np.ones(n_per_class, dtype=np.int64)])
    perm = rng.permutation(2 * n_per_class)
    return Dataset(X[perm], y[perm], name="two_rings")


# ---------------------------------------------------------------------------
# sampling


def sample_batch(dataset: Dataset, M: int, rng: np.random.Generator) -> np.ndarray:
    """M row indices drawn uniformly without replacement."""
    if not 1 <= M <= dataset.n:
        raise DataError(f"batch size {M} must lie in [1, {dataset.n}]")
    return rng.choice(dataset.n, size=M, replace=False)


def sample_pairs(dataset: Dataset, n_pairs: int, rng: np.random.Generator) -> list[PairSample]:
    ij = rng.integers(0, dataset.n, size=(n_pairs, 2))
    return [PairSample(int(i), int(j)) for i, j in ij]


def pairs_to_arrays(pairs) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(pairs, tuple) and len(pairs) == 2:
        return np.asarray(pairs[0]), np.asarray(pairs[1])
    arr = np.array([(p.i, p.j) for p in pairs], dtype=np.int64).reshape(-1, 2)
    return arr[:, 0], arr[:, 1]


def estimate_gamma(dataset: Dataset, sample_n: int = 1000, nn_rank: int = 50,
                   rng: np.random.Generator | None = None) -> float:
    """Bandwidth heuristic gamma = 2 / sigma**2.

    sigma is the mean Euclidean distance from each sampled point to its
    ``nn_rank``-th nearest neighbour (self excluded) within the sample.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    if dataset.n < nn_rank + 1:
        raise DataError(f"need at least {nn_rank + 1} rows, dataset has {dataset.n}")
    if sample_n > dataset.n:
        warnings.warn(f"sample_n={sample_n} exceeds N={dataset.n}; using all rows", stacklevel=2)
        sample_n = dataset.n
    idx = rng.choice(dataset.n, size=sample_n, replace=False)
    X = dataset.features[idx]
    dist = cdist(X, X)
    np.fill_diagonal(dist, np.inf)
    # after sorting, self (inf) is last; column nn_rank-1 is the nn_rank-th neighbour
    kth = np.partition(dist, nn_rank - 1, axis=1)[:, nn_rank - 1]
    sigma = float(kth.mean())
    if sigma == 0.0:
        raise DataError("degenerate data: mean nearest-neighbour distance is zero")
    return 2.0 / sigma**2
