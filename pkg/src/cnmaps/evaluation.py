"""Accuracy and hinge evaluation, PSD checks, and projection timing."""

from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np


def decision_function(w, mapper, X) -> np.ndarray:
    return mapper.transform(X) @ np.asarray(w)


def predict(w, mapper, X) -> np.ndarray:
    # ties (score exactly 0) go to +1
    return np.where(decision_function(w, mapper, X) >= 0, 1, -1)


def accuracy(scores, y) -> float:
    pred = np.where(np.asarray(scores) >= 0, 1, -1)
    return float(np.count_nonzero(pred == np.asarray(y)) / len(y))


@dataclass
class EvalReport:
    accuracy: float
    mean_hinge: float
    n_test: int
    n_correct: int
    class_counts: dict = field(default_factory=dict)

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["accuracy", "mean_hinge", "n_test", "n_correct"])
            writer.writerow([repr(self.accuracy), repr(self.mean_hinge), self.n_test, self.n_correct])


def evaluate(model, mapper, dataset) -> EvalReport:
    if mapper.d != dataset.d:
        raise ValueError(f"map expects d={mapper.d}, dataset has d={dataset.d}")
    y = dataset.labels
    scores = decision_function(model.w, mapper, dataset.features)
    pred = np.where(scores >= 0, 1, -1)
    correct = int(np.count_nonzero(pred == y))
    hinge = float(np.mean(np.maximum(0.0, 1.0 - y * scores)))
    counts = {int(c): int(np.count_nonzero(y == c)) for c in np.unique(y)}
    return EvalReport(correct / len(y), hinge, len(y), correct, counts)


def evaluate_ovr(models: dict, maps: dict, dataset) -> EvalReport:
    """One-vs-rest: predict the class whose binary scorer gives the largest score."""
    classes = sorted(models)
    S = np.column_stack([decision_function(models[c].w, maps[c], dataset.features) for c in classes])
    pred = np.asarray(classes)[np.argmax(S, axis=1)]
    y = dataset.labels
    correct = int(np.count_nonzero(pred == y))
    hinge = float(np.mean([
        np.mean(np.maximum(0.0, 1.0 - np.where(y == c, 1, -1) * S[:, i])) for i, c in enumerate(classes)
    ]))
    counts = {int(c): int(np.count_nonzero(y == c)) for c in np.unique(y)}
    return EvalReport(correct / len(y), hinge, len(y), correct, counts)


def psd_check(gram) -> float:
    """Smallest eigenvalue of a symmetric matrix."""
    A = np.asarray(getattr(gram, "values", gram), dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got {A.shape}")
    return float(np.linalg.eigvalsh(A)[0])


# ---------------------------------------------------------------------------
# timing


@dataclass
class BenchRecord:
    d: int
    k: int
    family: str
    median_seconds: float
    repetitions: int


def _median_time(fn, x, reps, warmup=2):
    for _ in range(warmup):
        fn(x)
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn(x)
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def bench_projection(d_list, k_mode: str = "k=d", reps: int = 5, seed: int = 0,
                     gamma: float = 1.0) -> list[BenchRecord]:
    """Median per-vector projection time of dense vs circulant maps.

    Map construction and FFT spectra are prepared before timing starts; both
    families see the same input vector.
    """
    from .kernels import KernelSpec
    from .maps import init_random_circulant, init_random_dense

    if reps < 5:
        raise ValueError(f"need at least 5 repetitions, got {reps}")
    mult = {"k=d": 1, "k=2d": 2}.get(k_mode)
    if mult is None:
        raise ValueError(f"k_mode must be 'k=d' or 'k=2d', got {k_mode!r}")
    spec = KernelSpec(gamma)
    records = []
    for d in d_list:
        k = mult * d
        rng = np.random.default_rng(seed)
        x = rng.standard_normal(d)
        circ = init_random_circulant(spec, d, k, rng).prepare()
        records.append(BenchRecord(d, k, "circulant", _median_time(circ.project, x, reps), reps))
        del circ
        dense = init_random_dense(spec, d, k, False, rng)
        records.append(BenchRecord(d, k, "dense", _median_time(dense.project, x, reps), reps))
        del dense
    return records


def bench_to_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["d", "k", "family", "median_seconds", "repetitions"])
        for r in records:
            writer.writerow([r.d, r.k, r.family, repr(r.median_seconds), r.repetitions])


def bench_to_json(records, path) -> None:
    with open(path, "w") as fh:
        json.dump([asdict(r) for r in records], fh, indent=2)
