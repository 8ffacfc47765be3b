"""Shift-invariant kernels, spectral sampling and approximation error.

The RBF kernel is K(x, y) = exp(-gamma * ||x - y||^2).  Writing
K(z) = exp(-||z||^2 / (2 s^2)) gives s^2 = 1 / (2 gamma); its Fourier
transform is proportional to exp(-s^2 ||theta||^2 / 2), i.e. a Gaussian
over frequencies with per-coordinate variance 1 / s^2 = 2 gamma.  Hence
``sample_spectral`` draws theta ~ N(0, 2 gamma I).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .data import Dataset, pairs_to_arrays

GRAM_CAP = 5000
DEFAULT_N_PAIRS = 100_000


@dataclass(frozen=True)
class KernelSpec:
    gamma: float
    family: str = "rbf"

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.family != "rbf":
            raise NotImplementedError(f"kernel family {self.family!r} is not supported")

    def from_sqdist(self, sqdist):
        return np.exp(-self.gamma * np.asarray(sqdist))


@dataclass
class GramMatrix:
    values: np.ndarray
    source: str = ""


def kernel_eval(spec: KernelSpec, x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    diff = x - y
    return float(spec.from_sqdist(diff @ diff))


def sample_spectral(spec: KernelSpec, d: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """d x k matrix whose columns are i.i.d. draws from the kernel's spectral density."""
    if d < 1 or k < 1:
        raise ValueError(f"d and k must be >= 1, got d={d}, k={k}")
    return rng.normal(0.0, np.sqrt(2.0 * spec.gamma), size=(d, k))


def sample_phases(k: int, rng: np.random.Generator) -> np.ndarray:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return rng.uniform(0.0, 2.0 * np.pi, size=k)


def gram_exact(spec: KernelSpec, dataset: Dataset, cap: int = GRAM_CAP) -> GramMatrix:
    if dataset.n > cap:
        raise ValueError(
            f"N={dataset.n} exceeds the Gram cap of {cap}; use sampled pairs instead"
        )
    X = dataset.features
    return GramMatrix(spec.from_sqdist(cdist(X, X, "sqeuclidean")), source=spec.family)


def approx_mse(mapper, spec: KernelSpec, dataset: Dataset, pairs=None,
               cap: int = GRAM_CAP, n_pairs: int = DEFAULT_N_PAIRS,
               rng: np.random.Generator | None = None) -> float:
    """Mean squared error between K(x_i, x_j) and Z(x_i)^T Z(x_j).

    Averages over ``pairs`` when given, over all N^2 pairs when N <= cap,
    and otherwise over ``n_pairs`` uniformly sampled pairs.
    """
    if mapper.d != dataset.d:
        raise ValueError(f"map expects d={mapper.d}, dataset has d={dataset.d}")
    X = dataset.features
    if pairs is None and dataset.n <= cap:
        Z = mapper.transform(X)
        K = spec.from_sqdist(cdist(X, X, "sqeuclidean"))
        return float(np.mean((K - Z @ Z.T) ** 2))
    if pairs is None:
        rng = rng if rng is not None else np.random.default_rng(0)
        ii, jj = rng.integers(0, dataset.n, size=(2, n_pairs))
    else:
        ii, jj = pairs_to_arrays(pairs)
    Zi = mapper.transform(X[ii])
    Zj = mapper.transform(X[jj])
    K = spec.from_sqdist(np.sum((X[ii] - X[jj]) ** 2, axis=1))
    return float(np.mean((K - np.sum(Zi * Zj, axis=1)) ** 2))
