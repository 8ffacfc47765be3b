"""Cosine feature maps: dense projections and FFT-backed circulant projections.

Both families compute Z(x) = sqrt(2/k) * cos(P x + b) where P is either a
dense k x d matrix (stored transposed as ``theta``, d x k) or a stack of
circulant blocks circ(r_1), ..., circ(r_B) applied after a shared random
sign flip, truncated to the first k rows.  The phase vector b is optional.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path

import numpy as np

from .kernels import KernelSpec, sample_phases, sample_spectral

MAP_FORMAT = "cnmaps.map"
MAP_FORMAT_VERSION = 1


class NumericalError(RuntimeError):
    pass


class FftPlan:
    """DFT of a fixed length.

    Backed by numpy's pocketfft, which handles every length exactly
    (mixed radix with a Bluestein fallback for large prime factors); inputs
    are never zero-padded.
    """

    def __init__(self, length: int):
        if length < 1:
            raise ValueError(f"FFT length must be >= 1, got {length}")
        self.length = int(length)

    def _check(self, a):
        if a.shape[-1] != self.length:
            raise ValueError(f"expected trailing length {self.length}, got {a.shape[-1]}")

    def forward(self, x):
        x = np.asarray(x)
        self._check(x)
        return np.fft.fft(x, axis=-1)

    def inverse(self, X):
        X = np.asarray(X)
        self._check(X)
        return np.fft.ifft(X, axis=-1)

    def rforward(self, x):
        x = np.asarray(x, dtype=np.float64)
        self._check(x)
        return np.fft.rfft(x, axis=-1)

    def rinverse(self, X):
        return np.fft.irfft(X, n=self.length, axis=-1)

    def __repr__(self):
        return f"FftPlan(length={self.length})"


def circulant_matrix(r) -> np.ndarray:
    """Explicit circ(r): entry (i, j) is r[(i - j) mod d]."""
    r = np.asarray(r, dtype=np.float64)
    d = len(r)
    i, j = np.indices((d, d))
    return r[(i - j) % d]


def _real_part(v, scale):
    resid = np.max(np.abs(v.imag)) if v.size else 0.0
    if resid > 1e-9 * scale:
        raise NumericalError(f"imaginary residue {resid:.3e} after inverse FFT")
    return v.real


def circ_multiply(r, x, plan: FftPlan | None = None) -> np.ndarray:
    """Cyclic convolution r * x, i.e. circ(r) @ x, through the DFT."""
    r = np.asarray(r, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if r.shape != x.shape or r.ndim != 1:
        raise ValueError(f"length mismatch: r {r.shape}, x {x.shape}")
    plan = plan or FftPlan(len(x))
    if plan.length != len(x):
        raise ValueError(f"plan length {plan.length} does not match input length {len(x)}")
    v = plan.inverse(plan.forward(r) * plan.forward(x))
    scale = max(np.linalg.norm(r) * np.linalg.norm(x), np.finfo(float).tiny)
    return _real_part(v, scale)


# ---------------------------------------------------------------------------
# dense map


@dataclass
class DenseFourierMap:
    theta: np.ndarray                 # d x k, column i is theta_i
    phases: np.ndarray | None = None
    gamma: float | None = None
    seed: int | None = None

    family = "dense"

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64)
        if self.theta.ndim != 2 or self.theta.shape[1] < 1:
            raise ValueError(f"theta must be d x k with k >= 1, got {self.theta.shape}")
        if self.phases is not None:
            self.phases = np.asarray(self.phases, dtype=np.float64)
            if self.phases.shape != (self.k,):
                raise ValueError(f"phases must have length {self.k}")

    @property
    def d(self) -> int:
        return self.theta.shape[0]

    @property
    def k(self) -> int:
        return self.theta.shape[1]

    @property
    def scale(self) -> float:
        return np.sqrt(2.0 / self.k)

    def projections(self, X) -> np.ndarray:
        """Pre-activation Theta^T x + b for each row of X."""
        P = np.asarray(X, dtype=np.float64) @ self.theta
        if self.phases is not None:
            P = P + self.phases
        return P

    def project(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.d,):
            raise ValueError(f"expected a {self.d}-vector, got shape {x.shape}")
        return self.scale * np.cos(self.projections(x))

    def transform(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.d:
            raise ValueError(f"expected {self.d} columns, got {X.shape[1]}")
        return self.scale * np.cos(self.projections(X))


class IdentityMap:
    """Raw features as the "map"; gives a plain linear SVM through the same trainers."""

    family = "identity"

    def __init__(self, d: int):
        self.d = self.k = int(d)

    def transform(self, X) -> np.ndarray:
        return np.atleast_2d(np.asarray(X, dtype=np.float64))

    def project(self, x) -> np.ndarray:
        return np.asarray(x, dtype=np.float64)


def dense_project(fmap: DenseFourierMap, x) -> np.ndarray:
    return fmap.project(x)


# ---------------------------------------------------------------------------
# circulant map


@dataclass
class CirculantFourierMap:
    blocks: np.ndarray                # B x d generator vectors
    sign_flip: np.ndarray             # length d, entries +-1
    k: int
    phases: np.ndarray | None = None
    gamma: float | None = None
    seed: int | None = None

    family = "circulant"

    def __post_init__(self):
        self.blocks = np.atleast_2d(np.asarray(self.blocks, dtype=np.float64))
        self.sign_flip = np.asarray(self.sign_flip, dtype=np.float64)
        self.k = int(self.k)
        B, d = self.blocks.shape
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if B != -(-self.k // d):
            raise ValueError(f"k={self.k}, d={d} needs {-(-self.k // d)} blocks, got {B}")
        if self.sign_flip.shape != (d,) or not np.all(np.abs(self.sign_flip) == 1):
            raise ValueError("sign_flip must be a length-d vector of +-1")
        if self.phases is not None:
            self.phases = np.asarray(self.phases, dtype=np.float64)
            if self.phases.shape != (self.k,):
                raise ValueError(f"phases must have length {self.k}")

    @property
    def d(self) -> int:
        return self.blocks.shape[1]

    @property
    def n_blocks(self) -> int:
        return self.blocks.shape[0]

    @property
    def scale(self) -> float:
        return np.sqrt(2.0 / self.k)

    @cached_property
    def plan(self) -> FftPlan:
        return FftPlan(self.d)

    @cached_property
    def spectra(self) -> np.ndarray:
        return self.plan.forward(self.blocks)

    @cached_property
    def rspectra(self) -> np.ndarray:
        return self.plan.rforward(self.blocks)

    def prepare(self) -> "CirculantFourierMap":
        """Precompute block spectra so projection timings exclude them."""
        self.spectra, self.rspectra  # noqa: B018
        return self

    def projections(self, X) -> np.ndarray:
        """Pre-activation (R D x)[:k] + b for each row of X (real-FFT batch path)."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        Yhat = self.plan.rforward(X * self.sign_flip)                    # n x (d//2+1)
        V = self.plan.rinverse(Yhat[:, None, :] * self.rspectra[None])  # n x B x d
        P = V.reshape(X.shape[0], -1)[:, : self.k]
        if self.phases is not None:
            P = P + self.phases
        return P

    def project(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.d,):
            raise ValueError(f"expected a {self.d}-vector, got shape {x.shape}")
        y = self.sign_flip * x
        yhat = self.plan.forward(y)                   # computed once, reused per block
        v = self.plan.inverse(self.spectra * yhat)    # B x d
        scale = max(np.linalg.norm(self.blocks) * np.linalg.norm(x), np.finfo(float).tiny)
        p = _real_part(v, scale).reshape(-1)[: self.k]
        if self.phases is not None:
            p = p + self.phases
        return self.scale * np.cos(p)

    def transform(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.d:
            raise ValueError(f"expected {self.d} columns, got {X.shape[1]}")
        return self.scale * np.cos(self.projections(X))

    def to_dense(self) -> DenseFourierMap:
        """The equivalent dense map, Theta = (stacked circ(r_b) @ diag(sign_flip))[:k]^T."""
        R = np.vstack([circulant_matrix(r) for r in self.blocks])[: self.k]
        return DenseFourierMap((R * self.sign_flip).T, self.phases, self.gamma, self.seed)

    def with_blocks(self, blocks) -> "CirculantFourierMap":
        return replace(self, blocks=np.array(blocks, dtype=np.float64))


def circulant_project(fmap: CirculantFourierMap, x) -> np.ndarray:
    return fmap.project(x)


def map_batch(fmap, dataset, indices) -> np.ndarray:
    return fmap.transform(dataset.features[np.asarray(indices, dtype=np.int64)])


# ---------------------------------------------------------------------------
# random initialisation


def init_random_dense(spec: KernelSpec, d: int, k: int, with_phases: bool,
                      rng: np.random.Generator, seed: int | None = None) -> DenseFourierMap:
    theta = sample_spectral(spec, d, k, rng)
    phases = sample_phases(k, rng) if with_phases else None
    return DenseFourierMap(theta, phases, spec.gamma, seed)


def init_random_circulant(spec: KernelSpec, d: int, k: int, rng: np.random.Generator,
                          with_phases: bool = False, seed: int | None = None) -> CirculantFourierMap:
    n_blocks = -(-k // d)
    blocks = sample_spectral(spec, n_blocks, d, rng)
    sign_flip = rng.choice(np.array([-1.0, 1.0]), size=d)
    phases = sample_phases(k, rng) if with_phases else None
    return CirculantFourierMap(blocks, sign_flip, k, phases, spec.gamma, seed)


# ---------------------------------------------------------------------------
# serialization


def _arr(a):
    return None if a is None else {"shape": list(a.shape), "data": a.ravel().tolist()}


def _unarr(obj):
    return None if obj is None else np.array(obj["data"], dtype=np.float64).reshape(obj["shape"])


def map_to_dict(fmap) -> dict:
    out = {
        "format": MAP_FORMAT,
        "version": MAP_FORMAT_VERSION,
        "family": fmap.family,
        "d": fmap.d,
        "k": fmap.k,
        "gamma": fmap.gamma,
        "seed": fmap.seed,
        "phases": _arr(fmap.phases),
    }
    if fmap.family == "dense":
        out["theta"] = _arr(fmap.theta)
    else:
        out["blocks"] = _arr(fmap.blocks)
        out["sign_flip"] = _arr(fmap.sign_flip)
    return out


def map_from_dict(obj: dict):
    if obj.get("format") != MAP_FORMAT:
        raise ValueError(f"not a serialized map (format={obj.get('format')!r})")
    if obj.get("version") != MAP_FORMAT_VERSION:
        raise ValueError(f"unsupported map format version {obj.get('version')}")
    common = dict(phases=_unarr(obj["phases"]), gamma=obj["gamma"], seed=obj["seed"])
    if obj["family"] == "dense":
        fmap = DenseFourierMap(_unarr(obj["theta"]), **common)
    elif obj["family"] == "circulant":
        fmap = CirculantFourierMap(_unarr(obj["blocks"]), _unarr(obj["sign_flip"]), obj["k"], **common)
    else:
        raise ValueError(f"unknown map family {obj['family']!r}")
    if (fmap.d, fmap.k) != (obj["d"], obj["k"]):
        raise ValueError("stored dimensions disagree with parameter arrays")
    return fmap


def save_map(fmap, path) -> None:
    # json writes floats with repr(), which round-trips float64 exactly
    Path(path).write_text(json.dumps(map_to_dict(fmap)))


def load_map(path):
    return map_from_dict(json.loads(Path(path).read_text()))
