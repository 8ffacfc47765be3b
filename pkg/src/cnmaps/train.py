"""Alternating optimisation of cosine feature maps and a linear SVM.

Objective for classification (per mini-batch A):

    lam/2 ||w||^2 + 1/|A| sum_A max(0, 1 - y w^T Z(x))

with Z(x) = sqrt(2/k) cos(P x + b).  The w-step is Pegasos (step 1/(lam t),
projection onto the ball of radius 1/sqrt(lam)); the map step is plain SGD
with step eta0/(lam t).  All gradients below are exact (sub)derivatives of
the objective as implemented, including the sqrt(2/k) factor.  A sample
belongs to the active set A+ only when its hinge loss is strictly positive.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .data import Dataset, sample_batch
from .evaluation import accuracy, decision_function
from .kernels import KernelSpec, approx_mse
from .maps import CirculantFourierMap, DenseFourierMap, init_random_circulant, init_random_dense


@dataclass
class LinearModel:
    w: np.ndarray
    lam: float

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")

    @classmethod
    def zeros(cls, k: int, lam: float) -> "LinearModel":
        return cls(np.zeros(k), lam)

    @property
    def radius(self) -> float:
        return 1.0 / math.sqrt(self.lam)


@dataclass
class TrainConfig:
    k: int = 8
    T: int = 10
    T1: int = 100
    T2: int = 100
    batch_size: int = 500
    lam: float = 1e-4
    seed: int = 0
    theta_decay: float = 0.0
    eta0: float | None = None         # Theta/r step scale; None means eta0 = lam
    continue_steps: bool = True       # step counter t carries over between alternations
    mse_eta0: float = 10.0            # kernel-approximation step scale, step = mse_eta0 / sqrt(t)
    n_val_pairs: int = 20_000

    def __post_init__(self):
        for name in ("k", "T1", "T2", "batch_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.T < 0:
            raise ValueError(f"T must be >= 0, got {self.T}")
        if not self.lam > 0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if self.theta_decay < 0:
            raise ValueError("theta_decay must be nonnegative")
        if self.eta0 is None:
            self.eta0 = self.lam
        if not self.eta0 > 0 or not self.mse_eta0 > 0:
            raise ValueError("step scales must be positive")


@dataclass
class TraceRecord:
    iter: int
    objective: float
    train_acc: float = math.nan
    test_acc: float = math.nan
    mse: float = math.nan


@dataclass
class TrainTrace:
    records: list = field(default_factory=list)

    COLUMNS = ("iter", "objective", "train_acc", "test_acc", "mse")

    def append(self, rec: TraceRecord):
        if self.records and rec.iter <= self.records[-1].iter:
            raise ValueError("trace iterations must be strictly increasing")
        self.records.append(rec)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def last(self) -> TraceRecord:
        return self.records[-1]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.COLUMNS)
            for rec in self.records:
                writer.writerow([rec.iter] + [repr(float(getattr(rec, c))) for c in self.COLUMNS[1:]])

    @classmethod
    def from_csv(cls, path) -> "TrainTrace":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        trace = cls()
        for row in rows:
            trace.append(TraceRecord(int(row["iter"]), *(float(row[c]) for c in cls.COLUMNS[1:])))
        return trace


def _xy(batch):
    if isinstance(batch, Dataset):
        return batch.features, batch.labels.astype(np.float64)
    X, y = batch
    return np.atleast_2d(np.asarray(X, dtype=np.float64)), np.atleast_1d(np.asarray(y, dtype=np.float64))


def hinge_loss(y, score):
    return np.maximum(0.0, 1.0 - np.asarray(y) * np.asarray(score))


def objective(model: LinearModel, mapper, batch, regularize: bool = True) -> float:
    X, y = _xy(batch)
    loss = float(np.mean(hinge_loss(y, mapper.transform(X) @ model.w)))
    if regularize:
        loss += 0.5 * model.lam * float(model.w @ model.w)
    return loss


# ---------------------------------------------------------------------------
# w-step


def grad_w(model: LinearModel, mapper, batch) -> np.ndarray:
    X, y = _xy(batch)
    Z = mapper.transform(X)
    active = y * (Z @ model.w) < 1.0
    return model.lam * model.w - (y[active] @ Z[active]) / len(y)


def pegasos_step(model: LinearModel, mapper, batch, t: int) -> LinearModel:
    w = model.w - grad_w(model, mapper, batch) / (model.lam * t)
    norm = np.linalg.norm(w)
    if norm > model.radius:
        w *= model.radius / norm
    return LinearModel(w, model.lam)


def pegasos_optimize_w(model: LinearModel, mapper, dataset: Dataset, cfg: TrainConfig,
                       rng: np.random.Generator, t0: int = 0) -> LinearModel:
    """Pegasos: cfg.T1 projected subgradient steps, t = t0+1 .. t0+T1."""
    if not model.lam > 0:
        raise ValueError(f"lambda must be positive, got {model.lam}")
    M = min(cfg.batch_size, dataset.n)
    for t in range(t0 + 1, t0 + cfg.T1 + 1):
        idx = sample_batch(dataset, M, rng)
        model = pegasos_step(model, mapper, (dataset.features[idx], dataset.labels[idx]), t)
    return model


# ---------------------------------------------------------------------------
# Theta-step (dense map)


def grad_theta(model: LinearModel, fmap: DenseFourierMap, batch, theta_decay: float = 0.0) -> np.ndarray:
    """d x k gradient of the batch hinge loss (w fixed) with respect to Theta."""
    X, y = _xy(batch)
    P = fmap.projections(X)
    scores = fmap.scale * np.cos(P) @ model.w
    active = y * scores < 1.0
    G = X[active].T @ (y[active, None] * np.sin(P[active]))
    G *= model.w * (fmap.scale / len(y))
    if theta_decay:
        G += theta_decay * fmap.theta
    return G


def sgd_optimize_theta(model: LinearModel, fmap: DenseFourierMap, dataset: Dataset, cfg: TrainConfig,
                       rng: np.random.Generator, t0: int = 0) -> DenseFourierMap:
    M = min(cfg.batch_size, dataset.n)
    theta = fmap.theta.copy()
    for t in range(t0 + 1, t0 + cfg.T2 + 1):
        idx = sample_batch(dataset, M, rng)
        cur = replace(fmap, theta=theta)
        g = grad_theta(model, cur, (dataset.features[idx], dataset.labels[idx]), cfg.theta_decay)
        theta = theta - (cfg.eta0 / (model.lam * t)) * g
    return replace(fmap, theta=theta)


# ---------------------------------------------------------------------------
# r-step (circulant map)


def _shift_rev(Y):
    """Row-wise s_{->1}(rev(y)) = (y_0, y_{d-1}, ..., y_1)."""
    return np.roll(Y[:, ::-1], 1, axis=1)


def grad_r_all(model: LinearModel, fmap: CirculantFourierMap, batch, theta_decay: float = 0.0) -> np.ndarray:
    """B x d gradient of the batch hinge loss with respect to every generator vector.

    For block b and an active sample, d(w^T Z)/dr_b = -scale * u (*) (w_b o sin(p_b)),
    where u = s_{->1}(rev(D x)), p_b = r_b (*) D x (+ phases) and w_b is w's slice for
    the block, zero-padded past k.  Each convolution is an FFT product.
    """
    X, y = _xy(batch)
    B, d, k = fmap.n_blocks, fmap.d, fmap.k
    P = fmap.projections(X)
    scores = fmap.scale * np.cos(P) @ model.w
    active = y * scores < 1.0
    G = np.zeros((B, d))
    if np.any(active):
        Ya = X[active] * fmap.sign_flip
        wpad = np.zeros(B * d)
        wpad[:k] = model.w
        S = np.zeros((Ya.shape[0], B * d))
        S[:, :k] = np.sin(P[active])
        V = S.reshape(-1, B, d) * wpad.reshape(B, d)                       # n x B x d
        plan = fmap.plan
        Uhat = plan.rforward(_shift_rev(Ya))                               # n x (d//2+1)
        conv = plan.rinverse(Uhat[:, None, :] * plan.rforward(V))          # n x B x d
        G = np.einsum("n,nbd->bd", y[active], conv) * (fmap.scale / len(y))
    if theta_decay:
        G = G + theta_decay * fmap.blocks
    return G


def grad_r(model: LinearModel, fmap: CirculantFourierMap, batch, block: int = 0,
           theta_decay: float = 0.0) -> np.ndarray:
    return grad_r_all(model, fmap, batch, theta_decay)[block]


def sgd_optimize_r(model: LinearModel, fmap: CirculantFourierMap, dataset: Dataset, cfg: TrainConfig,
                   rng: np.random.Generator, t0: int = 0) -> CirculantFourierMap:
    M = min(cfg.batch_size, dataset.n)
    for t in range(t0 + 1, t0 + cfg.T2 + 1):
        idx = sample_batch(dataset, M, rng)
        g = grad_r_all(model, fmap, (dataset.features[idx], dataset.labels[idx]), cfg.theta_decay)
        fmap = fmap.with_blocks(fmap.blocks - (cfg.eta0 / (model.lam * t)) * g)
    return fmap


# ---------------------------------------------------------------------------
# alternating drivers


def _record(trace, it, model, fmap, dataset, test):
    Xtr, ytr = dataset.features, dataset.labels
    obj = objective(model, fmap, (Xtr, ytr))
    train_acc = accuracy(decision_function(model.w, fmap, Xtr), ytr)
    test_acc = math.nan
    if test is not None:
        test_acc = accuracy(decision_function(model.w, fmap, test.features), test.labels)
    trace.append(TraceRecord(it, obj, train_acc, test_acc))


def _require_binary(dataset: Dataset):
    if not dataset.is_binary():
        raise ValueError("trainers need labels in {-1, +1}; binarize or use one-vs-rest")


def alternate(dataset: Dataset, cfg: TrainConfig, fmap, map_step=None, test: Dataset | None = None):
    """Run cfg.T alternations of (T1 Pegasos steps, T2 map steps).

    ``map_step`` is sgd_optimize_theta / sgd_optimize_r, or None to keep the
    map fixed (the randomized-feature baselines).  Returns (map, model, trace).
    """
    _require_binary(dataset)
    rng = np.random.default_rng(cfg.seed + 1)  # seed stream for batches, distinct from init
    model = LinearModel.zeros(fmap.k, cfg.lam)
    trace = TrainTrace()
    t_w = t_map = 0
    for it in range(1, cfg.T + 1):
        if not cfg.continue_steps:
            t_w = t_map = 0
        model = pegasos_optimize_w(model, fmap, dataset, cfg, rng, t_w)
        t_w += cfg.T1
        if map_step is not None:
            fmap = map_step(model, fmap, dataset, cfg, rng, t_map)
            t_map += cfg.T2
        _record(trace, it, model, fmap, dataset, test)
    return fmap, model, trace


def train_cnm(dataset: Dataset, cfg: TrainConfig, spec: KernelSpec, test: Dataset | None = None,
              with_phases: bool = False):
    """Compact nonlinear map: RFF initialisation, then alternate Pegasos and Theta-SGD."""
    init_rng = np.random.default_rng(cfg.seed)
    fmap = init_random_dense(spec, dataset.d, cfg.k, with_phases, init_rng, seed=cfg.seed)
    return alternate(dataset, cfg, fmap, sgd_optimize_theta, test)


def train_circulant_cnm(dataset: Dataset, cfg: TrainConfig, spec: KernelSpec, test: Dataset | None = None,
                        with_phases: bool = False):
    init_rng = np.random.default_rng(cfg.seed)
    fmap = init_random_circulant(spec, dataset.d, cfg.k, init_rng, with_phases, seed=cfg.seed)
    return alternate(dataset, cfg, fmap, sgd_optimize_r, test)


def train_random_features(dataset: Dataset, cfg: TrainConfig, spec: KernelSpec, family: str = "dense",
                          test: Dataset | None = None, with_phases: bool = True):
    """Baseline: a randomly drawn map (dense RFFM or circulant) with only w trained."""
    init_rng = np.random.default_rng(cfg.seed)
    k = cfg.k
    if family == "dense":
        fmap = init_random_dense(spec, dataset.d, k, with_phases, init_rng, seed=cfg.seed)
    elif family == "circulant":
        fmap = init_random_circulant(spec, dataset.d, k, init_rng, with_phases, seed=cfg.seed)
    else:
        raise ValueError(f"unknown map family {family!r}")
    return alternate(dataset, cfg, fmap, None, test)


# ---------------------------------------------------------------------------
# kernel-approximation objective


def mse_objective(fmap: DenseFourierMap, spec: KernelSpec, A, B) -> float:
    """Mean over pairs (a_n, b_n) of (K(a, b) - Z(a)^T Z(b))^2."""
    K = spec.from_sqdist(np.sum((A - B) ** 2, axis=1))
    return float(np.mean((K - np.sum(fmap.transform(A) * fmap.transform(B), axis=1)) ** 2))


def grad_theta_mse(fmap: DenseFourierMap, spec: KernelSpec, pair_batch) -> np.ndarray:
    """Exact d x k gradient of ``mse_objective`` with respect to Theta.

    Both terms of the product rule are kept:
    d/dtheta_i [cos(p_i(a)) cos(p_i(b))] = -sin(p_i(a)) cos(p_i(b)) a - cos(p_i(a)) sin(p_i(b)) b.
    """
    A, B = (np.atleast_2d(np.asarray(m, dtype=np.float64)) for m in pair_batch)
    if len(A) == 0:
        raise ValueError("empty pair batch")
    Pa, Pb = fmap.projections(A), fmap.projections(B)
    ca, sa, cb, sb = np.cos(Pa), np.sin(Pa), np.cos(Pb), np.sin(Pb)
    s2 = fmap.scale**2
    resid = spec.from_sqdist(np.sum((A - B) ** 2, axis=1)) - s2 * np.sum(ca * cb, axis=1)
    G = A.T @ (resid[:, None] * sa * cb) + B.T @ (resid[:, None] * ca * sb)
    return (2.0 * s2 / len(A)) * G


def train_kernel_approx(dataset: Dataset, cfg: TrainConfig, spec: KernelSpec, with_phases: bool = True,
                        train_pairs=None, val_pairs=None):
    """Minimise the kernel MSE over Theta by SGD on sampled pair batches.

    Phases (when used) stay at their random draw; only Theta moves.  The trace
    records the MSE on a frozen validation pair set after every alternation
    of cfg.T2 steps; record 0 is the random-feature initialisation.
    """
    init_rng = np.random.default_rng(cfg.seed)
    fmap = init_random_dense(spec, dataset.d, cfg.k, with_phases, init_rng, seed=cfg.seed)
    rng = np.random.default_rng(cfg.seed + 1)
    if train_pairs is not None:
        ti, tj = (np.asarray(a, dtype=np.int64) for a in train_pairs)
        if len(ti) == 0:
            raise ValueError("no training pairs")
    if val_pairs is None:
        val_rng = np.random.default_rng(cfg.seed + 2)
        val_pairs = val_rng.integers(0, dataset.n, size=(2, cfg.n_val_pairs))
    vi, vj = (np.asarray(a, dtype=np.int64) for a in val_pairs)
    X = dataset.features

    def val_mse(m):
        return approx_mse(m, spec, dataset, pairs=(vi, vj))

    trace = TrainTrace()
    v = val_mse(fmap)
    trace.append(TraceRecord(0, v, mse=v))
    theta = fmap.theta.copy()
    t = 0
    for it in range(1, cfg.T + 1):
        for _ in range(cfg.T2):
            t += 1
            if train_pairs is None:
                ii, jj = rng.integers(0, dataset.n, size=(2, cfg.batch_size))
            else:
                sel = rng.integers(0, len(ti), size=cfg.batch_size)
                ii, jj = ti[sel], tj[sel]
            cur = replace(fmap, theta=theta)
            g = grad_theta_mse(cur, spec, (X[ii], X[jj]))
            if cfg.theta_decay:
                g = g + cfg.theta_decay * theta
            theta = theta - (cfg.mse_eta0 / math.sqrt(t)) * g
        fmap = replace(fmap, theta=theta)
        v = val_mse(fmap)
        trace.append(TraceRecord(it, v, mse=v))
    return fmap, trace


def save_model(model: LinearModel, path) -> None:
    with open(path, "w") as fh:
        json.dump({"format": "cnmaps.model", "version": 1, "lam": model.lam, "w": model.w.tolist()}, fh)


def load_model(path) -> LinearModel:
    with open(path) as fh:
        obj = json.load(fh)
    if obj.get("format") != "cnmaps.model":
        raise ValueError(f"{path}: not a serialized linear model")
    return LinearModel(np.array(obj["w"], dtype=np.float64), obj["lam"])
