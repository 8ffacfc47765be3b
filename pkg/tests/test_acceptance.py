"""Acceptance suite: one test per criterion, each records a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v``; the per-criterion summary is
printed at the end of the session.
"""

import os
import warnings
from pathlib import Path

import numpy as np
import pytest
from scipy.integrate import quad

from cnmaps import (
    Dataset,
    FftPlan,
    KernelSpec,
    LinearModel,
    TrainConfig,
    approx_mse,
    bench_projection,
    binarize,
    circ_multiply,
    estimate_gamma,
    evaluate,
    evaluate_ovr,
    grad_r,
    grad_theta,
    grad_theta_mse,
    grad_w,
    init_random_circulant,
    init_random_dense,
    load_libsvm,
    make_two_rings,
    train_circulant_cnm,
    train_cnm,
    train_kernel_approx,
    train_random_features,
)
from cnmaps.cli import main
from cnmaps.train import mse_objective, objective

from .oracles import central_fd, circulant_by_loops, rel_err, shift_matrix

SEEDS = range(5)
RING_NOISE = 0.4
RING_DECAY = 0.2


def rings(seed):
    train = make_two_rings(1000, noise_sd=RING_NOISE, seed=100 + seed)
    test = make_two_rings(1000, noise_sd=RING_NOISE, seed=200 + seed)
    spec = KernelSpec(estimate_gamma(train, rng=np.random.default_rng(seed)))
    return train, test, spec


def test_criterion_01_fft_circulant_oracle(criterion):
    rng = np.random.default_rng(1)
    worst = 0.0
    for d in (3, 16, 128, 257):
        plan = FftPlan(d)
        for _ in range(50):
            r, x = rng.standard_normal((2, d))
            worst = max(worst, rel_err(circ_multiply(r, x, plan), circulant_by_loops(r) @ x))
    criterion(1, worst < 1e-10, f"FFT circulant vs explicit matrix, worst rel err {worst:.2e} (< 1e-10)")


def _instances(rng, make, n=20, max_tries=1000):
    """Draw n instances, rejecting any with a margin within 1e-6 of the hinge kink."""
    out = []
    for _ in range(max_tries):
        inst = make(rng)
        model, fmap, X, y = inst[:4]
        if model is None or not np.any(np.abs(1 - y * (fmap.transform(X) @ model.w)) < 1e-6):
            out.append(inst)
        if len(out) == n:
            return out
    raise RuntimeError("could not draw enough kink-free instances")


def test_criterion_02_gradients(criterion):
    rng = np.random.default_rng(2)
    errs = {}

    def small(rng):
        d, k, n = rng.integers(2, 6), rng.integers(2, 9), rng.integers(5, 30)
        X, y = rng.standard_normal((n, d)), rng.choice([-1.0, 1.0], n)
        return d, k, X, y

    def make_w(rng):
        d, k, X, y = small(rng)
        fmap = init_random_dense(KernelSpec(0.5), d, k, bool(rng.integers(2)), rng)
        return LinearModel(2 * rng.standard_normal(k), 0.01), fmap, X, y

    errs["grad_w"] = max(
        rel_err(grad_w(m, f, (X, y)), central_fd(lambda w: objective(LinearModel(w, m.lam), f, (X, y)), m.w))
        for m, f, X, y in _instances(rng, make_w))

    errs["grad_theta"] = max(
        rel_err(grad_theta(m, f, (X, y)),
                central_fd(lambda th: objective(m, f.__class__(th, f.phases), (X, y), False), f.theta))
        for m, f, X, y in _instances(rng, make_w))

    def make_mse(rng):
        d, k, X, _ = small(rng)
        fmap = init_random_dense(KernelSpec(0.5), d, k, bool(rng.integers(2)), rng)
        return None, fmap, X, None, rng.standard_normal(X.shape)

    spec = KernelSpec(0.5)
    errs["grad_theta_mse"] = max(
        rel_err(grad_theta_mse(f, spec, (A, B)),
                central_fd(lambda th: mse_objective(f.__class__(th, f.phases), spec, A, B), f.theta))
        for _, f, A, _, B in _instances(rng, make_mse))

    def make_r(rng):
        d, k, X, y = small(rng)
        fmap = init_random_circulant(KernelSpec(0.5), d, k, rng, bool(rng.integers(2)))
        return LinearModel(2 * rng.standard_normal(k), 0.01), fmap, X, y

    fd_r, shift_r = 0.0, 0.0
    for m, f, X, y in _instances(rng, make_r):
        G_all = np.array([grad_r(m, f, (X, y), block=b) for b in range(f.n_blocks)])
        for b in range(f.n_blocks):
            def loss(r, b=b):
                blocks = f.blocks.copy()
                blocks[b] = r
                return objective(m, f.with_blocks(blocks), (X, y), False)

            fd_r = max(fd_r, rel_err(G_all[b], central_fd(loss, f.blocks[b])))
        # shift-matrix form: sum over active samples of y * scale * S(Dx) (w_b o sin p_b) / n
        P = f.projections(X)
        active = y * (f.transform(X) @ m.w) < 1
        d, B = f.d, f.n_blocks
        wpad = np.zeros(B * d)
        wpad[:f.k] = m.w
        expect = np.zeros((B, d))
        for n in np.flatnonzero(active):
            sinp = np.zeros(B * d)
            sinp[:f.k] = np.sin(P[n])
            V = (wpad * sinp).reshape(B, d)
            S = shift_matrix(f.sign_flip * X[n])
            expect += y[n] * f.scale * (V @ S.T)
        expect /= len(y)
        shift_r = max(shift_r, rel_err(G_all, expect) if np.any(active) else np.abs(G_all).max())
    errs["grad_r"] = fd_r

    ok = all(e < 1e-4 for e in errs.values()) and shift_r < 1e-10
    detail = ", ".join(f"{k} {v:.1e}" for k, v in errs.items())
    criterion(2, ok, f"finite differences (< 1e-4): {detail}; grad_r vs shift-matrix form {shift_r:.1e} (< 1e-10)")


def test_criterion_03_rff_monte_carlo(criterion):
    rng = np.random.default_rng(3)
    ds = Dataset(rng.standard_normal((200, 16)), np.ones(200))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        spec = KernelSpec(estimate_gamma(ds, rng=np.random.default_rng(0)))
    means = []
    for k in (16, 64, 256, 1024):
        means.append(np.mean([approx_mse(init_random_dense(spec, 16, k, True, np.random.default_rng(s)), spec, ds)
                              for s in range(10)]))
    ok = all(a > b for a, b in zip(means, means[1:])) and means[-1] < 2e-3
    shown = ", ".join(f"{m:.2e}" for m in means)
    criterion(3, ok, f"mean MSE over k=16,64,256,1024: {shown} (strictly decreasing, last < 2e-3)")


def test_criterion_04_bochner_quadrature(criterion):
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(100):
        d = rng.integers(1, 8)
        theta, x, y = rng.standard_normal((3, d))
        a, c = theta @ x, theta @ y
        val, _ = quad(lambda b: 2 * np.cos(a + b) * np.cos(c + b), 0, 2 * np.pi, epsabs=1e-13, epsrel=1e-13)
        worst = max(worst, abs(val / (2 * np.pi) - np.cos(theta @ (x - y))))
    criterion(4, worst < 1e-6, f"quadrature over b vs cos(theta.(x-y)), worst abs err {worst:.1e} (< 1e-6)")


def test_criterion_05_compactness(criterion):
    cnm8, rff64, cnm16 = [], [], []
    for s in SEEDS:
        train, test, spec = rings(s)
        m, w, _ = train_cnm(train, TrainConfig(k=8, seed=s, theta_decay=RING_DECAY), spec)
        cnm8.append(evaluate(w, m, test).accuracy)
        m, w, _ = train_cnm(train, TrainConfig(k=16, seed=s, theta_decay=RING_DECAY), spec)
        cnm16.append(evaluate(w, m, test).accuracy)
        m, w, _ = train_random_features(train, TrainConfig(k=64, seed=s), spec, "dense", with_phases=True)
        rff64.append(evaluate(w, m, test).accuracy)
    a, b, c = np.mean(cnm8), np.mean(rff64), np.mean(cnm16)
    criterion(5, a >= b and c >= 0.95,
              f"two rings: CNM k=8 {a:.4f} >= RFFM k=64 {b:.4f}; CNM k=16 {c:.4f} >= 0.95")


def test_criterion_06_kernel_approx(criterion):
    wins, detail = {}, []
    for k in (16, 64):
        wins[k] = 0
        for s in SEEDS:
            train, _, spec = rings(s)
            _, trace = train_kernel_approx(train, TrainConfig(k=k, seed=s), spec, with_phases=True)
            wins[k] += trace.last.mse < trace[0].mse
        detail.append(f"k={k}: {wins[k]}/5")
    criterion(6, all(v >= 4 for v in wins.values()),
              f"optimized MSE below random init in {', '.join(detail)} seeds (need >= 4/5)")


def test_criterion_07_circulant_parity(criterion):
    dense, circ = [], []
    for s in SEEDS:
        train, _, spec = rings(s)
        k = train.d  # one full block
        dense.append(approx_mse(init_random_dense(spec, train.d, k, True, np.random.default_rng(s)), spec, train))
        circ.append(approx_mse(init_random_circulant(spec, train.d, k, np.random.default_rng(s), True), spec, train))
    a, b = np.mean(circ), np.mean(dense)
    gap = abs(a - b) / b
    criterion(7, gap <= 0.25, f"k=d=2: circulant MSE {a:.4f} vs dense {b:.4f}, relative gap {gap:.1%} (<= 25%)")


def test_criterion_08_speedup(criterion):
    recs = {r.family: r.median_seconds for r in bench_projection([8192], "k=d", reps=5)}
    ratio = recs["dense"] / recs["circulant"]
    criterion(8, recs["circulant"] <= recs["dense"] / 5,
              f"d=k=8192: circulant {recs['circulant'] * 1e3:.3f} ms, dense {recs['dense'] * 1e3:.3f} ms, "
              f"speedup {ratio:.1f}x (>= 5x)")


def test_criterion_09_optimized_circulant(criterion):
    wins, pairs = 0, []
    for s in SEEDS:
        train, test, spec = rings(s)
        cfg = TrainConfig(k=16, seed=s, theta_decay=RING_DECAY)
        m, w, _ = train_circulant_cnm(train, cfg, spec)
        opt = evaluate(w, m, test).accuracy
        m, w, _ = train_random_features(train, cfg, spec, "circulant", with_phases=False)
        rnd = evaluate(w, m, test).accuracy
        wins += opt >= rnd
        pairs.append(f"{opt:.3f}/{rnd:.3f}")
    criterion(9, wins >= 4, f"k=16 optimized >= random circulant in {wins}/5 seeds ({', '.join(pairs)})")


USPS_DIR = os.environ.get("CNMAPS_USPS_DIR")


def _ovr(train, test, cfg, spec, trainer):
    models, maps = {}, {}
    for c in np.unique(train.labels):
        c = int(c)
        maps[c], models[c], _ = trainer(binarize(train, c), cfg, spec)
    return evaluate_ovr(models, maps, test).accuracy


@pytest.mark.slow
def test_criterion_10_usps(criterion):
    if not USPS_DIR:
        criterion.skip(10, "USPS files absent; set CNMAPS_USPS_DIR to a directory holding usps and usps.t")
    train = load_libsvm(Path(USPS_DIR) / "usps")
    test = load_libsvm(Path(USPS_DIR) / "usps.t")
    opt, rnd = [], []
    for s in SEEDS:
        spec = KernelSpec(estimate_gamma(train, rng=np.random.default_rng(s)))
        cfg = TrainConfig(k=256, seed=s)
        opt.append(_ovr(train, test, cfg, spec, train_circulant_cnm))
        rnd.append(_ovr(train, test, cfg, spec,
                        lambda ds, c, sp: train_random_features(ds, c, sp, "circulant", with_phases=False)))
    a, b = 100 * np.mean(opt), 100 * np.mean(rnd)
    criterion(10, abs(a - 91.96) <= 2.0 and abs(b - 89.40) <= 2.0,
              f"USPS k=256: circulant-optimized {a:.2f} (91.96 +- 2), circulant-random {b:.2f} (89.40 +- 2)")


def test_criterion_11_determinism(criterion, tmp_path):
    common = ["--set", "n_per_class=200", "--set", "T=3", "--set", "noise_sd=0.4", "--set", "seeds=0,1"]
    runs = {
        "train": common + ["--set", "family=circulant-optimized"],
        "sweep": common + ["--set", "families=dense-rffm,cnm,cnm-kerapp", "--set", "k_list=8,16"],
    }
    same, checked = True, 0
    for cmd, args in runs.items():
        outs = []
        for rep in range(2):
            out = tmp_path / f"{cmd}{rep}"
            assert main([cmd, *args, "--set", f"out_dir={out}"]) == 0
            outs.append(out)
        for f in sorted(outs[0].glob("*.csv")):
            checked += 1
            same &= f.read_bytes() == (outs[1] / f.name).read_bytes()
    criterion(11, same and checked > 0, f"{checked} CSVs from repeated train/sweep runs byte-identical")
