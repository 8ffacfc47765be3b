"""Compact nonlinear feature maps for shift-invariant kernels.

Random Fourier features, maps optimised jointly with a linear SVM or
against the kernel MSE, and circulant projections evaluated with the FFT.
"""

from .data import (
    DataError,
    Dataset,
    PairSample,
    binarize,
    estimate_gamma,
    load_csv,
    load_libsvm,
    make_two_rings,
    sample_batch,
    sample_pairs,
    save_libsvm,
    standardize,
)
from .evaluation import BenchRecord, EvalReport, bench_projection, evaluate, evaluate_ovr, psd_check
from .kernels import GramMatrix, KernelSpec, approx_mse, gram_exact, kernel_eval, sample_phases, sample_spectral
from .maps import (
    CirculantFourierMap,
    DenseFourierMap,
    FftPlan,
    IdentityMap,
    circ_multiply,
    circulant_project,
    dense_project,
    init_random_circulant,
    init_random_dense,
    load_map,
    map_batch,
    save_map,
)
from .train import (
    LinearModel,
    TrainConfig,
    TrainTrace,
    grad_r,
    grad_theta,
    grad_theta_mse,
    grad_w,
    hinge_loss,
    pegasos_optimize_w,
    sgd_optimize_r,
    sgd_optimize_theta,
    train_circulant_cnm,
    train_cnm,
    train_kernel_approx,
    train_random_features,
)

__version__ = "0.1.0"
