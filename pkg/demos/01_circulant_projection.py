"""
Circulant projections through the FFT
=====================================

A circulant matrix is fixed by its first column, and multiplying by it is a
cyclic convolution.  This script checks that against the explicit matrix and
times a dense map against a circulant one.
"""

import numpy as np

from cnmaps import KernelSpec, bench_projection, circ_multiply, init_random_circulant
from cnmaps.maps import circulant_matrix

rng = np.random.default_rng(0)

# a shift generator moves every entry down by one place
print(circ_multiply(np.array([0.0, 1.0, 0.0, 0.0]), np.array([1.0, 2.0, 3.0, 4.0])))

# FFT product vs the explicit d x d matrix
d = 257
r, x = rng.standard_normal((2, d))
err = np.linalg.norm(circ_multiply(r, x) - circulant_matrix(r) @ x) / np.linalg.norm(circulant_matrix(r) @ x)
print(f"d={d}: relative difference {err:.1e}")

# with k > d the map stacks ceil(k/d) circulant blocks and keeps the first k rows
fmap = init_random_circulant(KernelSpec(1.0), d=5, k=13, rng=rng)
print("blocks:", fmap.blocks.shape, "features:", fmap.project(rng.standard_normal(5)).shape)

# the circulant map stores O(d) numbers and projects in O(d log d)
for rec in bench_projection([512, 2048, 8192], reps=5):
    print(f"d=k={rec.d:<5d} {rec.family:>9s} {rec.median_seconds * 1e3:8.3f} ms")
