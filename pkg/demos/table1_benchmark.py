"""Benchmark-scale comparison (2000 x 1000, 10 clusters, 5% outliers).

Every trial draws a dataset and one random starting point shared by the two
penalty methods; K-means uses its own seeding.  Ten seeds per SNR take a few
minutes per method on one core.

Run:  python demos/table1_benchmark.py [n_seeds]
"""

import sys
import time

import numpy as np

from onmf_ncp.baselines import KmeansConfig, kmeans
from onmf_ncp.datagen import SynthConfig, generate_synthetic
from onmf_ncp.metrics import clustering_accuracy
from onmf_ncp.solvers import NcpConfig, ncp_solve, random_init

n_seeds = int(sys.argv[1]) if len(sys.argv) > 1 else 3
for snr in (-3.0, 1.0):
    accs = {"SNCP": [], "NSNCP": [], "KM": [], "KM++": []}
    t0 = time.perf_counter()
    for seed in range(n_seeds):
        data = generate_synthetic(SynthConfig(snr_db=snr, seed=seed))
        init = random_init(data.X, 10, seed)
        for name, method in (("SNCP", "smooth"), ("NSNCP", "nonsmooth")):
            res = ncp_solve(data.X, 10, NcpConfig(method=method, seed=seed), init=init)
            accs[name].append(clustering_accuracy(res.labels, data.truth))
        for name, how in (("KM", "random"), ("KM++", "plusplus")):
            km = kmeans(data.X, KmeansConfig(K=10, init=how, seed=seed))
            accs[name].append(clustering_accuracy(km.labels, data.truth))
    cells = "  ".join(f"{k} {np.mean(v):.3f}" for k, v in accs.items())
    print(f"SNR {snr:+.0f} dB over {n_seeds} seeds: {cells}   ({time.perf_counter() - t0:.0f} s)")
