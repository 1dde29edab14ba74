"""Cluster a small synthetic dataset with both penalties and K-means.

Run:  python demos/quickstart.py
"""

import numpy as np

from onmf_ncp.baselines import KmeansConfig, kmeans
from onmf_ncp.datagen import SynthConfig, generate_synthetic
from onmf_ncp.metrics import adjusted_rand_index, clustering_accuracy
from onmf_ncp.solvers import NcpConfig, ncp_solve, random_init

data = generate_synthetic(SynthConfig(M=200, N=150, K=4, cluster_sizes=(60, 40, 30, 20), snr_db=0.0, seed=1))
X, truth = data.X, data.truth
print(f"X is {X.shape[0]} x {X.shape[1]}, realized SNR {data.realized_snr_db:.2f} dB")

init = random_init(X, 4, seed=1)
for method in ("smooth", "nonsmooth"):
    res = ncp_solve(X, 4, NcpConfig(method=method, w_upper=float(X.max())), init=init)
    last = res.trace[-1]
    print(f"{method:>9}: {res.status} after {len(res.trace)} outer iterations, rho={res.rho:.3g}, "
          f"eps_orth={last.eps_orth:.1e}, ACC={clustering_accuracy(res.labels, truth):.3f}, "
          f"ARI={adjusted_rand_index(res.labels, truth):.3f}")
    # every column of H has a single non-zero: the factorization is a hard clustering
    print(f"           non-zeros per column of H: {np.unique((res.H > 0).sum(axis=0))}")

km = kmeans(X, KmeansConfig(K=4, seed=1))
print(f"   kmeans: ACC={clustering_accuracy(km.labels, truth):.3f}, inertia={km.inertia:.2f}")
