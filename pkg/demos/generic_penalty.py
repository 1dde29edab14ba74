"""Penalties ||h||_p^v - ||h||_q^v beyond the two special cases, solved with Armijo steps.

Run:  python demos/generic_penalty.py
"""

from onmf_ncp.datagen import SynthConfig, generate_synthetic
from onmf_ncp.metrics import clustering_accuracy
from onmf_ncp.solvers import NcpConfig, ncp_solve, random_init

data = generate_synthetic(SynthConfig(M=100, N=90, K=3, cluster_sizes=(40, 30, 20), snr_db=3.0, seed=2))
init = random_init(data.X, 3, seed=2)
for p, q, v in ((1, 2, 2), (1, 3, 3), (1, 3, 4), (1.5, 2.5, 3)):
    cfg = NcpConfig(method="generic", p=p, q=q, v=v, w_upper=float(data.X.max()))
    res = ncp_solve(data.X, 3, cfg, init=init)
    print(f"(p, q, v) = ({p}, {q}, {v}): {res.status} in {len(res.trace)} outer iterations, "
          f"eps_orth {res.trace[-1].eps_orth:.1e}, ACC {clustering_accuracy(res.labels, data.truth):.3f}")
