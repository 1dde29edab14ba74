"""All three initial centroids inside the largest cluster.

K-means started there tends to split the big cluster and merge the two
small ones; the penalty method started from the same centroids recovers
all three.  The data are 2-D points with a constant third feature appended
(see ``bad_init_scenario``), which leaves K-means distances unchanged.

Run:  python demos/bad_initialization.py
"""

from onmf_ncp.baselines import KmeansConfig, kmeans
from onmf_ncp.datagen import bad_init_scenario
from onmf_ncp.metrics import clustering_accuracy
from onmf_ncp.model import FactorPair
from onmf_ncp.solvers import NcpConfig, ncp_solve

print("seed  K-means ACC  SNCP ACC  NSNCP ACC")
for seed in range(10):
    sc = bad_init_scenario(seed)
    km = kmeans(sc.X, KmeansConfig(K=3, init=sc.init_W))
    start = FactorPair(sc.init_W, sc.init_H)
    s = ncp_solve(sc.X, 3, NcpConfig(method="smooth"), init=start)
    n = ncp_solve(sc.X, 3, NcpConfig(method="nonsmooth"), init=start)
    print(f"{seed:4d}  {clustering_accuracy(km.labels, sc.truth):11.3f}  "
          f"{clustering_accuracy(s.labels, sc.truth):8.3f}  {clustering_accuracy(n.labels, sc.truth):9.3f}")
