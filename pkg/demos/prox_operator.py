"""The negative-infinity-norm prox on a few inputs, checked against enumeration.

Run:  python demos/prox_operator.py
"""

import numpy as np

from onmf_ncp.prox import prox_h_update, prox_neg_inf, prox_neg_inf_oracle, prox_objective

cases = [([1.0, 2.0], 0.5), ([-1.0, -2.0], 0.5), ([-0.4, -0.3], 0.5), ([1.0, 1.0], 0.2), ([0.3, -1.0, 0.8], 1.0)]
for y, c in cases:
    x, i = prox_neg_inf(y, c)
    xo, _ = prox_neg_inf_oracle(y, c)
    print(f"y={y!s:<18} c={c}: x*={np.round(x, 3)}, i*={i}, objective {prox_objective(x, y, c):+.4f} "
          f"(enumeration {prox_objective(xo, y, c):+.4f})")

# column-wise use inside the non-smooth H update
B = np.array([[0.2, -1.0, 0.5], [0.9, -2.0, 0.5]])
H, Z = prox_h_update(B, rho=0.4, t=2.0)
print("B =\n", B, "\nH =\n", H, "\nZ =\n", Z)
