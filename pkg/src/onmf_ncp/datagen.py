"""Synthetic clustering data from the linear model ``X = W H + V``."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import inner

# cluster sizes of the 2000 x 1000, K=10 benchmark
PAPER_CLUSTER_SIZES = (117, 62, 36, 124, 15, 24, 119, 43, 122, 338)
PAPER_M = 2000
PAPER_N = 1000
PAPER_K = 10
PAPER_OUTLIER_FRAC = 0.05


@dataclass
class SynthConfig:
    M: int = PAPER_M
    N: int = PAPER_N
    K: int = PAPER_K
    cluster_sizes: Sequence[int] = PAPER_CLUSTER_SIZES
    snr_db: float = -3.0
    outlier_frac: float = PAPER_OUTLIER_FRAC
    seed: int = 0

    def __post_init__(self):
        self.cluster_sizes = tuple(int(s) for s in self.cluster_sizes)
        if self.M < 1 or self.N < 1 or self.K < 1:
            raise ValueError("M, N and K must be positive")
        if len(self.cluster_sizes) != self.K:
            raise ValueError(f"need {self.K} cluster sizes, got {len(self.cluster_sizes)}")
        if any(s < 1 for s in self.cluster_sizes):
            raise ValueError("cluster sizes must be positive")
        if sum(self.cluster_sizes) != self.N:
            raise ValueError(f"cluster sizes sum to {sum(self.cluster_sizes)}, expected N={self.N}")
        if not 0 <= self.outlier_frac < 1:
            raise ValueError("outlier_frac must lie in [0, 1)")


@dataclass
class SyntheticData:
    """Generated data plus everything needed to audit it.

    ``signal`` is ``W_true @ H_true`` with the outlier columns substituted;
    ``X = max(signal + noise, 0)``.
    """

    X: np.ndarray
    truth: np.ndarray
    W_true: np.ndarray
    H_true: np.ndarray
    signal: np.ndarray
    noise: np.ndarray
    outliers: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def realized_snr_db(self) -> float:
        """``10 log10(||W_true H_true||^2 / ||V||^2)``, i.e. before clamping."""
        nn = inner(self.noise, self.noise)
        if nn == 0:
            return math.inf
        S = self.W_true @ self.H_true
        return 10.0 * math.log10(inner(S, S) / nn)


def generate_synthetic(cfg: SynthConfig = SynthConfig()) -> SyntheticData:
    """Draw ``X = S + V`` from one-hot memberships, outliers and Gaussian noise.

    * W entries i.i.d. uniform on [0, 1];
    * H has a single unit entry per column, samples ordered by cluster;
    * ``S = W H``, then ``floor(outlier_frac * N)`` random columns of S are
      replaced with i.i.d. uniform entries on [0, max(W H)]; they keep their
      ground-truth label;
    * V is Gaussian, rescaled so ``10 log10(||W H||^2 / ||V||^2)`` equals
      ``snr_db`` exactly (``snr_db = inf`` gives no noise), and is added to
      every column of S, outliers included;
    * negative entries of ``S + V`` are set to 0 last.

    Draws from one ``numpy.random.Generator`` in the order W, outlier
    positions, outlier values, noise.
    """
    rng = np.random.default_rng(cfg.seed)
    M, N, K = cfg.M, cfg.N, cfg.K
    W = rng.uniform(0.0, 1.0, size=(M, K))
    truth = np.repeat(np.arange(K), cfg.cluster_sizes)
    H = np.zeros((K, N))
    H[truth, np.arange(N)] = 1.0
    S = W @ H
    ss = inner(S, S)

    n_out = int(math.floor(cfg.outlier_frac * N))
    if n_out:
        idx = np.sort(rng.choice(N, size=n_out, replace=False))
        S[:, idx] = rng.uniform(0.0, float(S.max()), size=(M, n_out))
    else:
        idx = np.zeros(0, dtype=np.int64)

    V = rng.standard_normal((M, N))
    if math.isinf(cfg.snr_db) and cfg.snr_db > 0:
        V[:] = 0.0
    else:
        target = ss * 10.0 ** (-cfg.snr_db / 10.0)
        V *= math.sqrt(target / inner(V, V))
    X = np.maximum(S + V, 0.0)
    return SyntheticData(X=X, truth=truth, W_true=W, H_true=H, signal=S, noise=V, outliers=idx)


# -- bad-initialization scenario ---------------------------------------------

@dataclass
class BadInitScenario:
    """Three 2-D clusters with every starting centroid taken from the big one.

    ``points`` holds the 2-D coordinates (2 x N).  ``X`` stacks a constant
    row ``lift`` under them so that the factorization has as many rows as
    clusters; squared distances between samples, and therefore K-means, are
    unchanged by the extra row.  ``init`` is the shared starting point:
    ``init_W`` holds three samples of the big cluster as columns (lifted),
    ``init_H`` is uniform on [0, 1].
    """

    X: np.ndarray
    points: np.ndarray
    truth: np.ndarray
    init_W: np.ndarray
    init_H: np.ndarray
    init_index: np.ndarray


BAD_INIT_SIZES = (600, 200, 200)


def bad_init_scenario(seed: int = 0, lift: float = 10.0, sizes: Sequence[int] = BAD_INIT_SIZES) -> BadInitScenario:
    """Big elongated cluster near the origin, two tight small clusters far away.

    The big cluster is centred at (3, 3), stretched along (1, 1) (std 1.0)
    and thin across it (std 0.3); the small ones sit at (12, 8) and (8, 12)
    with std 0.4.  Seen from the big cluster both small clusters lie in about
    the same direction, so a centroid started inside the big cluster tends to
    capture both of them at once.
    """
    if len(sizes) != 3 or any(s < 3 for s in sizes):
        raise ValueError("need three cluster sizes of at least 3")
    if not lift > 0:
        raise ValueError("lift must be positive")
    rng = np.random.default_rng(seed)
    u = np.array([1.0, 1.0]) / math.sqrt(2.0)
    v = np.array([1.0, -1.0]) / math.sqrt(2.0)
    z = rng.standard_normal((2, sizes[0]))
    big = np.array([[3.0], [3.0]]) + np.outer(u, 1.0 * z[0]) + np.outer(v, 0.3 * z[1])
    small = [rng.normal(0.0, 0.4, size=(2, n)) + np.array(c, dtype=float)[:, None]
             for c, n in zip(((12.0, 8.0), (8.0, 12.0)), sizes[1:])]
    P = np.maximum(np.hstack([big] + small), 0.0)
    truth = np.repeat(np.arange(3), sizes)
    X = np.vstack([P, np.full((1, P.shape[1]), float(lift))])
    idx = np.sort(rng.choice(sizes[0], size=3, replace=False))
    H0 = rng.uniform(0.0, 1.0, size=(3, P.shape[1]))
    return BadInitScenario(X=X, points=P, truth=truth, init_W=X[:, idx].copy(), init_H=H0, init_index=idx)
