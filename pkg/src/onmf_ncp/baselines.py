"""Lloyd's K-means and K-means++ seeding on column-sample data.

Samples are the columns of ``X`` (shape ``(M, N)``), matching the
factorization view ``X ~ W H`` where the centroids form ``W`` and ``H`` is a
one-hot assignment matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

from .model import inner

RANDOM = "random"
PLUSPLUS = "plusplus"


@dataclass
class KmeansConfig:
    """Settings for :func:`kmeans`.

    ``init`` is ``"random"`` (K distinct samples drawn uniformly),
    ``"plusplus"`` (D^2 seeding) or an ``(M, K)`` array of starting centroids.
    """

    K: int
    max_iters: int = 300
    tol: float = 1e-6
    init: Union[str, np.ndarray] = RANDOM
    seed: int = 0

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not self.tol >= 0:
            raise ValueError("tol must be non-negative")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if isinstance(self.init, str):
            if self.init not in (RANDOM, PLUSPLUS):
                raise ValueError(f"unknown init {self.init!r}; use 'random', 'plusplus' or an array")
        else:
            self.init = np.array(self.init, dtype=np.float64)
            if self.init.ndim != 2 or self.init.shape[1] != self.K:
                raise ValueError(f"given centroids must have shape (M, {self.K}), got {self.init.shape}")

    @property
    def init_name(self) -> str:
        return self.init if isinstance(self.init, str) else "given"


class KmeansResult(NamedTuple):
    centroids: np.ndarray
    labels: np.ndarray
    inertia: float
    history: list
    iterations: int
    converged: bool


def _sq_dists(X, C, xx=None):
    # (N, K) squared distances between the columns of X and of C
    if xx is None:
        xx = np.einsum("ij,ij->j", X, X)
    cc = np.einsum("ij,ij->j", C, C)
    D = xx[:, None] - 2.0 * (X.T @ C) + cc[None, :]
    return np.maximum(D, 0.0)


def _inertia(X, C, labels) -> float:
    R = X - C[:, labels]
    return inner(R, R)


def kmeans_pp_init(X, K: int, seed: int = 0) -> np.ndarray:
    """K-means++ seeding: first centroid uniform, then ``P(x) ~ D(x)^2``.

    Returns the chosen sample columns as an ``(M, K)`` array.

    Raises
    ------
    ValueError
        If ``K > N`` or there are fewer than ``K`` distinct samples.
    """
    X = np.asarray(X, dtype=np.float64)
    M, N = X.shape
    if K < 1:
        raise ValueError("K must be at least 1")
    if K > N:
        raise ValueError(f"K={K} exceeds the number of samples N={N}")
    rng = np.random.default_rng(seed)
    xx = np.einsum("ij,ij->j", X, X)
    chosen = [int(rng.integers(N))]
    d2 = _sq_dists(X, X[:, chosen], xx)[:, 0]
    d2[chosen[0]] = 0.0
    for _ in range(1, K):
        total = d2.sum()
        if not total > 0:
            raise ValueError(f"fewer than K={K} distinct samples")
        idx = int(rng.choice(N, p=d2 / total))
        chosen.append(idx)
        d2 = np.minimum(d2, _sq_dists(X, X[:, [idx]], xx)[:, 0])
        d2[idx] = 0.0
    return X[:, chosen].copy()


def _initial_centroids(X, cfg: KmeansConfig) -> np.ndarray:
    M, N = X.shape
    if isinstance(cfg.init, np.ndarray):
        if cfg.init.shape[0] != M:
            raise ValueError(f"given centroids have {cfg.init.shape[0]} rows, data has M={M}")
        return cfg.init.copy()
    if cfg.init == PLUSPLUS:
        return kmeans_pp_init(X, cfg.K, cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    return X[:, np.sort(rng.choice(N, size=cfg.K, replace=False))].copy()


def _update(X, labels, C_old, dist, K):
    """Cluster means; an empty cluster takes the sample farthest from its centroid."""
    M, N = X.shape
    counts = np.bincount(labels, minlength=K)
    sums = np.zeros((M, K))
    np.add.at(sums.T, labels, X.T)
    C = C_old.copy()
    nz = counts > 0
    C[:, nz] = sums[:, nz] / counts[nz]
    if not nz.all():
        d = dist.copy()
        for k in np.flatnonzero(~nz):
            j = int(np.argmax(d))  # lowest index among equally far samples
            C[:, k] = X[:, j]
            d[j] = -1.0
    return C


def kmeans(X, cfg: KmeansConfig) -> KmeansResult:
    """Lloyd iterations until the assignment is stable or the relative
    inertia drop is at most ``cfg.tol``.

    Each sample goes to its nearest centroid (lowest index on ties).  The
    inertia history is non-increasing: should rounding ever make a step
    worse, the previous state is kept and the iteration stops.

    Returns
    -------
    KmeansResult
        ``centroids`` (M, K), ``labels`` (N,), final ``inertia``, the inertia
        ``history`` (one value per accepted assignment), ``iterations`` and
        whether the tolerance was met.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be a 2-D array")
    M, N = X.shape
    K = cfg.K
    if K > N:
        raise ValueError(f"K={K} exceeds the number of samples N={N}")
    xx = np.einsum("ij,ij->j", X, X)
    C = _initial_centroids(X, cfg)
    D = _sq_dists(X, C, xx)
    labels = np.argmin(D, axis=1)
    inertia = _inertia(X, C, labels)
    history = [inertia]
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        dist = D[np.arange(N), labels]
        C_new = _update(X, labels, C, dist, K)
        D_new = _sq_dists(X, C_new, xx)
        labels_new = np.argmin(D_new, axis=1)
        new_inertia = _inertia(X, C_new, labels_new)
        if new_inertia > inertia:
            converged = True
            it -= 1
            break
        drop = inertia - new_inertia
        stable = np.array_equal(labels_new, labels)
        C, D, labels, inertia = C_new, D_new, labels_new, new_inertia
        history.append(inertia)
        if stable or drop <= cfg.tol * history[-2]:
            converged = True
            break
    return KmeansResult(C, labels.astype(np.int64), inertia, history, it, converged)
