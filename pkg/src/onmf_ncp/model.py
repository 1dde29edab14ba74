"""Data model, regularized fitting objective and its gradients.

The factorization is ``X ~ W @ H`` with ``X`` of shape (M, N) holding one
sample per column, ``W`` of shape (M, K) holding the cluster centroids and
``H`` of shape (K, N) holding the (soft) assignments.  Every solver in the
package shares the objective

    F(W, H) = ||X - WH||_F^2 + mu/2 ||W||_F^2 + nu/2 ||H||_F^2
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np


class ShapeError(ValueError):
    """Raised when X, W and H do not conform."""


class FactorPair(NamedTuple):
    W: np.ndarray
    H: np.ndarray

    @property
    def K(self) -> int:
        return self.W.shape[1]

    def copy(self) -> "FactorPair":
        return FactorPair(self.W.copy(), self.H.copy())


@dataclass(frozen=True)
class Regularization:
    """Weights of the Frobenius regularizers on W (``mu``) and H (``nu``)."""

    mu: float = 0.0
    nu: float = 0.0

    def __post_init__(self):
        if self.mu < 0 or self.nu < 0:
            raise ValueError(f"mu and nu must be >= 0, got mu={self.mu}, nu={self.nu}")


@dataclass(frozen=True)
class BoxBounds:
    """Entrywise bounds applied to W on projection.

    ``lower`` may only tighten non-negativity, never weaken it.
    """

    lower: Optional[float] = None
    upper: Optional[float] = None

    def __post_init__(self):
        if self.lower is not None and self.lower < 0:
            raise ValueError(f"lower bound must be >= 0, got {self.lower}")
        if self.lower is not None and self.upper is not None and self.lower > self.upper:
            raise ValueError(f"lower bound {self.lower} exceeds upper bound {self.upper}")


NO_BOUNDS = BoxBounds()


def as_data_matrix(X) -> np.ndarray:
    """Validate and convert ``X`` to a dense non-negative float64 matrix."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise ShapeError(f"data matrix must be 2-D and non-empty, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("data matrix contains NaN or Inf")
    if np.any(X < 0):
        i, j = np.argwhere(X < 0)[0]
        raise ValueError(f"data matrix must be non-negative; X[{i}, {j}] = {X[i, j]}")
    return X


def check_shapes(X: np.ndarray, W: np.ndarray, H: np.ndarray) -> None:
    if W.ndim != 2 or H.ndim != 2 or X.ndim != 2:
        raise ShapeError(f"expected 2-D arrays, got X{X.shape}, W{W.shape}, H{H.shape}")
    M, N = X.shape
    if W.shape[0] != M or H.shape[1] != N or W.shape[1] != H.shape[0]:
        raise ShapeError(
            f"shapes do not conform: X is {X.shape}, W is {W.shape}, H is {H.shape}; "
            f"need W (M, K) and H (K, N) with (M, N) = {X.shape}"
        )


def inner(A, B) -> float:
    """Frobenius inner product ``<A, B>``.

    Summed by numpy rather than BLAS ``dot``, whose multithreaded reduction
    makes the last bits depend on the thread count.
    """
    return float(np.sum(np.multiply(A, B)))


def frob_norm(A) -> float:
    return math.sqrt(inner(A, A))


def objective_f(X, W, H, reg: Regularization = Regularization()) -> float:
    """Regularized least-squares fit ``F(W, H)``."""
    check_shapes(X, W, H)
    R = X - W @ H
    return float(
        inner(R, R) + 0.5 * reg.mu * inner(W, W) + 0.5 * reg.nu * inner(H, H)
    )


def grad_f_w(X, W, H, reg: Regularization = Regularization()) -> np.ndarray:
    """Gradient of ``F`` with respect to W: ``2 (WH - X) H^T + mu W``."""
    check_shapes(X, W, H)
    return 2.0 * (W @ (H @ H.T) - X @ H.T) + reg.mu * W


def grad_f_h(X, W, H, reg: Regularization = Regularization()) -> np.ndarray:
    """Gradient of ``F`` with respect to H: ``2 W^T (WH - X) + nu H``."""
    check_shapes(X, W, H)
    return 2.0 * ((W.T @ W) @ H - W.T @ X) + reg.nu * H


def project_nonneg_box(A, bounds: BoxBounds = NO_BOUNDS) -> np.ndarray:
    """Clamp entrywise to ``[max(0, lower), upper]``; plain ``max(A, 0)`` without bounds."""
    lo = 0.0 if bounds.lower is None else max(0.0, bounds.lower)
    return np.clip(np.asarray(A, dtype=np.float64), lo, bounds.upper)
