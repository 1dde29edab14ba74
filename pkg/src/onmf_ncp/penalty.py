"""Norm-difference penalties that push each column of H towards 1-sparsity.

For a non-negative column ``h`` the penalty is

    phi(h) = ||h||_p^v - ||h||_q^v      (1 <= p < q)

which is zero exactly when ``h`` has at most one non-zero entry.  The
penalized objective adds ``rho / v * sum_j phi(h_j)`` to ``F``.  Two
instances get dedicated solvers:

* ``smooth``    : p=1, q=2, v=2   ->  rho/2 * sum_j ((1^T h_j)^2 - ||h_j||^2)
* ``nonsmooth`` : p=1, q=inf, v=1 ->  rho * sum_j (1^T h_j - max(h_j))

and ``generic`` covers any finite (p, q, v) with p >= 1, q > p, v >= q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .model import Regularization, check_shapes, grad_f_h, objective_f

SMOOTH = "smooth"
NONSMOOTH = "nonsmooth"
GENERIC = "generic"


@dataclass(frozen=True)
class Penalty:
    kind: str
    rho: float
    p: float = 1.0
    q: float = 2.0
    v: float = 2.0

    def __post_init__(self):
        if self.kind not in (SMOOTH, NONSMOOTH, GENERIC):
            raise ValueError(f"unknown penalty kind {self.kind!r}")
        if not self.rho >= 0:
            raise ValueError(f"rho must be non-negative, got {self.rho}")
        if self.kind == SMOOTH and (self.p, self.q, self.v) != (1.0, 2.0, 2.0):
            raise ValueError("smooth penalty is fixed to p=1, q=2, v=2")
        if self.kind == NONSMOOTH and (self.p, self.q, self.v) != (1.0, math.inf, 1.0):
            raise ValueError("non-smooth penalty is fixed to p=1, q=inf, v=1")
        if self.kind == GENERIC:
            if math.isinf(self.q) or math.isinf(self.p) or math.isinf(self.v):
                raise ValueError("generic penalty needs finite p, q, v; use the non-smooth kind for q=inf")
            if not (self.p >= 1 and self.q > self.p and self.v >= self.q):
                raise ValueError(
                    f"generic penalty needs p >= 1, q > p, v >= q; got p={self.p}, q={self.q}, v={self.v}"
                )

    @classmethod
    def smooth(cls, rho: float) -> "Penalty":
        return cls(SMOOTH, rho, 1.0, 2.0, 2.0)

    @classmethod
    def nonsmooth(cls, rho: float) -> "Penalty":
        return cls(NONSMOOTH, rho, 1.0, math.inf, 1.0)

    @classmethod
    def generic(cls, p: float, q: float, v: float, rho: float) -> "Penalty":
        return cls(GENERIC, rho, float(p), float(q), float(v))

    def with_rho(self, rho: float) -> "Penalty":
        return replace(self, rho=rho)


def _col_norm(H: np.ndarray, order: float) -> np.ndarray:
    if math.isinf(order):
        return H.max(axis=0)
    if order == 1:
        return H.sum(axis=0)
    if order == 2:
        return np.sqrt(np.einsum("ij,ij->j", H, H))
    return np.sum(H**order, axis=0) ** (1.0 / order)


def phi_columns(H, spec: Penalty) -> np.ndarray:
    """``phi`` for every column of a non-negative matrix ``H`` (shape (K, N))."""
    H = np.asarray(H, dtype=np.float64)
    if np.any(H < 0):
        raise ValueError("penalty is defined on the non-negative orthant; H has negative entries")
    if spec.kind == SMOOTH:
        s = H.sum(axis=0)
        vals = s * s - np.einsum("ij,ij->j", H, H)
    elif spec.kind == NONSMOOTH:
        vals = H.sum(axis=0) - H.max(axis=0)
    else:
        vals = _col_norm(H, spec.p) ** spec.v - _col_norm(H, spec.q) ** spec.v
    # 1-sparse columns are exactly feasible; kill rounding noise there and below zero
    nnz = np.count_nonzero(H, axis=0)
    vals = np.where(nnz <= 1, 0.0, np.maximum(vals, 0.0))
    return vals


def phi(h, spec: Penalty) -> float:
    """Penalty value of a single non-negative vector."""
    h = np.asarray(h, dtype=np.float64).reshape(-1, 1)
    return float(phi_columns(h, spec)[0])


def penalty_value(H, spec: Penalty) -> float:
    """``sum_j phi(h_j)`` (without the ``rho / v`` weight)."""
    return float(np.sum(phi_columns(H, spec)))


def penalized_objective(X, W, H, reg: Regularization, spec: Penalty) -> float:
    """``F(W, H) + rho / v * sum_j phi(h_j)``."""
    check_shapes(X, W, H)
    return objective_f(X, W, H, reg) + spec.rho / spec.v * penalty_value(H, spec)


def grad_h_smooth(X, W, H, reg: Regularization, spec: Penalty) -> np.ndarray:
    """Gradient in H of the smooth penalized objective.

    ``2 W^T (WH - X) + nu H + rho (J - I) H`` with ``J`` the K x K all-ones matrix.
    """
    if spec.kind != SMOOTH:
        raise ValueError(f"grad_h_smooth needs the smooth penalty, got {spec.kind!r}")
    G = grad_f_h(X, W, H, reg)
    return G + spec.rho * (H.sum(axis=0, keepdims=True) - H)


def smooth_part_nonsmooth(X, W, H, reg: Regularization, rho: float):
    """Value and H-gradient of ``F + rho * sum_j 1^T h_j``.

    This is the differentiable part of the non-smooth penalized objective;
    the remaining ``-rho * sum_j max(h_j)`` is handled by the prox.
    """
    value = objective_f(X, W, H, reg) + rho * float(H.sum())
    return value, grad_f_h(X, W, H, reg) + rho


def grad_h_penalty_generic(H, spec: Penalty) -> np.ndarray:
    """Gradient of ``rho / v * sum_j phi(h_j)`` for a generic finite (p, q, v)."""
    H = np.asarray(H, dtype=np.float64)
    p, q, v = spec.p, spec.q, spec.v
    npn = _col_norm(H, p)
    nqn = _col_norm(H, q)
    # v >= q > p makes both exponents non-negative, so the zero column is fine
    with np.errstate(divide="ignore", invalid="ignore"):
        gp = np.power(npn, v - p)[None, :] * np.power(H, p - 1)
        gq = np.power(nqn, v - q)[None, :] * np.power(H, q - 1)
    return spec.rho * (gp - gq)


def grad_h_penalized(X, W, H, reg: Regularization, spec: Penalty) -> np.ndarray:
    """H-gradient of the penalized objective for smooth and generic penalties."""
    if spec.kind == SMOOTH:
        return grad_h_smooth(X, W, H, reg, spec)
    if spec.kind == GENERIC:
        return grad_f_h(X, W, H, reg) + grad_h_penalty_generic(H, spec)
    raise ValueError("the non-smooth penalty has no gradient; use smooth_part_nonsmooth")


def hessian_h_block(W, reg: Regularization, spec: Penalty) -> np.ndarray:
    """Per-column K x K Hessian in H of the smooth (part of the) objective.

    The full Hessian in vec(H) is block diagonal with N copies of this block.
    """
    W = np.asarray(W, dtype=np.float64)
    K = W.shape[1]
    if K == 0:
        raise ValueError("K must be at least 1")
    A = 2.0 * (W.T @ W) + reg.nu * np.eye(K)
    if spec.kind == SMOOTH:
        A = A + spec.rho * (np.ones((K, K)) - np.eye(K))
    elif spec.kind == GENERIC:
        raise ValueError("no constant Hessian for the generic penalty; use Armijo steps")
    return A


def _lambda_max(A: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(A)[-1])


def step_constant_h(W, reg: Regularization, spec: Penalty) -> float:
    """Step constant ``t`` for the H update.

    smooth: ``1/2 lambda_max(2 W^T W + nu I + rho (J - I))``;
    non-smooth: ``lambda_max(2 W^T W + nu I)`` (Hessian of the smooth part).
    """
    lam = _lambda_max(hessian_h_block(W, reg, spec))
    return 0.5 * lam if spec.kind == SMOOTH else lam


def step_constant_w(H, reg: Regularization, spec: Penalty = None) -> float:
    """Step constant ``c`` for the W update: ``1/2 lambda_max(2 H H^T + mu I)``.

    The penalty only involves H, so this is the same for every penalty kind.
    """
    H = np.asarray(H, dtype=np.float64)
    K = H.shape[0]
    if K == 0:
        raise ValueError("K must be at least 1")
    return 0.5 * _lambda_max(2.0 * (H @ H.T) + reg.mu * np.eye(K))
