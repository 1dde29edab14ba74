"""Proximal operator of the negative infinity norm on the non-negative orthant.

Solves

    min_{x >= 0}  1/2 ||x - y||^2 - c ||x||_inf ,   c > 0

in closed form: with ``i*`` an index of the largest entry of ``y``,
``x_{i*} = (y_{i*} + c)^+`` and ``x_i = (y_i)^+`` elsewhere.
"""

from __future__ import annotations

import numpy as np

ORACLE_MAX_N = 12


def prox_objective(x, y, c: float) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return float(0.5 * np.sum((x - y) ** 2) - c * (np.max(x) if x.size else 0.0))


def _check(y, c):
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.size == 0:
        raise ValueError("prox input vector is empty")
    if not c > 0:
        raise ValueError(f"c must be positive, got {c}")
    return y


def prox_neg_inf(y, c: float) -> tuple[np.ndarray, int]:
    """Closed-form minimizer and its max-entry index (lowest index on ties).

    The index is reported even when the minimizer is the zero vector.
    """
    y = _check(y, c)
    i_star = int(np.argmax(y))
    x = np.maximum(y, 0.0)
    x[i_star] = max(y[i_star] + c, 0.0)
    return x, i_star


def prox_neg_inf_oracle(y, c: float) -> tuple[np.ndarray, int]:
    """Candidate enumeration used to check :func:`prox_neg_inf`.

    Builds the closed-form candidate for every possible max index plus the
    plain clamp ``(y)^+``, evaluates the prox objective directly and keeps
    the best one (lowest index on exact ties).  Independent of the argmax
    rule it verifies.
    """
    y = _check(y, c)
    n = y.size
    if n > ORACLE_MAX_N:
        raise ValueError(f"oracle limited to n <= {ORACLE_MAX_N}, got {n}")
    clamped = np.maximum(y, 0.0)
    best_x, best_i, best_val = None, -1, np.inf
    for i in range(n):
        x = clamped.copy()
        x[i] = max(y[i] + c, 0.0)
        val = prox_objective(x, y, c)
        if val < best_val:
            best_x, best_i, best_val = x, i, val
    if prox_objective(clamped, y, c) < best_val:
        # the plain clamp is never strictly better for c > 0, kept for completeness
        best_x, best_i = clamped, int(np.argmax(clamped))
    return best_x, best_i


def prox_h_update(B, rho: float, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Column-wise prox for the non-smooth H step.

    Returns ``H = (B + rho/t * Z)^+`` and the 0/1 selector ``Z`` marking the
    row of each column's largest entry of ``B`` (lowest index on ties).
    """
    if not t > 0:
        raise ValueError(f"step constant t must be positive, got {t}")
    if rho < 0:
        raise ValueError(f"rho must be non-negative, got {rho}")
    B = np.asarray(B, dtype=np.float64)
    K, N = B.shape
    rows = np.argmax(B, axis=0)
    cols = np.arange(N)
    Z = np.zeros((K, N))
    Z[rows, cols] = 1.0
    H = B.copy()
    H[rows, cols] += rho / t
    np.maximum(H, 0.0, out=H)
    return H, Z
