"""Clustering and convergence metrics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.cluster.hierarchy import cophenet, linkage
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import squareform

from .model import frob_norm

DEGENERATE_RTOL = 1e-12


@dataclass
class Labels:
    """Cluster index per sample plus a flag for all-(near-)zero columns of H."""

    labels: np.ndarray
    degenerate: np.ndarray

    def __len__(self):
        return len(self.labels)


def extract_labels(H) -> Labels:
    """Label of sample j is the row of the largest entry of column j.

    Ties go to the lowest row.  Columns whose max is at most
    ``1e-12 * max(H)`` are flagged as degenerate but still labelled.
    """
    H = np.asarray(H, dtype=np.float64)
    labels = np.argmax(H, axis=0)
    colmax = H.max(axis=0)
    hmax = H.max() if H.size else 0.0
    degenerate = colmax <= DEGENERATE_RTOL * hmax
    return Labels(labels.astype(np.int64), degenerate)


def _as_labels(x) -> np.ndarray:
    if isinstance(x, Labels):
        x = x.labels
    return np.asarray(x).ravel()


def orthogonality_eps(H) -> float:
    """``||Q H (Q H)^T - I_K||_F / K^2`` with Q scaling rows of H to unit norm.

    All-zero rows stay zero, so each contributes a -1 on the diagonal.
    """
    H = np.asarray(H, dtype=np.float64)
    K = H.shape[0]
    norms = np.linalg.norm(H, axis=1)
    scale = np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)
    QH = H * scale[:, None]
    D = QH @ QH.T - np.eye(K)
    return frob_norm(D) / K**2


def _rel_change(new, old) -> float:
    num = frob_norm(new - old)
    den = frob_norm(old)
    if den == 0:
        return 0.0 if num == 0 else np.inf
    return float(num / den)


def normalized_residual(prev, curr) -> float:
    """Relative change of W plus relative change of H between two iterates.

    A zero-norm previous block counts 0 if unchanged, +inf otherwise.
    """
    Wp, Hp = prev
    Wc, Hc = curr
    if Wp.shape != Wc.shape or Hp.shape != Hc.shape:
        raise ValueError(
            f"iterate shapes differ: W {Wp.shape} vs {Wc.shape}, H {Hp.shape} vs {Hc.shape}"
        )
    return _rel_change(Wc, Wp) + _rel_change(Hc, Hp)


def contingency(pred, truth) -> np.ndarray:
    pred = _as_labels(pred)
    truth = _as_labels(truth)
    if pred.shape != truth.shape:
        raise ValueError(f"label vectors differ in length: {pred.size} vs {truth.size}")
    _, pi = np.unique(pred, return_inverse=True)
    _, ti = np.unique(truth, return_inverse=True)
    C = np.zeros((pi.max(initial=-1) + 1, ti.max(initial=-1) + 1), dtype=np.int64)
    np.add.at(C, (pi, ti), 1)
    return C


def clustering_accuracy(pred, truth) -> float:
    """Best one-to-one cluster-to-class matching, as a fraction of samples."""
    C = contingency(pred, truth)
    if C.size == 0:
        return 1.0
    rows, cols = linear_sum_assignment(C, maximize=True)
    return float(C[rows, cols].sum() / C.sum())


def _comb2(n):
    return n * (n - 1) / 2.0


def adjusted_rand_index(pred, truth) -> float:
    """Pair-counting adjusted Rand index from the contingency table."""
    C = contingency(pred, truth)
    n = C.sum()
    if n < 2:
        return 1.0
    sum_ij = _comb2(C).sum()
    sum_a = _comb2(C.sum(axis=1)).sum()
    sum_b = _comb2(C.sum(axis=0)).sum()
    expected = sum_a * sum_b / _comb2(n)
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        # both partitions trivial (all-in-one or all singletons) and identical in form
        return 1.0 if sum_a == sum_b else 0.0
    return float((sum_ij - expected) / (max_index - expected))


@dataclass
class ConsensusMap:
    C: np.ndarray
    runs: int


def consensus_map(runs: Sequence) -> ConsensusMap:
    """Fraction of runs in which each pair of samples shares a cluster."""
    if len(runs) < 2:
        raise ValueError("consensus map needs at least two runs")
    arrs = [_as_labels(r) for r in runs]
    n = arrs[0].size
    for a in arrs:
        if a.size != n:
            raise ValueError(f"runs differ in length: {a.size} vs {n}")
    C = np.zeros((n, n))
    for a in arrs:
        C += a[:, None] == a[None, :]
    C /= len(arrs)
    return ConsensusMap(C, len(arrs))


@dataclass
class CopheneticResult:
    value: float
    constant: bool = False


def cophenetic_correlation(cmap) -> CopheneticResult:
    """Pearson correlation between ``1 - C`` and its average-linkage cophenetic distances.

    If every off-diagonal distance is equal the correlation is undefined; the
    map is then perfectly consistent and the value is reported as 1 with the
    ``constant`` flag set.
    """
    C = cmap.C if isinstance(cmap, ConsensusMap) else np.asarray(cmap, dtype=np.float64)
    n = C.shape[0]
    if n < 3:
        raise ValueError("cophenetic correlation needs at least 3 samples")
    D = 1.0 - C
    np.fill_diagonal(D, 0.0)
    d = squareform(D, checks=False)
    if np.ptp(d) == 0:
        return CopheneticResult(1.0, constant=True)
    Z = linkage(d, method="average")
    coph = cophenet(Z)
    if np.ptp(coph) == 0:
        return CopheneticResult(1.0, constant=True)
    return CopheneticResult(float(np.corrcoef(d, coph)[0, 1]))
