import itertools
from math import comb

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from onmf_ncp.metrics import (
    ConsensusMap,
    adjusted_rand_index,
    clustering_accuracy,
    consensus_map,
    cophenetic_correlation,
    extract_labels,
    normalized_residual,
    orthogonality_eps,
)


def brute_force_acc(pred, truth):
    """Best accuracy over every relabeling of ``pred``."""
    pred, truth = np.asarray(pred), np.asarray(truth)
    pl, tl = np.unique(pred), np.unique(truth)
    K = max(len(pl), len(tl))
    best = 0
    targets = list(tl) + [None] * (K - len(tl))
    for perm in itertools.permutations(targets, len(pl)):
        mapping = dict(zip(pl, perm))
        best = max(best, sum(mapping[p] == t for p, t in zip(pred, truth)))
    return best / len(pred)


def pair_count_ari(a, b):
    """ARI from explicit pair agreement counts."""
    n = len(a)
    same_a = same_b = both = 0
    for i in range(n):
        for j in range(i + 1, n):
            sa, sb = a[i] == a[j], b[i] == b[j]
            same_a += sa
            same_b += sb
            both += sa and sb
    total = comb(n, 2)
    expected = same_a * same_b / total
    maximum = (same_a + same_b) / 2
    return (both - expected) / (maximum - expected)


def naive_orth(H):
    K, N = H.shape
    Q = []
    for k in range(K):
        nrm = sum(H[k, j] ** 2 for j in range(N)) ** 0.5
        Q.append([H[k, j] / nrm if nrm > 0 else 0.0 for j in range(N)])
    total = 0.0
    for a in range(K):
        for b in range(K):
            dot = sum(Q[a][j] * Q[b][j] for j in range(N))
            total += (dot - (1.0 if a == b else 0.0)) ** 2
    return total**0.5 / K**2


def naive_nr(prev, curr):
    def rel(new, old):
        num = sum((n - o) ** 2 for n, o in zip(new.ravel(), old.ravel())) ** 0.5
        den = sum(o**2 for o in old.ravel()) ** 0.5
        return num / den
    return rel(curr[0], prev[0]) + rel(curr[1], prev[1])


class TestLabels:
    def test_identity(self):
        assert np.array_equal(extract_labels(np.eye(4)).labels, range(4))

    def test_single_column(self):
        assert extract_labels(np.array([[0.0], [0.7], [0.0]])).labels[0] == 1

    def test_degenerate_flag(self):
        H = np.array([[1.0, 0.0, 1e-14], [0.0, 0.0, 0.0]])
        lab = extract_labels(H)
        assert list(lab.degenerate) == [False, True, True]
        assert list(lab.labels) == [0, 0, 0]

    @given(st.floats(1e-3, 1e3))
    def test_scale_invariant(self, alpha):
        H = np.random.default_rng(0).uniform(size=(4, 20))
        assert np.array_equal(extract_labels(alpha * H).labels, extract_labels(H).labels)


class TestOrthogonality:
    def test_orthonormal_rows(self):
        H = np.zeros((3, 6))
        H[[0, 1, 2, 0, 1, 2], range(6)] = [1, 2, 3, 4, 5, 6]
        assert orthogonality_eps(H) == pytest.approx(0, abs=1e-16)

    def test_all_ones(self):
        assert orthogonality_eps(np.ones((2, 2))) == pytest.approx(np.sqrt(2) / 4, rel=1e-15)

    def test_zero_row_counts(self):
        H = np.array([[1.0, 0.0], [0.0, 0.0]])
        assert orthogonality_eps(H) == pytest.approx(1 / 4)

    def test_naive(self, rng):
        for _ in range(20):
            H = rng.uniform(size=(rng.integers(1, 6), rng.integers(1, 12)))
            assert abs(orthogonality_eps(H) - naive_orth(H)) <= 1e-12


class TestResidual:
    def test_same_and_double(self, rng):
        W, H = rng.uniform(size=(3, 2)), rng.uniform(size=(2, 4))
        assert normalized_residual((W, H), (W, H)) == 0
        assert normalized_residual((W, H), (2 * W, 2 * H)) == pytest.approx(2.0)

    def test_zero_denominators(self):
        Z = np.zeros((2, 2))
        assert normalized_residual((Z, Z), (Z, Z)) == 0
        assert normalized_residual((Z, Z), (Z, np.ones((2, 2)))) == np.inf

    def test_naive(self, rng):
        for _ in range(20):
            prev = (rng.uniform(size=(4, 3)), rng.uniform(size=(3, 5)))
            curr = (rng.uniform(size=(4, 3)), rng.uniform(size=(3, 5)))
            assert abs(normalized_residual(prev, curr) - naive_nr(prev, curr)) <= 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            normalized_residual((np.ones((2, 2)), np.ones((2, 3))), (np.ones((2, 2)), np.ones((2, 4))))


class TestAccuracy:
    def test_identity_and_permutation(self, rng):
        t = rng.integers(0, 4, size=30)
        assert clustering_accuracy(t, t) == 1.0
        perm = rng.permutation(4)
        assert clustering_accuracy(perm[t], t) == 1.0

    def test_brute_force(self, rng):
        for _ in range(30):
            K = rng.integers(1, 6)
            N = rng.integers(1, 31)
            p, t = rng.integers(0, K, N), rng.integers(0, K, N)
            assert clustering_accuracy(p, t) == pytest.approx(brute_force_acc(p, t), abs=1e-15)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            clustering_accuracy([0, 1], [0])

    @given(st.lists(st.integers(0, 3), min_size=2, max_size=25), st.permutations(range(4)))
    def test_relabel_invariant(self, t, perm):
        t = np.array(t)
        p = (t + 1) % 4
        assert clustering_accuracy(np.array(perm)[p], t) == pytest.approx(clustering_accuracy(p, t))


class TestARI:
    def test_identical(self):
        assert adjusted_rand_index([0, 0, 1, 1, 2], [1, 1, 0, 0, 2]) == pytest.approx(1.0)

    def test_constant_pred(self):
        assert adjusted_rand_index([0] * 6, [0, 0, 1, 1, 2, 2]) == pytest.approx(0.0)

    def test_hand_tables(self):
        assert adjusted_rand_index([0, 0, 1, 1], [0, 0, 1, 1]) == 1.0
        a, b = [0, 0, 1, 1], [0, 1, 0, 1]
        assert adjusted_rand_index(a, b) == pytest.approx(pair_count_ari(a, b))
        assert adjusted_rand_index(a, b) == pytest.approx(-0.5)

    def test_pair_counting(self, rng):
        for _ in range(30):
            a, b = rng.integers(0, 4, 25), rng.integers(0, 3, 25)
            assert adjusted_rand_index(a, b) == pytest.approx(pair_count_ari(a, b), abs=1e-12)
            assert adjusted_rand_index(a, b) == pytest.approx(adjusted_rand_index(b, a), abs=1e-15)


class TestConsensus:
    def test_identical_runs(self):
        runs = [np.array([0, 0, 1, 1, 2])] * 3
        C = consensus_map(runs).C
        assert set(np.unique(C)) == {0.0, 1.0}
        assert C[0, 1] == 1 and C[1, 2] == 0

    def test_split_pair(self):
        C = consensus_map([np.array([0, 0, 1]), np.array([0, 1, 1])]).C
        assert C[0, 1] == 0.5

    def test_naive(self, rng):
        runs = [rng.integers(0, 3, 12) for _ in range(5)]
        C = consensus_map(runs).C
        for i in range(12):
            for j in range(12):
                assert C[i, j] == sum(r[i] == r[j] for r in runs) / 5
        assert np.array_equal(C, C.T) and np.all(np.diag(C) == 1)

    def test_errors(self):
        with pytest.raises(ValueError):
            consensus_map([np.array([0, 1])])
        with pytest.raises(ValueError):
            consensus_map([np.array([0, 1]), np.array([0, 1, 2])])


class TestCophenetic:
    def test_crisp_blocks(self):
        C = consensus_map([np.array([0, 0, 1, 1, 2, 2])] * 4)
        assert cophenetic_correlation(C).value == pytest.approx(1.0)

    def test_three_point_hand_trace(self):
        # distances d01=0.1, d02=0.5, d12=0.6; average linkage merges {0,1} at 0.1,
        # then joins 2 at (0.5 + 0.6) / 2 = 0.55
        D = np.array([[0, 0.1, 0.5], [0.1, 0, 0.6], [0.5, 0.6, 0]])
        d = np.array([0.1, 0.5, 0.6])
        coph = np.array([0.1, 0.55, 0.55])
        expected = np.corrcoef(d, coph)[0, 1]
        got = cophenetic_correlation(ConsensusMap(1 - D, 1)).value
        assert got == pytest.approx(expected, abs=1e-12)
        # centred: d -> (-.3, .1, .2), coph -> (-.3, .15, .15); r = .135 / sqrt(.14 * .135)
        assert got == pytest.approx(np.sqrt(0.135 / 0.14), abs=1e-12)

    def test_constant_distances(self):
        res = cophenetic_correlation(np.ones((4, 4)))
        assert res.value == 1.0 and res.constant

    def test_noise_lowers_cc(self, rng):
        truth = np.repeat(np.arange(4), 25)
        crisp = [truth.copy() for _ in range(10)]
        noisy = [truth.copy() for _ in range(6)] + [rng.integers(0, 4, 100) for _ in range(4)]
        assert cophenetic_correlation(consensus_map(noisy)).value < cophenetic_correlation(consensus_map(crisp)).value

    def test_needs_three(self):
        with pytest.raises(ValueError):
            cophenetic_correlation(np.ones((2, 2)))
