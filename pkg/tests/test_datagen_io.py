import math

import numpy as np
import pytest

from onmf_ncp import io as mio
from onmf_ncp.datagen import (
    BAD_INIT_SIZES,
    PAPER_CLUSTER_SIZES,
    SynthConfig,
    bad_init_scenario,
    generate_synthetic,
)
from onmf_ncp.metrics import extract_labels

SMALL = dict(M=30, N=40, K=4, cluster_sizes=(10, 5, 15, 10))


class TestSynthetic:
    @pytest.mark.parametrize("snr", [-5.0, -3.0, 0.0, 1.0, 3.0])
    def test_realized_snr(self, snr):
        d = generate_synthetic(SynthConfig(**SMALL, snr_db=snr, outlier_frac=0.1, seed=2))
        assert abs(d.realized_snr_db - snr) <= 0.01
        S = d.W_true @ d.H_true
        ratio = np.vdot(d.noise, d.noise) / np.vdot(S, S)
        assert ratio == pytest.approx(10 ** (-snr / 10), rel=1e-12)

    def test_noise_free(self):
        d = generate_synthetic(SynthConfig(**SMALL, snr_db=math.inf, outlier_frac=0.0))
        assert np.array_equal(d.X, d.W_true @ d.H_true)
        assert np.array_equal(extract_labels(d.H_true).labels, d.truth)

    def test_truth_pattern_and_outliers(self):
        d = generate_synthetic(SynthConfig(**SMALL, outlier_frac=0.1, seed=4))
        assert np.array_equal(np.argmax(d.H_true, axis=0), d.truth)
        assert np.all((d.H_true == 0) | (d.H_true == 1)) and np.all(d.H_true.sum(axis=0) == 1)
        assert np.array_equal(np.bincount(d.truth), SMALL["cluster_sizes"])
        assert d.outliers.size == 4
        S = d.W_true @ d.H_true
        assert not np.allclose(d.signal[:, d.outliers], S[:, d.outliers])
        keep = np.setdiff1d(np.arange(40), d.outliers)
        assert np.array_equal(d.signal[:, keep], S[:, keep])
        assert np.all(d.X >= 0)
        assert np.array_equal(d.X, np.maximum(d.signal + d.noise, 0))

    def test_deterministic(self):
        a = generate_synthetic(SynthConfig(**SMALL, seed=9))
        b = generate_synthetic(SynthConfig(**SMALL, seed=9))
        c = generate_synthetic(SynthConfig(**SMALL, seed=10))
        assert np.array_equal(a.X, b.X) and not np.array_equal(a.X, c.X)

    def test_paper_defaults(self):
        cfg = SynthConfig()
        assert (cfg.M, cfg.N, cfg.K) == (2000, 1000, 10)
        assert cfg.cluster_sizes == PAPER_CLUSTER_SIZES and sum(PAPER_CLUSTER_SIZES) == 1000

    def test_invalid(self):
        with pytest.raises(ValueError):
            SynthConfig(M=3, N=10, K=2, cluster_sizes=(5, 4))
        with pytest.raises(ValueError):
            SynthConfig(M=3, N=10, K=2, cluster_sizes=(5, 5), outlier_frac=1.0)
        with pytest.raises(ValueError):
            SynthConfig(M=3, N=10, K=3, cluster_sizes=(5, 5))


def test_bad_init_scenario():
    sc = bad_init_scenario(seed=3)
    N = sum(BAD_INIT_SIZES)
    assert sc.X.shape == (3, N) and np.all(sc.X >= 0)
    assert np.all(sc.X[2] == 10.0)
    assert np.array_equal(sc.X[:2], sc.points)
    # every initial centroid is a sample of the largest cluster
    assert np.all(sc.truth[sc.init_index] == 0)
    assert np.array_equal(sc.init_W, sc.X[:, sc.init_index])
    assert sc.init_H.shape == (3, N)
    again = bad_init_scenario(seed=3)
    assert np.array_equal(again.X, sc.X) and np.array_equal(again.init_H, sc.init_H)


class TestMatrixIO:
    def test_csv_example(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("1,2\n3,4\n")
        assert np.array_equal(mio.read_matrix(p), [[1, 2], [3, 4]])

    def test_mtx_coordinate(self, tmp_path):
        p = tmp_path / "a.mtx"
        p.write_text("%%MatrixMarket matrix coordinate real general\n% comment\n3 2 3\n1 1 1.5\n2 2 2\n3 1 4\n")
        assert np.array_equal(mio.read_matrix(p), [[1.5, 0], [0, 2], [4, 0]])

    @pytest.mark.parametrize("fmt,name", [("csv", "m.csv"), ("matrix-market", "m.mtx")])
    def test_round_trip_exact(self, tmp_path, rng, fmt, name):
        A = rng.uniform(size=(5, 7)) * 10 ** rng.uniform(-5, 5, size=(5, 7))
        A[1, 2] = 0.0
        mio.write_matrix(tmp_path / name, A, fmt)
        assert np.array_equal(mio.read_matrix(tmp_path / name, fmt), A)

    def test_negative_cell(self, tmp_path):
        p = tmp_path / "neg.csv"
        p.write_text("1,2\n3,-1\n")
        with pytest.raises(ValueError, match=r"X\[1, 1\] = -1"):
            mio.read_matrix(p)

    def test_parse_error_location(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("1,2,3\n4,x,6\n")
        with pytest.raises(mio.MatrixParseError) as info:
            mio.read_matrix(p)
        assert (info.value.line, info.value.column) == (2, 2)
        p.write_text("1,2,3\n4,5\n")
        with pytest.raises(mio.MatrixParseError, match="expected 3 fields") as info:
            mio.read_matrix(p)
        assert info.value.line == 2
        p.write_text("1,nan\n")
        with pytest.raises(mio.MatrixParseError):
            mio.read_matrix(p)
        p.write_text("\n")
        with pytest.raises(mio.MatrixParseError):
            mio.read_matrix(p)

    @pytest.mark.parametrize("header", [
        "%%MatrixMarket matrix coordinate complex general",
        "%%MatrixMarket matrix coordinate real symmetric",
        "%%MatrixMarket vector coordinate real general",
        "garbage",
    ])
    def test_mtx_rejects(self, tmp_path, header):
        p = tmp_path / "x.mtx"
        p.write_text(header + "\n1 1 1\n1 1 1\n")
        with pytest.raises(mio.MatrixParseError):
            mio.read_matrix(p)

    def test_unknown_format(self, tmp_path):
        with pytest.raises(ValueError):
            mio.read_matrix(tmp_path / "a.csv", "xlsx")


class TestLabelsAndReports:
    def test_labels_round_trip(self, tmp_path, rng):
        lab = rng.integers(0, 9, 50)
        mio.write_labels(tmp_path / "l.txt", lab)
        assert np.array_equal(mio.read_labels(tmp_path / "l.txt"), lab)

    def test_bad_label(self, tmp_path):
        (tmp_path / "l.txt").write_text("1\n2\nfoo\n")
        with pytest.raises(mio.MatrixParseError) as info:
            mio.read_labels(tmp_path / "l.txt")
        assert info.value.line == 3

    def test_report_canonical(self, tmp_path):
        rep = {"b": np.float64(1.5), "a": [np.int64(3), np.inf, np.nan], "c": {"z": True, "y": np.arange(2)}}
        mio.write_report(tmp_path / "r.json", rep)
        text = (tmp_path / "r.json").read_text()
        back = mio.read_report(tmp_path / "r.json")
        assert back["schema_id"] == mio.REPORT_SCHEMA_ID
        assert back["a"] == [3, "inf", "nan"]
        assert mio.dumps_report(back) == text
        assert list(back) == sorted(back)
