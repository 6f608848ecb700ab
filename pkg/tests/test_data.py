import io
import math
from collections import Counter

import numpy as np
import pytest

from sqnopt.data import (
    Dataset,
    EpochSampler,
    LibsvmFormatError,
    generate_synthetic_binary,
    generate_synthetic_multiclass,
    next_gradient_batch,
    parse_libsvm,
    sample_hessian_batch,
    train_test_split,
    write_libsvm,
)


class TestParseLibsvm:
    def test_basic(self):
        d = parse_libsvm("1 1:0.5 3:1.0\n0 2:2.0")
        assert d.num_examples == 2
        assert d.dim == 3
        assert d.labels.tolist() == [1, 0]
        np.testing.assert_array_equal(d.X.toarray(), [[0.5, 0.0, 1.0], [0.0, 2.0, 0.0]])

    def test_sign_labels(self):
        assert parse_libsvm("+1 1:1\n-1 1:2").labels.tolist() == [1, 0]

    def test_non_increasing(self):
        with pytest.raises(LibsvmFormatError, match="line 1"):
            parse_libsvm("1 3:1 2:1")

    def test_zero_index(self):
        with pytest.raises(LibsvmFormatError):
            parse_libsvm("1 0:1")

    def test_malformed_reports_line(self):
        with pytest.raises(LibsvmFormatError, match="line 2"):
            parse_libsvm("1 1:1\n0 2-1\n")

    def test_comment_rejected(self):
        with pytest.raises(LibsvmFormatError):
            parse_libsvm("1 1:1 # note\n")

    def test_expected_dim(self):
        assert parse_libsvm("1 2:1", expected_dim=10).dim == 10
        with pytest.raises(ValueError):
            parse_libsvm("1 5:1", expected_dim=3)

    def test_blank_lines_skipped(self):
        assert parse_libsvm("\n1 1:1\n\n0 1:2\n").num_examples == 2

    def test_multiclass_ids(self):
        d = parse_libsvm("0 1:1\n2 2:1\n1 1:1")
        assert d.num_classes == 3
        assert d.labels.tolist() == [0, 2, 1]

    def test_roundtrip(self):
        text = "1 1:0.5 3:1.0 7:-2.25\n0 2:2.0\n1 4:0.1\n"
        d = parse_libsvm(text)
        buf = io.StringIO()
        write_libsvm(d, buf)
        again = parse_libsvm(buf.getvalue(), expected_dim=d.dim)
        assert again.equals(d)
        for a, b in zip(text.splitlines(), buf.getvalue().splitlines()):
            assert sorted(a.split()[1:]) == sorted(b.split()[1:])

    def test_synthetic_roundtrip(self):
        d, _ = generate_synthetic_binary(5, 30, seed=3)
        buf = io.StringIO()
        write_libsvm(d, buf)
        assert parse_libsvm(buf.getvalue(), expected_dim=5).equals(d)


class TestSynthetic:
    def test_shape(self):
        d, w = generate_synthetic_binary(n=50, N=7000, seed=0)
        assert (d.num_examples, d.dim) == (7000, 50)
        assert w.shape == (50,)
        assert np.all(np.abs(w) <= 1)
        np.testing.assert_allclose(np.linalg.norm(d.X.toarray(), axis=1), 1.0, rtol=1e-12)

    def test_deterministic(self):
        a, wa = generate_synthetic_binary(8, 200, seed=11)
        b, wb = generate_synthetic_binary(8, 200, seed=11)
        assert a.equals(b)
        np.testing.assert_array_equal(wa, wb)
        c, _ = generate_synthetic_binary(8, 200, seed=12)
        assert not a.equals(c)

    def test_label_mean_at_zero_weights(self):
        # c(0; x) = 1/2 for every x, so labels are fair coin flips
        d, _ = generate_synthetic_binary(5, 100_000, seed=1, w_scale=0.0)
        assert abs(d.labels.mean() - 0.5) <= 0.01

    def test_multiclass(self):
        d, W = generate_synthetic_multiclass(6, 4, 500, seed=2)
        assert d.num_classes == 4 and d.dim == 6 and W.shape == (24,)
        assert set(np.unique(d.labels)) <= set(range(4))


class TestSplit:
    def test_sizes(self):
        d, _ = generate_synthetic_binary(3, 100, seed=0)
        tr, te = train_test_split(d, 0.75, seed=0)
        assert (tr.num_examples, te.num_examples) == (75, 25)

    def test_partition(self):
        X = np.arange(4.0).reshape(4, 1) + 1
        d = Dataset(X, [0, 1, 0, 1])
        tr, te = train_test_split(d, 0.5, seed=5)
        assert (tr.num_examples, te.num_examples) == (2, 2)
        vals = sorted(tr.X.toarray().ravel().tolist() + te.X.toarray().ravel().tolist())
        assert vals == [1.0, 2.0, 3.0, 4.0]

    def test_deterministic(self):
        d, _ = generate_synthetic_binary(3, 50, seed=0)
        a = train_test_split(d, 0.6, seed=9)
        b = train_test_split(d, 0.6, seed=9)
        assert a[0].equals(b[0]) and a[1].equals(b[1])

    def test_ceil_size(self):
        d, _ = generate_synthetic_binary(2, 10, seed=0)
        assert train_test_split(d, 0.7, seed=0)[0].num_examples == 7
        assert train_test_split(d, 0.71, seed=0)[0].num_examples == 8

    @pytest.mark.parametrize("f", [0.0, 1.0, 0.95, 0.999])
    def test_empty_side(self, f):
        d, _ = generate_synthetic_binary(2, 10, seed=0)
        with pytest.raises(ValueError):
            train_test_split(d, f, seed=0)


class TestEpochSampler:
    def test_disjoint_within_epoch(self):
        s = EpochSampler(100, seed=0)
        batches = [next_gradient_batch(s, 10) for _ in range(10)]
        flat = np.concatenate(batches)
        assert len(set(flat.tolist())) == 100

    def test_small_epoch(self):
        s = EpochSampler(4, seed=1)
        got = np.concatenate([s.next_batch(2), s.next_batch(2)])
        assert sorted(got.tolist()) == [0, 1, 2, 3]

    @pytest.mark.parametrize("N,b", [(7, 3), (10, 4), (5, 5), (9, 2), (13, 6)])
    def test_boundary_spanning_counts(self, N, b):
        # brute-force bookkeeping of every emitted index over ceil(N/b) calls
        s = EpochSampler(N, seed=N * 31 + b)
        counts = Counter()
        for _ in range(math.ceil(N / b)):
            batch = s.next_batch(b)
            assert len(batch) == b
            counts.update(batch.tolist())
        assert set(counts) == set(range(N))
        assert 1 <= min(counts.values()) and max(counts.values()) <= 2

    def test_every_batch_has_b(self):
        s = EpochSampler(7, seed=0)
        assert all(len(s.next_batch(3)) == 3 for _ in range(20))

    def test_full_epoch_exactly_once(self):
        s = EpochSampler(12, seed=2)
        for _ in range(3):
            got = np.concatenate([s.next_batch(4) for _ in range(3)])
            assert sorted(got.tolist()) == list(range(12))

    def test_seeded(self):
        a = EpochSampler(50, seed=3)
        b = EpochSampler(50, seed=3)
        for _ in range(12):
            np.testing.assert_array_equal(a.next_batch(9), b.next_batch(9))

    def test_bad_batch(self):
        with pytest.raises(ValueError):
            EpochSampler(5, seed=0).next_batch(6)


class TestHessianSampler:
    def test_full(self):
        rng = np.random.default_rng(0)
        assert sorted(sample_hessian_batch(rng, 5, 5).tolist()) == [0, 1, 2, 3, 4]

    def test_distinct(self):
        rng = np.random.default_rng(0)
        S = sample_hessian_batch(rng, 10, 3)
        assert len(set(S.tolist())) == 3 and all(0 <= i < 10 for i in S)

    def test_too_large(self):
        with pytest.raises(ValueError):
            sample_hessian_batch(np.random.default_rng(0), 4, 5)

    def test_inclusion_frequency(self):
        # exact inclusion probability of each index is b_H / N = 0.3
        rng = np.random.default_rng(123)
        counts = np.zeros(10)
        for _ in range(10_000):
            counts[sample_hessian_batch(rng, 10, 3)] += 1
        np.testing.assert_allclose(counts / 10_000, 0.3, atol=0.02)

    def test_streams_differ(self):
        g = EpochSampler(1000, seed=1)
        h = np.random.default_rng(2)
        assert not np.array_equal(g.next_batch(20), sample_hessian_batch(h, 1000, 20))
