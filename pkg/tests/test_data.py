import math

import numpy as np
import pytest

from mr3rec.data import (Corpus, ModelParams, SocialGraph, SparseRatings,
                         center_ratings, rebuild_counts,
                         validate_topic_counts)
from mr3rec.errors import DataError
from mr3rec.model import predict

from oracles import tally_counts


def _ratings(values, n_users=None, n_items=None):
    users = list(range(len(values)))
    n = n_users or len(values)
    return SparseRatings.from_triples(n, n_items or 1, users,
                                      [0] * len(values), values)


class TestCenterRatings:
    def test_constant_ratings_center_to_zero(self):
        centered, mu = center_ratings(_ratings([3.0, 3.0, 3.0]))
        assert mu == 3.0
        assert np.all(centered.values == 0.0)
        assert centered.centered

    def test_symmetric_values(self):
        centered, mu = center_ratings(_ratings([5.0, 3.0, 1.0]))
        assert mu == 3.0
        assert sorted(centered.values.tolist()) == [-2.0, 0.0, 2.0]

    def test_mean_matches_independent_summation(self):
        rng = np.random.default_rng(7)
        values = rng.normal(3.0, 1.2, 100)
        _, mu = center_ratings(_ratings(values.tolist()))
        oracle = math.fsum(float(v) for v in values) / len(values)
        assert abs(mu - oracle) < 1e-12

    def test_residual_mean_is_zero(self):
        rng = np.random.default_rng(8)
        centered, _ = center_ratings(_ratings(rng.uniform(1, 5, 64)))
        assert abs(centered.values.mean()) < 1e-10

    def test_empty_ratings_rejected(self):
        empty = SparseRatings.from_triples(2, 2, [], [], [])
        with pytest.raises(DataError, match="no observations"):
            center_ratings(empty)

    def test_double_centering_rejected(self):
        centered, _ = center_ratings(_ratings([1.0, 2.0]))
        with pytest.raises(DataError):
            center_ratings(centered)


class TestSparseRatings:
    def test_duplicate_pair_rejected(self):
        with pytest.raises(DataError, match="duplicate"):
            SparseRatings.from_triples(2, 2, [0, 0], [1, 1], [3.0, 4.0])

    def test_out_of_range_ids_rejected(self):
        with pytest.raises(DataError):
            SparseRatings.from_triples(2, 2, [0, 2], [0, 1], [3.0, 4.0])

    def test_triples_sorted_user_major(self):
        r = SparseRatings.from_triples(3, 3, [2, 0, 1, 0], [0, 1, 2, 0],
                                       [1.0, 2.0, 3.0, 4.0])
        assert r.users.tolist() == [0, 0, 1, 2]
        assert r.items.tolist() == [0, 1, 2, 0]

    def test_item_order_view(self):
        r = SparseRatings.from_triples(3, 3, [2, 0, 1], [0, 1, 0],
                                       [1.0, 2.0, 3.0])
        by_item = r.items[r.item_order]
        assert by_item.tolist() == sorted(by_item.tolist())


class TestSocialGraph:
    def test_self_loop_rejected(self):
        with pytest.raises(DataError, match="self-loop"):
            SocialGraph.from_edges(3, [0, 1], [1, 1])

    def test_duplicate_edge_rejected(self):
        with pytest.raises(DataError, match="duplicate"):
            SocialGraph.from_edges(3, [0, 0], [1, 1])

    def test_degree_sums_match_edge_count(self):
        g = SocialGraph.from_edges(4, [0, 1, 2, 0], [1, 2, 0, 3])
        assert g.out_degree.sum() == len(g) == g.in_degree.sum()


class TestRebuildCounts:
    def test_single_token(self):
        corpus = Corpus.from_docs(("aa",), [[0]], assignments=[0])
        counts = rebuild_counts(corpus, 3)
        assert counts.doc_topic[0].tolist() == [1, 0, 0]
        assert counts.doc_totals[0] == 1
        assert counts.topic_word[0, 0] == 1

    def test_empty_doc(self):
        corpus = Corpus.from_docs(("aa",), [[0], []], assignments=[1])
        counts = rebuild_counts(corpus, 2)
        assert counts.doc_topic[1].tolist() == [0, 0]
        assert counts.doc_totals[1] == 0

    def test_matches_naive_tally(self):
        rng = np.random.default_rng(42)
        docs = [rng.integers(0, 12, rng.integers(0, 80)).tolist()
                for _ in range(5)]
        n_tokens = sum(len(d) for d in docs)
        corpus = Corpus.from_docs(
            tuple(f"w{i}" for i in range(12)), docs,
            assignments=rng.integers(0, 4, n_tokens))
        counts = rebuild_counts(corpus, 4)
        doc_topic, topic_word = tally_counts(corpus, 4)
        assert np.array_equal(counts.doc_topic, doc_topic)
        assert np.array_equal(counts.topic_word, topic_word)
        validate_topic_counts(counts, corpus)

    def test_idempotent_and_token_order_independent(self):
        rng = np.random.default_rng(3)
        tokens = rng.integers(0, 6, 40)
        z = rng.integers(0, 3, 40)
        corpus = Corpus.from_docs(tuple("abcdef"), [tokens],
                                  assignments=z)
        first = rebuild_counts(corpus, 3)
        again = rebuild_counts(corpus, 3)
        assert np.array_equal(first.doc_topic, again.doc_topic)
        perm = rng.permutation(40)
        shuffled = Corpus.from_docs(tuple("abcdef"), [tokens[perm]],
                                    assignments=z[perm])
        other = rebuild_counts(shuffled, 3)
        assert np.array_equal(first.doc_topic, other.doc_topic)
        assert np.array_equal(first.topic_word, other.topic_word)

    def test_bad_topic_id_rejected(self):
        corpus = Corpus.from_docs(("aa",), [[0]], assignments=[5])
        with pytest.raises(DataError, match="invalid topic id"):
            rebuild_counts(corpus, 3)

    def test_missing_assignments_rejected(self):
        corpus = Corpus.from_docs(("aa",), [[0]])
        with pytest.raises(DataError, match="not populated"):
            rebuild_counts(corpus, 3)


def test_zero_params_predict_mean_everywhere():
    # exhaustive over a small instance: centering then predicting with
    # all-zero parameters returns the mean for every pair
    rng = np.random.default_rng(11)
    raw = SparseRatings.from_triples(
        4, 5, [0, 1, 2, 3, 0], [0, 1, 2, 3, 4], rng.uniform(1, 5, 5))
    _, mu = center_ratings(raw)
    params = ModelParams.zeros(mu, 4, 5, 3, 7)
    for i in range(4):
        for j in range(5):
            assert predict(params, i, j) == mu


def test_corpus_assignment_length_checked():
    corpus = Corpus.from_docs(("aa", "bb"), [[0, 1], [1]])
    with pytest.raises(DataError, match="wrong length"):
        corpus.with_assignments([0, 1])
