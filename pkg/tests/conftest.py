"""Shared helpers: random but reproducible problem instances with all three
data sources populated, plus the parameter points used by the math tests."""

from dataclasses import dataclass

import numpy as np
import pytest

from mr3rec.data import (Corpus, ModelParams, SocialGraph, SparseRatings,
                         TrainingSet, center_ratings, rebuild_counts)
from mr3rec.model import VariantConfig
from mr3rec.social import build_context


@dataclass
class Instance:
    data: TrainingSet          # centered ratings + graph + corpus
    raw: SparseRatings         # uncentered ratings (same triples)
    context: object
    counts: object
    params: ModelParams
    mu: float
    cfg: VariantConfig


def random_params(rng, n_users, n_items, n_factors, vocab_size, scale=0.5):
    return ModelParams(
        mu=0.0,
        user_bias=rng.normal(0.0, scale, n_users),
        item_bias=rng.normal(0.0, scale, n_items),
        user_factors=rng.normal(0.0, scale, (n_users, n_factors)),
        item_factors=rng.normal(0.0, scale, (n_items, n_factors)),
        social_corr=rng.normal(0.0, scale, (n_factors, n_factors)),
        word_weights=rng.normal(0.0, scale, (n_factors, vocab_size)),
        peakiness=float(1.0 + rng.normal(0.0, 0.2)),
    )


def make_instance(seed, n_users=8, n_items=10, n_factors=3, vocab_size=20,
                  n_tokens=50, n_edges=15, n_ratings=40,
                  cfg=VariantConfig(norm_penalty=0.3, social_weight=0.7,
                                    review_weight=0.4)) -> Instance:
    rng = np.random.default_rng(seed)
    cells = rng.choice(n_users * n_items, size=n_ratings, replace=False)
    users, items = cells // n_items, cells % n_items
    raw = SparseRatings.from_triples(
        n_users, n_items, users, items, rng.normal(3.5, 1.0, n_ratings))

    pairs = [(i, k) for i in range(n_users) for k in range(n_users)
             if i != k]
    chosen = rng.choice(len(pairs), size=n_edges, replace=False)
    graph = SocialGraph.from_edges(n_users,
                                   [pairs[e][0] for e in chosen],
                                   [pairs[e][1] for e in chosen])
    context = build_context(graph, raw)

    doc_of_token = np.sort(rng.integers(0, n_items, n_tokens))
    docs = [[] for _ in range(n_items)]
    for d in doc_of_token:
        docs[d].append(int(rng.integers(0, vocab_size)))
    vocab = tuple(f"w{i:02d}" for i in range(vocab_size))
    corpus = Corpus.from_docs(vocab, docs).with_assignments(
        rng.integers(0, n_factors, n_tokens))
    counts = rebuild_counts(corpus, n_factors)

    centered, mu = center_ratings(raw)
    params = random_params(rng, n_users, n_items, n_factors, vocab_size)
    mu_params = ModelParams(
        mu=mu, user_bias=params.user_bias, item_bias=params.item_bias,
        user_factors=params.user_factors, item_factors=params.item_factors,
        social_corr=params.social_corr, word_weights=params.word_weights,
        peakiness=params.peakiness)
    return Instance(TrainingSet(centered, graph, corpus), raw, context,
                    counts, mu_params, mu, cfg)


@pytest.fixture
def instance():
    return make_instance(12345)
