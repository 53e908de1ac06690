"""Synthetic dataset generator following the model's own generative story:
ratings from biased low-rank factors plus Gaussian noise, trust edges drawn
by user-factor cosine (homophily), and per-item documents drawn from the
softmax-coupled topic and word distributions.

Output is a string-keyed RawDataset so synthetic data flows through the
same ingestion path as real files.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .data import SocialGraph
from .errors import DataError
from .ingest import RawDataset
from .model import topic_matrix, word_matrix
from .social import pagerank, rank_users


@dataclass(frozen=True)
class SynthConfig:
    n_users: int = 200
    n_items: int = 300
    n_factors: int = 5
    density: float = 0.05
    doc_length: int = 30
    vocab_size: int = 50
    rating_mean: float = 3.5
    bias_scale: float = 0.2
    factor_scale: float = 0.7
    noise: float = 0.45
    out_neighbors: int = 10
    homophily: float = 4.0
    topic_sharpness: float = 8.0
    peakiness: float = 3.0
    #: how strongly per-user noise grows with reputation rank; 1.0 makes
    #: the reputation weights exact inverse-variance weights, 0.0 gives
    #: homogeneous noise
    reliability_spread: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.density <= 1.0:
            raise DataError("density must lie in (0, 1]")
        if self.out_neighbors >= self.n_users:
            raise DataError("out_neighbors must be below n_users")


def _word_weights(cfg, rng):
    """Block-peaked unnormalized word scores: each topic favors its own
    contiguous vocabulary slice, so documents are informative about topics."""
    weights = rng.normal(0.0, 0.1, (cfg.n_factors, cfg.vocab_size))
    block = max(1, cfg.vocab_size // cfg.n_factors)
    for f in range(cfg.n_factors):
        start = (f * block) % cfg.vocab_size
        weights[f, start:start + block] += cfg.topic_sharpness
    return weights


def generate(cfg: SynthConfig) -> RawDataset:
    """Draw one dataset; deterministic for a fixed config."""
    rng = np.random.default_rng(cfg.seed)
    n_users, n_items, n_factors = cfg.n_users, cfg.n_items, cfg.n_factors

    user_factors = rng.normal(0.0, cfg.factor_scale, (n_users, n_factors))
    item_factors = rng.normal(0.0, cfg.factor_scale, (n_items, n_factors))
    user_bias = rng.normal(0.0, cfg.bias_scale, n_users)
    item_bias = rng.normal(0.0, cfg.bias_scale, n_items)

    # trust edges: each user links to others with probability rising in
    # user-factor cosine, so linked users have correlated preferences
    norms = np.linalg.norm(user_factors, axis=1)
    unit = user_factors / np.where(norms > 0, norms, 1.0)[:, None]
    cos = unit @ unit.T
    edge_src, edge_dst = [], []
    for i in range(n_users):
        logits = cfg.homophily * cos[i]
        logits[i] = -np.inf
        probs = np.exp(logits - logits.max())
        probs[i] = 0.0
        probs /= probs.sum()
        picks = rng.choice(n_users, size=cfg.out_neighbors, replace=False,
                           p=probs)
        edge_src.extend([i] * len(picks))
        edge_dst.extend(int(k) for k in picks)

    # per-user noise grows with reputation rank, matching the model's
    # reading of the rating weights as reliability; normalized so the
    # average noise variance stays at noise^2
    graph = SocialGraph.from_edges(n_users, edge_src, edge_dst)
    weight = 1.0 / (1.0 + np.log(rank_users(pagerank(graph))))
    inv = (1.0 / weight) ** cfg.reliability_spread
    user_noise = cfg.noise * np.sqrt(inv / inv.mean())

    n_ratings = max(1, int(round(cfg.density * n_users * n_items)))
    cells = rng.choice(n_users * n_items, size=n_ratings, replace=False)
    users, items = cells // n_items, cells % n_items
    scores = (cfg.rating_mean + user_bias[users] + item_bias[items]
              + np.einsum("nf,nf->n", user_factors[users],
                          item_factors[items])
              + user_noise[users] * rng.normal(0.0, 1.0, n_ratings))

    theta = topic_matrix(item_factors, cfg.peakiness)
    phi = word_matrix(_word_weights(cfg, rng))
    item_docs = []
    for j in range(n_items):
        topics = rng.choice(n_factors, size=cfg.doc_length, p=theta[j])
        words = np.array([rng.choice(cfg.vocab_size, p=phi[f])
                          for f in topics])
        item_docs.append(words)

    # spread each item's document across that item's rating records, so a
    # train/test split withholds only the test records' share of the text
    records_of_item = {}
    for r, j in enumerate(items):
        records_of_item.setdefault(int(j), []).append(r)
    review_tokens = [[] for _ in range(n_ratings)]
    for j, recs in records_of_item.items():
        for n, w in enumerate(item_docs[j]):
            review_tokens[recs[n % len(recs)]].append(int(w))
    vocab_words = [f"w{idx:04d}" for idx in range(cfg.vocab_size)]
    rating_records = []
    for r in range(n_ratings):
        review = " ".join(vocab_words[w] for w in review_tokens[r])
        rating_records.append((f"u{users[r]:05d}", f"i{int(items[r]):05d}",
                               float(scores[r]), review))
    relation_records = tuple((f"u{a:05d}", f"u{b:05d}")
                             for a, b in zip(edge_src, edge_dst))
    return RawDataset(tuple(rating_records), relation_records)


def write_tsv(raw: RawDataset, ratings_path, relations_path):
    with open(ratings_path, "w", encoding="utf-8") as fh:
        for user, item, score, review in raw.rating_records:
            line = f"{user}\t{item}\t{score!r}"
            if review:
                line += f"\t{review}"
            fh.write(line + "\n")
    with open(relations_path, "w", encoding="utf-8") as fh:
        for a, b in raw.relation_records:
            fh.write(f"{a}\t{b}\n")


def describe(cfg: SynthConfig) -> dict:
    return asdict(cfg)
