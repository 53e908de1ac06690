"""Core in-memory containers: ratings, trust graph, review corpus, model
parameters, and the topic/word occurrence counts used by the review term.

All containers are immutable after construction; training replaces them
instead of mutating in place. Review documents are indexed by item: doc j
is the concatenation of every review written for item j, so no separate
document id is stored on the rating triples.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .errors import DataError


def _frozen_array(values, dtype):
    arr = np.ascontiguousarray(values, dtype=dtype)
    if arr.base is not None or arr is values:
        arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SparseRatings:
    """Observed user-item ratings in coordinate form.

    Triples are kept sorted user-major; `item_order` gives the permutation
    for item-major traversal. `values` holds raw scores, or residuals after
    `center_ratings`, in which case `mean` is the global mean that was
    removed and `centered` is True.
    """

    n_users: int
    n_items: int
    users: np.ndarray = field(repr=False)
    items: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    mean: float = 0.0
    centered: bool = False

    @classmethod
    def from_triples(cls, n_users, n_items, users, items, values, *,
                     mean=None, centered=False):
        users = np.asarray(users, dtype=np.int64).ravel()
        items = np.asarray(items, dtype=np.int64).ravel()
        values = np.asarray(values, dtype=np.float64).ravel()
        if not (len(users) == len(items) == len(values)):
            raise DataError("rating triple arrays differ in length")
        if len(users) and (users.min() < 0 or users.max() >= n_users):
            raise DataError("user id out of range")
        if len(items) and (items.min() < 0 or items.max() >= n_items):
            raise DataError("item id out of range")
        if not np.all(np.isfinite(values)):
            raise DataError("non-finite rating value")
        order = np.lexsort((items, users))
        users, items, values = users[order], items[order], values[order]
        key = users * n_items + items
        if len(key) and np.any(np.diff(key) == 0):
            raise DataError("duplicate rating for a user/item pair")
        if mean is None:
            mean = float(values.mean()) if len(values) and not centered else 0.0
        return cls(
            n_users=int(n_users),
            n_items=int(n_items),
            users=_frozen_array(users, np.int64),
            items=_frozen_array(items, np.int64),
            values=_frozen_array(values, np.float64),
            mean=float(mean),
            centered=bool(centered),
        )

    def __len__(self):
        return len(self.values)

    @cached_property
    def item_order(self):
        """Permutation of the triples into item-major order."""
        return np.lexsort((self.users, self.items))

    def subset(self, indices):
        """New container holding only the selected triples (same id space)."""
        idx = np.asarray(indices, dtype=np.int64)
        return SparseRatings.from_triples(
            self.n_users, self.n_items,
            self.users[idx], self.items[idx], self.values[idx],
            mean=self.mean if self.centered else None,
            centered=self.centered,
        )


def center_ratings(raw: SparseRatings):
    """Remove the global mean from the stored scores.

    Returns the centered container and the mean; the prediction layer adds
    the mean back. The mean is always computed from the ratings given here
    (the training split), never from held-out data.
    """
    if raw.centered:
        raise DataError("ratings are already centered")
    if len(raw) == 0:
        raise DataError("no observations")
    mu = float(raw.values.mean())
    centered = SparseRatings.from_triples(
        raw.n_users, raw.n_items, raw.users, raw.items, raw.values - mu,
        mean=mu, centered=True,
    )
    return centered, mu


@dataclass(frozen=True, eq=False)
class SocialGraph:
    """Directed trust edges (src trusts dst), without self-loops or duplicates."""

    n_users: int
    src: np.ndarray = field(repr=False)
    dst: np.ndarray = field(repr=False)

    @classmethod
    def from_edges(cls, n_users, src, dst):
        src = np.asarray(src, dtype=np.int64).ravel()
        dst = np.asarray(dst, dtype=np.int64).ravel()
        if len(src) != len(dst):
            raise DataError("edge arrays differ in length")
        if len(src) and (min(src.min(), dst.min()) < 0
                         or max(src.max(), dst.max()) >= n_users):
            raise DataError("edge endpoint out of range")
        if np.any(src == dst):
            raise DataError("self-loop edge")
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        key = src * n_users + dst
        if len(key) and np.any(np.diff(key) == 0):
            raise DataError("duplicate edge")
        return cls(int(n_users), _frozen_array(src, np.int64),
                   _frozen_array(dst, np.int64))

    @classmethod
    def empty(cls, n_users):
        return cls.from_edges(n_users, [], [])

    def __len__(self):
        return len(self.src)

    @cached_property
    def out_degree(self):
        return np.bincount(self.src, minlength=self.n_users)

    @cached_property
    def in_degree(self):
        return np.bincount(self.dst, minlength=self.n_users)


@dataclass(frozen=True, eq=False)
class Corpus:
    """Per-item token sequences over a fixed vocabulary.

    Doc index equals item index; items without reviews have empty docs.
    `assignments` is one flat topic id per token, aligned with the
    concatenation of `docs`, or None before initialization.
    """

    vocab: tuple
    docs: tuple = field(repr=False)
    assignments: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def from_docs(cls, vocab, docs, assignments=None):
        vocab = tuple(vocab)
        frozen_docs = []
        for doc in docs:
            arr = np.asarray(doc, dtype=np.int64).ravel()
            if len(arr) and (arr.min() < 0 or arr.max() >= len(vocab)):
                raise DataError("token id outside the vocabulary")
            frozen_docs.append(_frozen_array(arr, np.int64))
        corpus = cls(vocab=vocab, docs=tuple(frozen_docs))
        if assignments is not None:
            corpus = corpus.with_assignments(assignments)
        return corpus

    @classmethod
    def empty(cls, n_docs):
        return cls.from_docs((), [[] for _ in range(n_docs)],
                             assignments=np.zeros(0, dtype=np.int64))

    @property
    def n_docs(self):
        return len(self.docs)

    @cached_property
    def doc_lengths(self):
        return np.array([len(d) for d in self.docs], dtype=np.int64)

    @cached_property
    def n_tokens(self):
        return int(self.doc_lengths.sum())

    @cached_property
    def flat_tokens(self):
        if self.n_docs == 0:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate([d for d in self.docs] or [np.zeros(0, np.int64)])

    @cached_property
    def flat_docs(self):
        """Doc index of every token in `flat_tokens` order."""
        return np.repeat(np.arange(self.n_docs, dtype=np.int64),
                         self.doc_lengths)

    def with_assignments(self, assignments):
        z = np.asarray(assignments, dtype=np.int64).ravel()
        if len(z) != self.n_tokens:
            raise DataError("assignment array has the wrong length")
        if len(z) and z.min() < 0:
            raise DataError("invalid topic id")
        return replace(self, assignments=_frozen_array(z, np.int64))


@dataclass(frozen=True, eq=False)
class ModelParams:
    """All fitted parameters plus the fixed global mean.

    Factor matrices are row-per-entity: user_factors is (n_users, F),
    item_factors is (n_items, F). `word_weights` holds the unnormalized
    per-topic word scores; the softmax of a row is that topic's word
    distribution. `peakiness` scales item factors inside the softmax that
    produces per-item topic proportions.
    """

    mu: float
    user_bias: np.ndarray = field(repr=False)
    item_bias: np.ndarray = field(repr=False)
    user_factors: np.ndarray = field(repr=False)
    item_factors: np.ndarray = field(repr=False)
    social_corr: np.ndarray = field(repr=False)
    word_weights: np.ndarray = field(repr=False)
    peakiness: float = 1.0

    def __post_init__(self):
        n_users, f = self.user_factors.shape
        n_items, f2 = self.item_factors.shape
        if f != f2 or self.social_corr.shape != (f, f) \
                or self.word_weights.shape[0] != f \
                or self.user_bias.shape != (n_users,) \
                or self.item_bias.shape != (n_items,):
            raise DataError("parameter block shapes are inconsistent")

    @property
    def n_users(self):
        return self.user_factors.shape[0]

    @property
    def n_items(self):
        return self.item_factors.shape[0]

    @property
    def n_factors(self):
        return self.user_factors.shape[1]

    @property
    def vocab_size(self):
        return self.word_weights.shape[1]

    @classmethod
    def zeros(cls, mu, n_users, n_items, n_factors, vocab_size, peakiness=1.0):
        return cls(
            mu=float(mu),
            user_bias=np.zeros(n_users),
            item_bias=np.zeros(n_items),
            user_factors=np.zeros((n_users, n_factors)),
            item_factors=np.zeros((n_items, n_factors)),
            social_corr=np.zeros((n_factors, n_factors)),
            word_weights=np.zeros((n_factors, vocab_size)),
            peakiness=float(peakiness),
        )


@dataclass(frozen=True, eq=False)
class TopicCounts:
    """Occurrence statistics of the current topic assignments.

    doc_topic[j, f]  — tokens of doc j assigned to topic f
    doc_totals[j]    — tokens in doc j
    topic_word[f, w] — occurrences of word w assigned to topic f
    topic_totals[f]  — tokens assigned to topic f overall
    """

    doc_topic: np.ndarray = field(repr=False)
    doc_totals: np.ndarray = field(repr=False)
    topic_word: np.ndarray = field(repr=False)
    topic_totals: np.ndarray = field(repr=False)


def rebuild_counts(corpus: Corpus, n_topics: int) -> TopicCounts:
    """Tally topic occurrences from scratch; pure function of the corpus."""
    z = corpus.assignments
    if z is None:
        raise DataError("assignments not populated")
    if len(z) and z.max() >= n_topics:
        raise DataError("invalid topic id")
    n_docs = corpus.n_docs
    n_words = len(corpus.vocab)
    doc_topic = np.bincount(corpus.flat_docs * n_topics + z,
                            minlength=n_docs * n_topics)
    doc_topic = doc_topic.reshape(n_docs, n_topics)
    topic_word = np.bincount(z * n_words + corpus.flat_tokens,
                             minlength=n_topics * n_words)
    topic_word = topic_word.reshape(n_topics, n_words)
    return TopicCounts(
        doc_topic=_frozen_array(doc_topic, np.int64),
        doc_totals=_frozen_array(doc_topic.sum(axis=1), np.int64),
        topic_word=_frozen_array(topic_word, np.int64),
        topic_totals=_frozen_array(topic_word.sum(axis=1), np.int64),
    )


def validate_topic_counts(counts: TopicCounts, corpus: Corpus | None = None):
    """Raise DataError unless the count tables are internally consistent."""
    if np.any(counts.doc_topic < 0) or np.any(counts.topic_word < 0):
        raise DataError("negative count")
    if np.any(counts.doc_topic.sum(axis=1) != counts.doc_totals):
        raise DataError("doc totals disagree with per-topic doc counts")
    if np.any(counts.topic_word.sum(axis=1) != counts.topic_totals):
        raise DataError("topic totals disagree with per-word topic counts")
    if counts.doc_topic.sum() != counts.topic_word.sum():
        raise DataError("doc-side and word-side totals disagree")
    if corpus is not None:
        if np.any(counts.doc_totals != corpus.doc_lengths):
            raise DataError("doc totals disagree with document lengths")
        if counts.doc_topic.sum() != corpus.n_tokens:
            raise DataError("grand total disagrees with the token count")


@dataclass(frozen=True, eq=False)
class TrainingSet:
    """Bundle of the three inputs consumed by the objective and trainer."""

    ratings: SparseRatings
    graph: SocialGraph
    corpus: Corpus

    def __post_init__(self):
        if self.graph.n_users != self.ratings.n_users:
            raise DataError("graph and ratings disagree on the user count")
        if self.corpus.n_docs != self.ratings.n_items:
            raise DataError("corpus and ratings disagree on the item count")
