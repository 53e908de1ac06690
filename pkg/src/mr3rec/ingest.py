"""Parsing and preprocessing: tab-separated rating and relation files in,
dense-id dataset out, with review text tokenized against a frequency-capped
vocabulary and all reviews of an item aggregated into that item's document.

Input formats (UTF-8, tab-separated):

    ratings:   user <TAB> item <TAB> score [<TAB> review text]
    relations: truster <TAB> trustee
    stoplist:  one word per line

Keys are opaque strings remapped to dense ids in first-seen order, users
scanned from rating records then relation records. Preprocessing is
deterministic: identical input files produce identical datasets.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .data import Corpus, SocialGraph, SparseRatings
from .errors import DataError

# Tokens are lowercase ASCII-alphanumeric runs of length >= 2 that are not
# on the stoplist; the rule is recorded in the manifest for reproducibility.
TOKEN_RULE = "lowercase; split on non-alphanumeric; drop stopwords and single characters"
_TOKEN_RE = re.compile(r"[a-z0-9]+")

DEFAULT_STOPWORDS = frozenset("""
a about above after again against all am an and any are aren't as at be
because been before being below between both but by can't cannot could
couldn't did didn't do does doesn't doing don't down during each few for
from further had hadn't has hasn't have haven't having he he'd he'll he's
her here here's hers herself him himself his how how's i i'd i'll i'm i've
if in into is isn't it it's its itself let's me more most mustn't my myself
no nor not of off on once only or other ought our ours ourselves out over
own same shan't she she'd she'll she's should shouldn't so some such than
that that's the their theirs them themselves then there there's these they
they'd they'll they're they've this those through to too under until up
very was wasn't we we'd we'll we're we've were weren't what what's when
when's where where's which while who who's whom why why's with won't would
wouldn't you you'd you'll you're you've your yours yourself yourselves
""".split())


def tokenize(text: str, stoplist=DEFAULT_STOPWORDS) -> list:
    """Lowercase, split on non-alphanumeric runs, drop stoplist members and
    single-character tokens."""
    return [tok for tok in _TOKEN_RE.findall(text.lower())
            if len(tok) >= 2 and tok not in stoplist]


def build_vocabulary(docs, max_size: int) -> list:
    """The `max_size` most frequent tokens, most frequent first; ties broken
    lexicographically ascending. Out-of-vocabulary tokens are dropped by
    the callers downstream."""
    if max_size < 1:
        raise DataError("vocabulary size must be >= 1")
    freq = Counter()
    for doc in docs:
        freq.update(doc)
    ranked = sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))
    return [word for word, _ in ranked[:max_size]]


def load_stoplist(path) -> frozenset:
    with open(path, "r", encoding="utf-8") as fh:
        return frozenset(line.strip().lower() for line in fh if line.strip())


@dataclass(frozen=True)
class RawDataset:
    """String-keyed records as parsed from the input files."""

    rating_records: tuple  # (user_key, item_key, score, review_text)
    relation_records: tuple  # (truster_key, trustee_key)


def read_ratings_file(path) -> tuple:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t", 3)
            if len(parts) < 3:
                raise DataError(f"{path}:{lineno}: expected "
                                "user<TAB>item<TAB>score[<TAB>review]")
            try:
                score = float(parts[2])
            except ValueError:
                raise DataError(f"{path}:{lineno}: bad score "
                                f"{parts[2]!r}") from None
            review = parts[3] if len(parts) > 3 else ""
            records.append((parts[0], parts[1], score, review))
    return tuple(records)


def read_relations_file(path) -> tuple:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise DataError(f"{path}:{lineno}: expected truster<TAB>trustee")
            records.append((parts[0], parts[1]))
    return tuple(records)


def load_raw(ratings_path, relations_path=None) -> RawDataset:
    relations = read_relations_file(relations_path) if relations_path else ()
    return RawDataset(read_ratings_file(ratings_path), relations)


def prune_rare(raw: RawDataset, min_count: int = 3) -> RawDataset:
    """Iteratively drop users and items with fewer than `min_count` rating
    occurrences until a fixpoint; relations keep only surviving users."""
    records = list(raw.rating_records)
    while True:
        user_counts = Counter(r[0] for r in records)
        item_counts = Counter(r[1] for r in records)
        kept = [r for r in records
                if user_counts[r[0]] >= min_count
                and item_counts[r[1]] >= min_count]
        if len(kept) == len(records):
            break
        records = kept
    if not records:
        raise DataError("dataset degenerate after pruning")
    survivors = {r[0] for r in records}
    relations = tuple((a, b) for a, b in raw.relation_records
                      if a in survivors and b in survivors)
    return RawDataset(tuple(records), relations)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Dense-id dataset with per-record token streams, ready for splitting.

    Rating records keep their input order; the corpus for any subset of
    records concatenates that subset's tokens per item, in record order.
    """

    n_users: int
    n_items: int
    users: np.ndarray = field(repr=False)
    items: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    record_tokens: tuple = field(repr=False)  # one int64 array per record
    edges_src: np.ndarray = field(repr=False)
    edges_dst: np.ndarray = field(repr=False)
    vocab: tuple = ()
    manifest: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.values)

    def ratings(self, record_indices=None) -> SparseRatings:
        idx = np.arange(len(self)) if record_indices is None \
            else np.asarray(record_indices, dtype=np.int64)
        return SparseRatings.from_triples(
            self.n_users, self.n_items,
            self.users[idx], self.items[idx], self.values[idx])

    def graph(self) -> SocialGraph:
        return SocialGraph.from_edges(self.n_users, self.edges_src,
                                      self.edges_dst)

    def corpus(self, record_indices=None) -> Corpus:
        """Per-item docs from the selected records (all records by default)."""
        idx = range(len(self)) if record_indices is None \
            else np.asarray(record_indices, dtype=np.int64)
        per_item = [[] for _ in range(self.n_items)]
        for r in idx:
            toks = self.record_tokens[int(r)]
            if len(toks):
                per_item[int(self.items[int(r)])].append(toks)
        docs = [np.concatenate(parts) if parts else np.zeros(0, np.int64)
                for parts in per_item]
        return Corpus.from_docs(self.vocab, docs)


def build_dataset(raw: RawDataset, vocab_size: int = 8000,
                  stoplist=DEFAULT_STOPWORDS) -> Dataset:
    """Assign dense ids, tokenize reviews, fix the vocabulary, and map every
    record's tokens into it.

    Only the first rating record for a user/item pair is kept; later
    duplicates (including their review text) are dropped and counted in the
    manifest. Self-relations and duplicate relations are dropped likewise.
    """
    if not raw.rating_records:
        raise DataError("no rating records")
    user_ids, item_ids = {}, {}
    for user_key, item_key, _, _ in raw.rating_records:
        user_ids.setdefault(user_key, len(user_ids))
        item_ids.setdefault(item_key, len(item_ids))
    for a, b in raw.relation_records:
        user_ids.setdefault(a, len(user_ids))
        user_ids.setdefault(b, len(user_ids))

    users, items, values, token_docs = [], [], [], []
    seen_pairs = set()
    duplicate_ratings = 0
    for user_key, item_key, score, review in raw.rating_records:
        pair = (user_ids[user_key], item_ids[item_key])
        if pair in seen_pairs:
            duplicate_ratings += 1
            continue
        seen_pairs.add(pair)
        users.append(pair[0])
        items.append(pair[1])
        values.append(score)
        token_docs.append(tokenize(review, stoplist))

    vocab = build_vocabulary(token_docs, vocab_size)
    word_id = {w: i for i, w in enumerate(vocab)}
    record_tokens = tuple(
        np.array([word_id[t] for t in doc if t in word_id], dtype=np.int64)
        for doc in token_docs)

    seen_edges = set()
    src, dst = [], []
    dropped_relations = 0
    for a, b in raw.relation_records:
        edge = (user_ids[a], user_ids[b])
        if edge[0] == edge[1] or edge in seen_edges:
            dropped_relations += 1
            continue
        seen_edges.add(edge)
        src.append(edge[0])
        dst.append(edge[1])

    n_users, n_items = len(user_ids), len(item_ids)
    n_tokens = int(sum(len(t) for t in record_tokens))
    manifest = {
        "users": n_users,
        "items": n_items,
        "ratings": len(values),
        "relations": len(src),
        "words": n_tokens,
        "vocabulary": len(vocab),
        "rating_density": len(values) / (n_users * n_items),
        "social_density": len(src) / (n_users * n_users),
        "avg_words_per_item": n_tokens / n_items,
        "duplicate_ratings_dropped": duplicate_ratings,
        "relations_dropped": dropped_relations,
        "token_rule": TOKEN_RULE,
    }
    return Dataset(
        n_users=n_users, n_items=n_items,
        users=np.array(users, dtype=np.int64),
        items=np.array(items, dtype=np.int64),
        values=np.array(values, dtype=np.float64),
        record_tokens=record_tokens,
        edges_src=np.array(src, dtype=np.int64),
        edges_dst=np.array(dst, dtype=np.int64),
        vocab=tuple(vocab),
        manifest=manifest,
    )


def assemble(raw: RawDataset, vocab_size: int = 8000,
             stoplist=DEFAULT_STOPWORDS):
    """One-shot view: (ratings, graph, corpus) over the whole input."""
    ds = build_dataset(raw, vocab_size, stoplist)
    return ds.ratings(), ds.graph(), ds.corpus()


def save_dataset(path, dataset: Dataset):
    lengths = np.array([len(t) for t in dataset.record_tokens],
                       dtype=np.int64)
    flat = np.concatenate(dataset.record_tokens) if len(lengths) \
        else np.zeros(0, np.int64)
    np.savez(
        path,
        n_users=np.int64(dataset.n_users),
        n_items=np.int64(dataset.n_items),
        users=dataset.users,
        items=dataset.items,
        values=dataset.values,
        token_lengths=lengths,
        token_flat=flat.astype(np.int64),
        edges_src=dataset.edges_src,
        edges_dst=dataset.edges_dst,
        vocab=np.array(dataset.vocab, dtype=np.str_),
        manifest=np.str_(json.dumps(dataset.manifest, sort_keys=True)),
    )


def load_dataset(path) -> Dataset:
    with np.load(path, allow_pickle=False) as z:
        lengths = z["token_lengths"]
        flat = z["token_flat"]
        offsets = np.concatenate([[0], np.cumsum(lengths)])
        record_tokens = tuple(flat[offsets[i]:offsets[i + 1]]
                              for i in range(len(lengths)))
        return Dataset(
            n_users=int(z["n_users"]),
            n_items=int(z["n_items"]),
            users=z["users"].astype(np.int64),
            items=z["items"].astype(np.int64),
            values=z["values"].astype(np.float64),
            record_tokens=record_tokens,
            edges_src=z["edges_src"].astype(np.int64),
            edges_dst=z["edges_dst"].astype(np.int64),
            vocab=tuple(str(w) for w in z["vocab"]),
            manifest=json.loads(str(z["manifest"])),
        )


def write_manifest(path, dataset: Dataset):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(dataset.manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
