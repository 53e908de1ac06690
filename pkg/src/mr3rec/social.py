"""Social-side constants consumed by the objectives: PageRank-derived
per-user rating weights, per-edge trust values from graph degrees, and
per-edge rating cosine similarities.

All three quantities are computed once from the training split and stay
frozen during optimization.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .data import SocialGraph, SparseRatings, _frozen_array
from .errors import DataError


def pagerank(graph: SocialGraph, damping: float = 0.85, tol: float = 1e-10,
             max_iter: int = 200) -> np.ndarray:
    """Power iteration on the column-stochastic transition matrix.

    Dangling users distribute their mass uniformly; teleport is uniform.
    Stops when the L1 change drops below `tol` or after `max_iter` sweeps.
    Scores form a probability distribution over users.
    """
    if not 0.0 < damping < 1.0:
        raise DataError("damping must lie in (0, 1)")
    if tol <= 0.0:
        raise DataError("tol must be positive")
    n = graph.n_users
    if n == 0:
        return np.zeros(0)
    out_deg = graph.out_degree
    dangling = out_deg == 0
    weights = 1.0 / out_deg[graph.src] if len(graph) else np.zeros(0)
    # column j holds the out-links of user j, so transition = P @ v
    trans = sp.csr_matrix((weights, (graph.dst, graph.src)), shape=(n, n))
    v = np.full(n, 1.0 / n)
    teleport = (1.0 - damping) / n
    for _ in range(max_iter):
        dangling_mass = v[dangling].sum()
        new_v = damping * (trans @ v + dangling_mass / n) + teleport
        if np.abs(new_v - v).sum() < tol:
            v = new_v
            break
        v = new_v
    return v


def rank_users(scores: np.ndarray) -> np.ndarray:
    """1-based rank by descending score; ties broken by ascending user id."""
    n = len(scores)
    order = np.lexsort((np.arange(n), -scores))
    rank = np.empty(n, dtype=np.int64)
    rank[order] = np.arange(1, n + 1)
    return rank


def rating_weight(rank) -> float:
    """Reliability weight 1 / (1 + ln rank) of a 1-based reputation rank."""
    rank = np.asarray(rank)
    if np.any(rank < 1):
        raise DataError("rank must be >= 1")
    out = 1.0 / (1.0 + np.log(rank))
    return float(out) if out.ndim == 0 else out


def trust_value(out_deg: int, in_deg: int) -> float:
    """Asymmetric edge strength sqrt(d_in / (d_out + d_in)).

    `out_deg` is the truster's out-degree, `in_deg` the trustee's in-degree.
    """
    if out_deg < 0 or in_deg < 0:
        raise DataError("degrees must be nonnegative")
    if out_deg == 0 and in_deg == 0:
        raise DataError("impossible for an existing edge")
    return math.sqrt(in_deg / (out_deg + in_deg))


def rating_cosine(items_a, values_a, items_b, values_b) -> float:
    """Cosine similarity of two sparse rating vectors over the item axis.

    Vectors are raw (uncentered) ratings; an empty vector yields 0.
    """
    items_a = np.asarray(items_a, dtype=np.int64)
    items_b = np.asarray(items_b, dtype=np.int64)
    values_a = np.asarray(values_a, dtype=np.float64)
    values_b = np.asarray(values_b, dtype=np.float64)
    norm_a = math.sqrt(float(values_a @ values_a))
    norm_b = math.sqrt(float(values_b @ values_b))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    lookup = dict(zip(items_a.tolist(), values_a.tolist()))
    dot = sum(lookup.get(j, 0.0) * v
              for j, v in zip(items_b.tolist(), values_b.tolist()))
    return dot / (norm_a * norm_b)


@dataclass(frozen=True, eq=False)
class SocialContext:
    """Frozen per-user and per-edge constants for the social objective terms.

    `trust` and `similarity` are aligned with the graph's edge arrays.
    """

    pagerank: np.ndarray = field(repr=False)
    rank: np.ndarray = field(repr=False)
    weight: np.ndarray = field(repr=False)
    trust: np.ndarray = field(repr=False)
    similarity: np.ndarray = field(repr=False)

    @property
    def n_users(self):
        return len(self.weight)


def build_context(graph: SocialGraph, ratings: SparseRatings, *,
                  damping: float = 0.85, tol: float = 1e-10,
                  max_iter: int = 200) -> SocialContext:
    """Compute PageRank ranks/weights, edge trust values, and edge rating
    similarities from the training ratings and the full trust graph."""
    if ratings.centered:
        raise DataError("similarities must be computed on raw ratings")
    if ratings.n_users != graph.n_users:
        raise DataError("graph and ratings disagree on the user count")
    scores = pagerank(graph, damping=damping, tol=tol, max_iter=max_iter)
    rank = rank_users(scores)
    weight = 1.0 / (1.0 + np.log(rank))

    if len(graph):
        trust = np.sqrt(graph.in_degree[graph.dst]
                        / (graph.out_degree[graph.src]
                           + graph.in_degree[graph.dst]))
        mat = sp.csr_matrix(
            (ratings.values, (ratings.users, ratings.items)),
            shape=(ratings.n_users, ratings.n_items),
        )
        norms = np.sqrt(np.asarray(mat.multiply(mat).sum(axis=1)).ravel())
        dots = np.asarray(
            mat[graph.src].multiply(mat[graph.dst]).sum(axis=1)).ravel()
        denom = norms[graph.src] * norms[graph.dst]
        similarity = np.divide(dots, denom, out=np.zeros_like(dots),
                               where=denom > 0)
    else:
        trust = np.zeros(0)
        similarity = np.zeros(0)

    return SocialContext(
        pagerank=_frozen_array(scores, np.float64),
        rank=_frozen_array(rank, np.int64),
        weight=_frozen_array(weight, np.float64),
        trust=_frozen_array(trust, np.float64),
        similarity=_frozen_array(similarity, np.float64),
    )


def write_context_tables(context: SocialContext, graph: SocialGraph,
                         out_dir):
    """Dump (rank, weight) per user and (trust, similarity) per edge as TSV."""
    os.makedirs(out_dir, exist_ok=True)
    user_path = os.path.join(out_dir, "user_weights.tsv")
    edge_path = os.path.join(out_dir, "edge_context.tsv")
    with open(user_path, "w", encoding="utf-8") as fh:
        fh.write("user\trank\tweight\tpagerank\n")
        for i in range(context.n_users):
            fh.write(f"{i}\t{context.rank[i]}\t{context.weight[i]:.10g}"
                     f"\t{context.pagerank[i]:.10g}\n")
    with open(edge_path, "w", encoding="utf-8") as fh:
        fh.write("truster\ttrustee\ttrust\tsimilarity\n")
        for e in range(len(graph)):
            fh.write(f"{graph.src[e]}\t{graph.dst[e]}"
                     f"\t{context.trust[e]:.10g}"
                     f"\t{context.similarity[e]:.10g}\n")
    return user_path, edge_path
