"""Prediction rule, factor-to-topic transform, the joint objective with its
baseline reductions, and every analytic gradient.

The full objective is

    sum_{observed (i,j)} W_i (r_ij - r_hat_ij)^2
  - review_weight * sum_tokens (log theta[doc, z] + log phi[z, word])
  + social_weight * sum_edges C_e (S_e - u_i' H u_k)^2
  + norm_penalty * (|U|^2 + |V|^2 [+ |H|^2 when the social term is active])

over centered ratings. The H norm (and the H gradient) is tied to the
social term so that switching either side term off reduces the objective
exactly to the corresponding single-source baseline at any parameter point,
not just at optima. Biases are fitted but never penalized.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .data import ModelParams, TopicCounts, TrainingSet
from .errors import DataError, DivergenceError
from .social import SocialContext

_VARIANT_ALIASES = {
    "mr3\\content": "esmf",
    "mr3\\social": "hft",
    "mr3\\content\\social": "pmf",
}

VARIANT_NAMES = ("mean", "pmf", "hft", "locabal", "esmf", "mr3")


@dataclass(frozen=True)
class VariantConfig:
    """Objective switches selecting a model family.

    With both side terms on this is the full joint model; zeroing
    review_weight gives the trust-weighted social model, additionally
    ignoring trust values gives the plain social model, zeroing
    social_weight (with unit rating weights) gives the review model, and
    zeroing both gives biased matrix factorization.
    """

    norm_penalty: float = 0.5
    social_weight: float = 0.001
    review_weight: float = 0.05
    use_rank_weights: bool = True
    use_trust_values: bool = True

    @property
    def social_active(self):
        return self.social_weight != 0.0

    @property
    def review_active(self):
        return self.review_weight != 0.0


def make_variant(name: str, *, norm_penalty=0.5, social_weight=0.001,
                 review_weight=0.05) -> VariantConfig:
    """Build the VariantConfig for a named model family.

    Ablation spellings with backslashes map onto the equivalent family.
    The weight arguments apply only where the family uses that term.
    """
    key = _VARIANT_ALIASES.get(name.lower(), name.lower())
    social = social_weight != 0.0
    if key == "pmf":
        return VariantConfig(norm_penalty, 0.0, 0.0, False, False)
    if key == "hft":
        return VariantConfig(norm_penalty, 0.0, review_weight, False, False)
    if key == "locabal":
        return VariantConfig(norm_penalty, social_weight, 0.0, social, False)
    if key == "esmf":
        return VariantConfig(norm_penalty, social_weight, 0.0, social,
                             social)
    if key == "mr3":
        return VariantConfig(norm_penalty, social_weight, review_weight,
                             social, social)
    raise DataError(f"unknown variant: {name}")


def _softmax_rows(scores):
    shifted = scores - scores.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _log_softmax_rows(scores):
    shifted = scores - scores.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def topic_transform(item_factor, peakiness) -> np.ndarray:
    """Map one item's factor vector to topic proportions on the simplex."""
    return _softmax_rows(peakiness * np.asarray(item_factor, dtype=np.float64))


def topic_matrix(item_factors, peakiness) -> np.ndarray:
    """Per-item topic proportions, one row per item."""
    return _softmax_rows(peakiness * item_factors)


def word_dist(word_weight_row) -> np.ndarray:
    """Map one topic's unnormalized word scores to a word distribution."""
    return _softmax_rows(np.asarray(word_weight_row, dtype=np.float64))


def word_matrix(word_weights) -> np.ndarray:
    """Per-topic word distributions, one row per topic."""
    if word_weights.shape[1] == 0:
        return np.zeros_like(word_weights, dtype=np.float64)
    return _softmax_rows(word_weights)


def predict(params: ModelParams, user: int, item: int) -> float:
    """Predicted rating mu + b_u + b_i + u.v, unclamped.

    Ids outside the trained ranges contribute nothing beyond the mean and
    the known side's bias.
    """
    out = params.mu
    known_user = 0 <= user < params.n_users
    known_item = 0 <= item < params.n_items
    if known_user:
        out += params.user_bias[user]
    if known_item:
        out += params.item_bias[item]
    if known_user and known_item:
        out += float(params.user_factors[user] @ params.item_factors[item])
    return float(out)


def predict_pairs(params: ModelParams, users, items) -> np.ndarray:
    """Vectorized `predict` over parallel id arrays."""
    users = np.asarray(users, dtype=np.int64)
    items = np.asarray(items, dtype=np.int64)
    known_u = (users >= 0) & (users < params.n_users)
    known_i = (items >= 0) & (items < params.n_items)
    out = np.full(len(users), params.mu)
    out[known_u] += params.user_bias[users[known_u]]
    out[known_i] += params.item_bias[items[known_i]]
    both = known_u & known_i
    out[both] += np.einsum("nf,nf->n", params.user_factors[users[both]],
                           params.item_factors[items[both]])
    return out


def _rating_weights(cfg, context, users):
    if cfg.use_rank_weights:
        if context is None:
            raise DataError("rank weights requested but no social context")
        return context.weight[users]
    return None


def _edge_trust(cfg, context, n_edges):
    if cfg.use_trust_values:
        if context is None:
            raise DataError("trust values requested but no social context")
        return context.trust
    return np.ones(n_edges)


def _residuals(params, ratings):
    """Model residual (prediction minus target) in centered rating space."""
    return (params.user_bias[ratings.users]
            + params.item_bias[ratings.items]
            + np.einsum("nf,nf->n", params.user_factors[ratings.users],
                        params.item_factors[ratings.items])
            - ratings.values)


def objective(params: ModelParams, data: TrainingSet,
              context: SocialContext | None, counts: TopicCounts | None,
              cfg: VariantConfig) -> float:
    """Joint objective value at the given parameters and topic assignments.

    Ratings in `data` are centered residuals; the stored global mean never
    enters the optimization.
    """
    ratings = data.ratings
    # overflow is tolerated here: a non-finite total raises DivergenceError
    with np.errstate(over="ignore", invalid="ignore"):
        resid = _residuals(params, ratings)
        w = _rating_weights(cfg, context, ratings.users)
        total = float(np.sum(
            resid * resid if w is None else w * resid * resid))

        if cfg.review_active and counts is not None \
                and data.corpus.n_tokens:
            log_theta = _log_softmax_rows(params.peakiness
                                          * params.item_factors)
            log_phi = _log_softmax_rows(params.word_weights)
            loglik = float(np.sum(counts.doc_topic * log_theta)
                           + np.sum(counts.topic_word * log_phi))
            total -= cfg.review_weight * loglik

        graph = data.graph
        if cfg.social_active and len(graph):
            if context is None:
                raise DataError("social term requested but no social "
                                "context")
            u_src = params.user_factors[graph.src]
            u_dst = params.user_factors[graph.dst]
            fitted = np.einsum("ef,fg,eg->e", u_src, params.social_corr,
                               u_dst)
            gap = context.similarity - fitted
            c = _edge_trust(cfg, context, len(graph))
            total += cfg.social_weight * float(np.sum(c * gap * gap))

        reg = np.sum(params.user_factors ** 2) \
            + np.sum(params.item_factors ** 2)
        if cfg.social_active:
            reg += np.sum(params.social_corr ** 2)
        total += cfg.norm_penalty * float(reg)

    if not np.isfinite(total):
        raise DivergenceError("divergence: objective is not finite "
                              "(learning rate too large?)")
    return total


@dataclass(eq=False)
class Gradients:
    """Gradient blocks congruent with the fitted parameter blocks."""

    user_bias: np.ndarray = field(repr=False)
    item_bias: np.ndarray = field(repr=False)
    user_factors: np.ndarray = field(repr=False)
    item_factors: np.ndarray = field(repr=False)
    social_corr: np.ndarray = field(repr=False)
    word_weights: np.ndarray = field(repr=False)
    peakiness: float = 0.0


def _scatter_rows(index, contrib, n_rows):
    """Sum (len(index), F) row contributions into an (n_rows, F) table."""
    out = np.empty((n_rows, contrib.shape[1]))
    for f in range(contrib.shape[1]):
        out[:, f] = np.bincount(index, weights=contrib[:, f],
                                minlength=n_rows)
    return out


def gradients(params: ModelParams, data: TrainingSet,
              context: SocialContext | None, counts: TopicCounts | None,
              cfg: VariantConfig) -> Gradients:
    """Analytic gradient of `objective` with respect to every fitted block.

    The user-factor gradient accumulates the social term over both edge
    directions (a user appears as truster and as trustee). Bias gradients
    are the weighted residual sums, unpenalized.
    """
    ratings = data.ratings
    users, items = ratings.users, ratings.items
    n_users, n_items = ratings.n_users, ratings.n_items
    f_dim = params.n_factors

    resid = _residuals(params, ratings)
    w = _rating_weights(cfg, context, users)
    werr2 = 2.0 * (resid if w is None else w * resid)

    g_bu = np.bincount(users, weights=werr2, minlength=n_users)
    g_bi = np.bincount(items, weights=werr2, minlength=n_items)
    g_u = _scatter_rows(users, werr2[:, None] * params.item_factors[items],
                        n_users)
    g_v = _scatter_rows(items, werr2[:, None] * params.user_factors[users],
                        n_items)
    g_u += 2.0 * cfg.norm_penalty * params.user_factors
    g_v += 2.0 * cfg.norm_penalty * params.item_factors

    g_h = np.zeros((f_dim, f_dim))
    graph = data.graph
    if cfg.social_active and len(graph):
        if context is None:
            raise DataError("social term requested but no social context")
        u_src = params.user_factors[graph.src]
        u_dst = params.user_factors[graph.dst]
        h = params.social_corr
        fitted = np.einsum("ef,fg,eg->e", u_src, h, u_dst)
        d2c = 2.0 * cfg.social_weight \
            * _edge_trust(cfg, context, len(graph)) \
            * (fitted - context.similarity)
        g_u += _scatter_rows(graph.src, d2c[:, None] * (u_dst @ h.T), n_users)
        g_u += _scatter_rows(graph.dst, d2c[:, None] * (u_src @ h), n_users)
        g_h = (u_src * d2c[:, None]).T @ u_dst
    if cfg.social_active:
        g_h = g_h + 2.0 * cfg.norm_penalty * params.social_corr

    g_psi = np.zeros_like(params.word_weights)
    g_kappa = 0.0
    if cfg.review_active and counts is not None and data.corpus.n_tokens:
        theta = topic_matrix(params.item_factors, params.peakiness)
        phi = word_matrix(params.word_weights)
        doc_gap = counts.doc_topic - counts.doc_totals[:, None] * theta
        g_v += -cfg.review_weight * params.peakiness * doc_gap
        g_psi = -cfg.review_weight \
            * (counts.topic_word - counts.topic_totals[:, None] * phi)
        g_kappa = -cfg.review_weight \
            * float(np.sum(params.item_factors * doc_gap))

    return Gradients(user_bias=g_bu, item_bias=g_bi, user_factors=g_u,
                     item_factors=g_v, social_corr=g_h, word_weights=g_psi,
                     peakiness=g_kappa)


def init_params(mu, n_users, n_items, n_factors, vocab_size, scale,
                rng) -> ModelParams:
    """Draw factor blocks from N(0, scale^2); biases start at zero and the
    transform peakiness at one. Draw order is fixed for reproducibility."""
    return ModelParams(
        mu=float(mu),
        user_bias=np.zeros(n_users),
        item_bias=np.zeros(n_items),
        user_factors=rng.normal(0.0, scale, (n_users, n_factors)),
        item_factors=rng.normal(0.0, scale, (n_items, n_factors)),
        social_corr=rng.normal(0.0, scale, (n_factors, n_factors)),
        word_weights=rng.normal(0.0, scale, (n_factors, vocab_size)),
        peakiness=1.0,
    )


_CKPT_MAGIC = b"MR3CKPT\x01"
_CKPT_BLOCKS = ("mu", "user_bias", "item_bias", "user_factors",
                "item_factors", "social_corr", "word_weights", "peakiness")


def save_checkpoint(path, params: ModelParams):
    """Write parameters in a fixed little-endian binary layout.

    The layout is deterministic: identical parameters produce identical
    bytes, and a load/save round trip is bit-exact.
    """
    header = json.dumps({
        "n_users": params.n_users,
        "n_items": params.n_items,
        "n_factors": params.n_factors,
        "vocab_size": params.vocab_size,
        "blocks": list(_CKPT_BLOCKS),
    }, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_CKPT_MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        for name in _CKPT_BLOCKS:
            block = np.ascontiguousarray(
                np.atleast_1d(getattr(params, name)), dtype="<f8")
            fh.write(block.tobytes())


def load_checkpoint(path) -> ModelParams:
    with open(path, "rb") as fh:
        if fh.read(len(_CKPT_MAGIC)) != _CKPT_MAGIC:
            raise DataError(f"{path}: not a parameter checkpoint")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        if tuple(header.get("blocks", ())) != _CKPT_BLOCKS:
            raise DataError(f"{path}: unknown checkpoint layout")
        n_users, n_items = header["n_users"], header["n_items"]
        n_factors, vocab_size = header["n_factors"], header["vocab_size"]
        shapes = {
            "mu": (1,),
            "user_bias": (n_users,),
            "item_bias": (n_items,),
            "user_factors": (n_users, n_factors),
            "item_factors": (n_items, n_factors),
            "social_corr": (n_factors, n_factors),
            "word_weights": (n_factors, vocab_size),
            "peakiness": (1,),
        }
        parts = {}
        for name in _CKPT_BLOCKS:
            size = int(np.prod(shapes[name]))
            buf = fh.read(8 * size)
            if len(buf) != 8 * size:
                raise DataError(f"{path}: truncated checkpoint")
            parts[name] = np.frombuffer(buf, dtype="<f8").reshape(shapes[name])
        if fh.read(1):
            raise DataError(f"{path}: trailing bytes in checkpoint")
    return ModelParams(
        mu=float(parts["mu"][0]),
        user_bias=parts["user_bias"].copy(),
        item_bias=parts["item_bias"].copy(),
        user_factors=parts["user_factors"].copy(),
        item_factors=parts["item_factors"].copy(),
        social_corr=parts["social_corr"].copy(),
        word_weights=parts["word_weights"].copy(),
        peakiness=float(parts["peakiness"][0]),
    )
