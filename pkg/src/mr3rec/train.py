"""Alternating trainer: momentum gradient descent on the factor/bias/word
blocks with topic assignments held fixed, then one independence sweep that
resamples every token's topic from the current proportions.

A pass is `epochs_per_pass` full-batch descent epochs followed by one
resampling sweep and a counts rebuild. Runs are deterministic for a fixed
seed: parameter initialization and token sampling use two independently
seeded generators so the token stream does not shift when the factor count
changes.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace

import numpy as np

from .data import Corpus, TrainingSet, rebuild_counts
from .errors import DataError, DivergenceError
from .model import (ModelParams, VariantConfig, Gradients, gradients,
                    init_params, objective, topic_matrix, word_matrix)

FITTED_BLOCKS = ("user_bias", "item_bias", "user_factors", "item_factors",
                 "social_corr", "word_weights", "peakiness")

_SAMPLE_CHUNK = 65536


@dataclass(frozen=True)
class TrainConfig:
    n_factors: int = 10
    learning_rate: float = 0.0007
    momentum: float = 0.8
    passes: int = 50
    epochs_per_pass: int = 5
    seed: int = 0
    variant: VariantConfig = field(default_factory=VariantConfig)
    lr_policy: str = "halve-on-increase"  # or "fixed"
    init_scale: float = 0.1

    def __post_init__(self):
        if self.n_factors < 1:
            raise DataError("n_factors must be >= 1")
        if self.learning_rate <= 0:
            raise DataError("learning_rate must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise DataError("momentum must lie in [0, 1)")
        if self.passes < 1 or self.epochs_per_pass < 1:
            raise DataError("passes and epochs_per_pass must be >= 1")
        if self.lr_policy not in ("fixed", "halve-on-increase"):
            raise DataError(f"unknown lr_policy: {self.lr_policy}")


@dataclass
class EpochRecord:
    pass_index: int
    epoch_index: int
    objective: float
    lr: float


@dataclass
class OptimizerState:
    """Velocity buffers plus progress bookkeeping; one per training run."""

    velocities: dict
    pass_index: int = 0
    epoch_index: int = 0
    history: list = field(default_factory=list)

    @classmethod
    def for_params(cls, params: ModelParams):
        vel = {}
        for name in FITTED_BLOCKS:
            block = getattr(params, name)
            vel[name] = 0.0 if np.isscalar(block) else np.zeros_like(block)
        return cls(velocities=vel)

    def zeroed(self):
        """Same bookkeeping, fresh zero velocities (used on a reverted step)."""
        vel = {name: (0.0 if np.isscalar(v) else np.zeros_like(v))
               for name, v in self.velocities.items()}
        return replace(self, velocities=vel)


@dataclass(frozen=True)
class PassSnapshot:
    """What a per-pass callback sees right after the resampling sweep."""

    pass_index: int
    params: ModelParams
    state: OptimizerState
    counts: object
    corpus: Corpus


def gd_step(params: ModelParams, grads: Gradients, state: OptimizerState,
            lr: float, momentum: float):
    """One momentum step: v <- momentum*v - lr*grad; p <- p + v.

    Applied to every fitted block. Returns the new parameters and state;
    raises on a non-finite parameter.
    """
    new_vel = {}
    new_blocks = {}
    for name in FITTED_BLOCKS:
        p = getattr(params, name)
        g = getattr(grads, name)
        v = state.velocities[name]
        if not np.isscalar(p) and np.shape(v) != np.shape(p):
            raise DataError(f"velocity shape mismatch for {name}")
        with np.errstate(over="ignore", invalid="ignore"):
            v_new = momentum * v - lr * g
            p_new = p + v_new
        finite = np.isfinite(p_new) if np.isscalar(p_new) \
            else np.all(np.isfinite(p_new))
        if not finite:
            raise DivergenceError(f"divergence: non-finite {name}")
        new_vel[name] = v_new
        new_blocks[name] = p_new
    new_params = ModelParams(mu=params.mu, peakiness=float(
        new_blocks.pop("peakiness")), **new_blocks)
    return new_params, replace(state, velocities=new_vel)


def sample_assignments(theta, phi, corpus: Corpus, rng) -> np.ndarray:
    """Resample every token's topic from p(f) proportional to
    theta[doc, f] * phi[f, word], holding theta and phi fixed.

    Tokens are independent given the fixed distributions; the draw order is
    the flat corpus order, so results are reproducible for a fixed rng.
    """
    n = corpus.n_tokens
    out = np.empty(n, dtype=np.int64)
    docs, toks = corpus.flat_docs, corpus.flat_tokens
    for start in range(0, n, _SAMPLE_CHUNK):
        sl = slice(start, min(start + _SAMPLE_CHUNK, n))
        probs = theta[docs[sl]] * phi[:, toks[sl]].T
        totals = probs.sum(axis=1)
        if not np.all(totals > 0) or not np.all(np.isfinite(totals)):
            raise DataError("degenerate token distribution")
        cdf = np.cumsum(probs, axis=1)
        u = rng.random(cdf.shape[0]) * totals
        z = (cdf <= u[:, None]).sum(axis=1)
        out[sl] = np.minimum(z, theta.shape[1] - 1)
    return out


def train(data: TrainingSet, context, config: TrainConfig, *,
          pass_callback=None, verbose=False, log_stream=None):
    """Run the alternating optimization and return the parameters that
    achieved the best recorded objective, plus the final optimizer state.

    Topic proportions are recomputed from the item factors after every
    parameter update; only the unnormalized blocks are fitted directly.
    Under the halve-on-increase policy an epoch that raises the objective
    is reverted (and the momentum discarded) and the learning rate halves,
    so recorded objectives never increase within a pass. Velocities are
    otherwise never reset after training starts.
    """
    if not data.ratings.centered:
        raise DataError("training expects centered ratings")
    stream = log_stream if log_stream is not None else sys.stdout
    cfg = config.variant
    n_factors = config.n_factors
    ratings, corpus = data.ratings, data.corpus

    seeds = np.random.SeedSequence(config.seed).spawn(2)
    rng_init = np.random.default_rng(seeds[0])
    rng_sample = np.random.default_rng(seeds[1])

    params = init_params(ratings.mean, ratings.n_users, ratings.n_items,
                         n_factors, len(corpus.vocab), config.init_scale,
                         rng_init)
    corpus_cur = corpus.with_assignments(
        rng_sample.integers(0, n_factors, corpus.n_tokens))
    counts = rebuild_counts(corpus_cur, n_factors)
    state = OptimizerState.for_params(params)
    lr = config.learning_rate
    current = objective(params, data, context, counts, cfg)
    best_obj = None
    best_params = params

    for pass_idx in range(config.passes):
        for epoch_idx in range(config.epochs_per_pass):
            grads = gradients(params, data, context, counts, cfg)
            try:
                cand_params, cand_state = gd_step(params, grads, state, lr,
                                                  config.momentum)
                cand_obj = objective(cand_params, data, context, counts, cfg)
                diverged = False
            except DivergenceError as err:
                if config.lr_policy != "halve-on-increase":
                    raise DivergenceError(str(err), params=params,
                                          pass_index=pass_idx,
                                          epoch_index=epoch_idx) from err
                diverged = True
            if config.lr_policy == "halve-on-increase" \
                    and (diverged or cand_obj > current):
                state = state.zeroed()
                lr *= 0.5
            else:
                params, state = cand_params, cand_state
                current = cand_obj
            state.pass_index, state.epoch_index = pass_idx, epoch_idx
            state.history.append(
                EpochRecord(pass_idx, epoch_idx, current, lr))
            if best_obj is None or current < best_obj:
                best_obj, best_params = current, params
            if verbose:
                print(f"{pass_idx}\t{epoch_idx}\t{current!r}\t{lr!r}",
                      file=stream)

        if corpus.n_tokens:
            theta = topic_matrix(params.item_factors, params.peakiness)
            phi = word_matrix(params.word_weights)
            try:
                corpus_cur = corpus.with_assignments(
                    sample_assignments(theta, phi, corpus, rng_sample))
            except DataError as err:
                # softmax rows underflowed to zero: the parameters have
                # grown far beyond any useful range
                raise DivergenceError(
                    f"divergence: {err}", params=params,
                    pass_index=pass_idx,
                    epoch_index=config.epochs_per_pass - 1) from err
            counts = rebuild_counts(corpus_cur, n_factors)
            current = objective(params, data, context, counts, cfg)
        if pass_callback is not None:
            pass_callback(PassSnapshot(pass_idx, params, state, counts,
                                       corpus_cur))

    return best_params, state
