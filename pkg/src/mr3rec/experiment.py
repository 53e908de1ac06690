"""Evaluation harness: random holdout splits, RMSE, the baseline comparison
matrix with ablations, and hyperparameter sensitivity sweeps.

`run` writes a report directory containing delimited tables (TSV), an
aligned plain-text summary table, per-pass test-error curves, and rendered
figures. Every cell is a pure function of (dataset, spec, seed); failed
cells are recorded and the run continues.
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .data import TrainingSet, center_ratings, SparseRatings
from .errors import ConfigError, DataError, DivergenceError
from .ingest import (Dataset, build_dataset, load_dataset, load_raw,
                     load_stoplist, prune_rare, DEFAULT_STOPWORDS)
from .model import ModelParams, make_variant, predict_pairs
from .social import build_context, write_context_tables
from .train import TrainConfig, train
from . import config as cfgmod

log = logging.getLogger(__name__)

#: canonical column order for the comparison table
TABLE_ORDER = ("mean", "pmf", "hft", "locabal", "esmf", "mr3")


def split_indices(n: int, train_fraction: float, seed: int):
    """Deterministic uniform partition of n records into train/test indices."""
    if not 1 <= train_fraction <= 99:
        raise DataError("train fraction must lie in [1, 99]")
    n_train = int(round(n * train_fraction / 100.0))
    if n_train == 0 or n_train == n:
        raise DataError("split leaves an empty train or test partition")
    perm = np.random.default_rng(seed).permutation(n)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def split(ratings: SparseRatings, train_fraction: float, seed: int):
    """Uniform random partition of the rating triples (same id space)."""
    tr, te = split_indices(len(ratings), train_fraction, seed)
    return ratings.subset(tr), ratings.subset(te)


def rmse(params: ModelParams, test: SparseRatings) -> float:
    """Root-mean-square prediction error on raw held-out ratings."""
    if len(test) == 0:
        raise DataError("empty test set")
    if test.centered:
        raise DataError("test ratings must be raw")
    pred = predict_pairs(params, test.users, test.items)
    return math.sqrt(float(np.mean((test.values - pred) ** 2)))


@dataclass(frozen=True)
class Fold:
    """One split, ready to train on: centered train side, raw test side,
    and the frozen social context computed from the train ratings."""

    train_set: TrainingSet
    test: SparseRatings
    mu: float
    context: object


def prepare_fold(dataset: Dataset, train_fraction: float, seed: int, *,
                 damping=0.85, tol=1e-10, max_iter=200) -> Fold:
    """Split records, withhold test reviews from the corpus, and compute
    the social context from the training half (graph used in full)."""
    tr_idx, te_idx = split_indices(len(dataset), train_fraction, seed)
    train_raw = dataset.ratings(tr_idx)
    test_raw = dataset.ratings(te_idx)
    graph = dataset.graph()
    context = build_context(graph, train_raw, damping=damping, tol=tol,
                            max_iter=max_iter)
    centered, mu = center_ratings(train_raw)
    corpus = dataset.corpus(tr_idx)
    return Fold(TrainingSet(centered, graph, corpus), test_raw, mu, context)


def mean_params(fold: Fold, n_factors: int) -> ModelParams:
    """Constant predictor: the train mean with every other block at zero."""
    r = fold.train_set.ratings
    return ModelParams.zeros(fold.mu, r.n_users, r.n_items, n_factors,
                             len(fold.train_set.corpus.vocab))


@dataclass
class CellResult:
    variant: str
    train_fraction: float
    seed: int
    best_rmse: float = math.nan
    best_pass: int = -1
    final_objective: float = math.nan
    curve: list = field(default_factory=list)  # per-pass test RMSE
    error: str = ""


def run_cell(fold: Fold, variant_name: str, base: TrainConfig, seed: int,
             train_fraction: float = math.nan) -> CellResult:
    """Train one (variant, fold) cell, tracking test RMSE after every pass
    and reporting the best, mirroring best-over-passes model selection."""
    result = CellResult(variant_name, train_fraction, seed)
    if variant_name == "mean":
        value = rmse(mean_params(fold, base.n_factors), fold.test)
        result.best_rmse = value
        result.best_pass = 0
        result.curve = [value]
        return result
    try:
        variant = make_variant(variant_name,
                               norm_penalty=base.variant.norm_penalty,
                               social_weight=base.variant.social_weight,
                               review_weight=base.variant.review_weight)
    except DataError as err:
        result.error = str(err)
        return result
    train_cfg = replace(base, seed=seed, variant=variant)
    curve = []

    def on_pass(snapshot):
        curve.append(rmse(snapshot.params, fold.test))

    try:
        _, state = train(fold.train_set, fold.context, train_cfg,
                         pass_callback=on_pass)
    except (DivergenceError, DataError) as err:
        result.error = str(err)
        result.curve = curve
        return result
    result.curve = curve
    result.best_pass = int(np.argmin(curve))
    result.best_rmse = float(curve[result.best_pass])
    result.final_objective = state.history[-1].objective
    return result


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything `run` needs, typically parsed from a key=value file."""

    output: str
    dataset_path: str = ""
    ratings_path: str = ""
    relations_path: str = ""
    stoplist_path: str = ""
    vocab_size: int = 8000
    min_count: int = 3
    train_fractions: tuple = (80,)
    seeds: tuple = (0,)
    variants: tuple = ("mean", "pmf", "hft", "locabal", "esmf", "mr3")
    base: TrainConfig = field(default_factory=TrainConfig)
    sweep_factors: tuple = ()
    sweep_social: tuple = ()
    sweep_review: tuple = ()
    dump_context: bool = False
    figures: bool = True

    def __post_init__(self):
        if not self.variants:
            raise ConfigError("at least one variant is required")
        for x in self.train_fractions:
            if not 1 <= x <= 99:
                raise ConfigError("train fractions must lie in [1, 99]")


def spec_from_file(path) -> ExperimentSpec:
    raw = cfgmod.parse_config(path)
    base = cfgmod.train_config_from(raw, variant_name="mr3")
    out = raw.get("output")
    if not out:
        raise ConfigError(f"{path}: missing required key 'output'")
    return ExperimentSpec(
        output=out,
        dataset_path=raw.get("dataset", ""),
        ratings_path=raw.get("ratings", ""),
        relations_path=raw.get("relations", ""),
        stoplist_path=raw.get("stoplist", ""),
        vocab_size=cfgmod.get_int(raw, "vocab_size", 8000),
        min_count=cfgmod.get_int(raw, "min_count", 3),
        train_fractions=tuple(cfgmod.get_list(raw, "train_fractions",
                                              (80,), float)),
        seeds=tuple(cfgmod.get_list(raw, "seeds", (0,), int)),
        variants=tuple(v.lower() for v in cfgmod.get_list(
            raw, "variants", ("mean", "pmf", "hft", "locabal", "esmf",
                              "mr3"))),
        base=base,
        sweep_factors=tuple(cfgmod.get_list(raw, "sweep_factors", (), int)),
        sweep_social=tuple(cfgmod.get_list(raw, "sweep_lambda_rel", (),
                                           float)),
        sweep_review=tuple(cfgmod.get_list(raw, "sweep_lambda_rev", (),
                                           float)),
        dump_context=cfgmod.get_bool(raw, "dump_context", False),
        figures=cfgmod.get_bool(raw, "figures", True),
    )


def load_spec_dataset(spec: ExperimentSpec) -> Dataset:
    if spec.dataset_path:
        return load_dataset(spec.dataset_path)
    if not spec.ratings_path:
        raise ConfigError("spec needs either 'dataset' or 'ratings'")
    stoplist = load_stoplist(spec.stoplist_path) if spec.stoplist_path \
        else DEFAULT_STOPWORDS
    raw = load_raw(spec.ratings_path, spec.relations_path or None)
    if spec.min_count > 1:
        raw = prune_rare(raw, spec.min_count)
    return build_dataset(raw, spec.vocab_size, stoplist)


def _canonical_variants(variants):
    """Map ablation spellings onto canonical names, preserving order."""
    from .model import _VARIANT_ALIASES
    seen, out = set(), []
    for name in variants:
        canon = _VARIANT_ALIASES.get(name, name)
        if canon not in seen:
            seen.add(canon)
            out.append(canon)
    return out


def _write_tsv(path, header, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(str(x) for x in row) + "\n")


def _fmt(value, digits=4):
    return "nan" if value != value else f"{value:.{digits}f}"


def _aligned_table(header, rows):
    widths = [max(len(str(h)), *(len(str(r[i])) for r in rows)) if rows
              else len(str(h)) for i, h in enumerate(header)]
    lines = ["  ".join(str(h).ljust(w) for h, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(str(x).ljust(w) for x, w in zip(row, widths)))
    return "\n".join(lines) + "\n"


def run(spec: ExperimentSpec) -> dict:
    """Execute the experiment grid and write the report directory.

    Returns a summary mapping with the table data and output paths.
    """
    os.makedirs(spec.output, exist_ok=True)
    dataset = load_spec_dataset(spec)
    variants = _canonical_variants(spec.variants)

    cells = []
    for fraction in spec.train_fractions:
        for seed in spec.seeds:
            try:
                fold = prepare_fold(dataset, fraction, seed)
            except DataError as err:
                for name in variants:
                    cells.append(CellResult(name, fraction, seed,
                                            error=str(err)))
                continue
            if spec.dump_context:
                write_context_tables(
                    fold.context, fold.train_set.graph,
                    os.path.join(spec.output,
                                 f"context_x{fraction:g}_s{seed}"))
            for name in variants:
                log.info("cell variant=%s fraction=%g seed=%d",
                         name, fraction, seed)
                cells.append(run_cell(fold, name, spec.base, seed, fraction))

    _write_tsv(
        os.path.join(spec.output, "results.tsv"),
        ("variant", "train_fraction", "seed", "best_rmse", "best_pass",
         "final_objective", "error"),
        [(c.variant, f"{c.train_fraction:g}", c.seed,
          repr(c.best_rmse), c.best_pass, repr(c.final_objective),
          c.error) for c in cells],
    )
    _write_tsv(
        os.path.join(spec.output, "curves.tsv"),
        ("variant", "train_fraction", "seed", "pass", "test_rmse"),
        [(c.variant, f"{c.train_fraction:g}", c.seed, p, repr(v))
         for c in cells for p, v in enumerate(c.curve)],
    )

    # comparison table: one row per fraction, averaged over seeds
    averages = {}
    for c in cells:
        if c.error or c.best_rmse != c.best_rmse:
            continue
        averages.setdefault((c.variant, c.train_fraction), []).append(
            c.best_rmse)
    table_rows = []
    for fraction in spec.train_fractions:
        row = {"training": f"{fraction:g}%"}
        for name in TABLE_ORDER:
            if name in variants:
                vals = averages.get((name, fraction))
                row[name] = float(np.mean(vals)) if vals else math.nan
        table_rows.append(row)

    present = [n for n in TABLE_ORDER if n in variants]
    header = ["training"] + list(present)
    improvement_bases = [n for n in ("pmf", "hft", "locabal")
                         if n in variants and "mr3" in variants]
    header += [f"mr3_vs_{b}%" for b in improvement_bases]
    header += [f"mr3_vs_{b}_alt%" for b in improvement_bases]
    out_rows = []
    for row in table_rows:
        cols = [row["training"]] + [_fmt(row.get(n, math.nan))
                                    for n in present]
        mr3 = row.get("mr3", math.nan)
        for b in improvement_bases:
            base = row.get(b, math.nan)
            cols.append(_fmt(100.0 * (base - mr3) / base, 2)
                        if base == base and base != 0 else "nan")
        for b in improvement_bases:
            base = row.get(b, math.nan)
            cols.append(_fmt(100.0 * (base - mr3) / mr3, 2)
                        if mr3 == mr3 and mr3 != 0 else "nan")
        out_rows.append(cols)
    _write_tsv(os.path.join(spec.output, "table.tsv"), header, out_rows)
    note = ("# mr3_vs_*% divides the gap by the baseline; the _alt% columns "
            "divide by the joint model instead. Published comparisons do "
            "not always state which convention they use, so both are "
            "reported.\n")
    with open(os.path.join(spec.output, "table.txt"), "w",
              encoding="utf-8") as fh:
        fh.write(_aligned_table(header, out_rows))
        fh.write(note)

    sweeps = _run_sweeps(spec, dataset)

    paths = {"results": os.path.join(spec.output, "results.tsv"),
             "table": os.path.join(spec.output, "table.txt")}
    if spec.figures:
        from . import plots
        paths.update(plots.render_report(spec.output, cells, table_rows,
                                         present, sweeps))
    return {"cells": cells, "table": table_rows, "sweeps": sweeps,
            "paths": paths}


def _run_sweeps(spec: ExperimentSpec, dataset: Dataset) -> dict:
    """One-axis-at-a-time sensitivity runs for the joint model."""
    sweeps = {}
    axes = (("factors", spec.sweep_factors),
            ("lambda_rel", spec.sweep_social),
            ("lambda_rev", spec.sweep_review))
    for axis, values in axes:
        if not values:
            continue
        rows = []
        for value in values:
            if axis == "factors":
                base = replace(spec.base, n_factors=int(value))
            elif axis == "lambda_rel":
                base = replace(spec.base, variant=replace(
                    spec.base.variant, social_weight=float(value)))
            else:
                base = replace(spec.base, variant=replace(
                    spec.base.variant, review_weight=float(value)))
            for fraction in spec.train_fractions:
                per_seed = []
                for seed in spec.seeds:
                    fold = prepare_fold(dataset, fraction, seed)
                    cell = run_cell(fold, "mr3", base, seed)
                    if not cell.error:
                        per_seed.append(cell.best_rmse)
                rows.append((value, fraction,
                             float(np.mean(per_seed)) if per_seed
                             else math.nan))
        sweeps[axis] = rows
        _write_tsv(os.path.join(spec.output, f"sweep_{axis}.tsv"),
                   (axis, "train_fraction", "rmse"),
                   [(v, f"{x:g}", repr(r)) for v, x, r in rows])
    return sweeps
