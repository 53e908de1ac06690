import math

import numpy as np
import pytest

from mr3rec.data import ModelParams, SparseRatings
from mr3rec.errors import ConfigError, DataError
from mr3rec.experiment import (ExperimentSpec, mean_params, prepare_fold,
                               rmse, run, run_cell, spec_from_file, split,
                               split_indices)
from mr3rec.ingest import build_dataset
from mr3rec.synth import SynthConfig, generate
from mr3rec.train import TrainConfig


@pytest.fixture(scope="module")
def tiny_dataset():
    cfg = SynthConfig(n_users=24, n_items=18, n_factors=3, density=0.25,
                      doc_length=6, vocab_size=30, out_neighbors=3, seed=0)
    return build_dataset(generate(cfg), vocab_size=40, stoplist=frozenset())


def _uniform_ratings(n, seed=0):
    rng = np.random.default_rng(seed)
    users = np.arange(n)
    return SparseRatings.from_triples(n, 1, users, np.zeros(n, int),
                                      rng.normal(3.0, 1.0, n))


class TestSplit:
    def test_counts_match_requested_fraction(self):
        ratings = _uniform_ratings(1000)
        train_part, test_part = split(ratings, 99, seed=0)
        assert len(train_part) == 990 and len(test_part) == 10

    def test_same_seed_same_partition(self):
        ratings = _uniform_ratings(200)
        a_train, a_test = split(ratings, 80, seed=7)
        b_train, b_test = split(ratings, 80, seed=7)
        assert a_train.users.tolist() == b_train.users.tolist()
        assert a_test.users.tolist() == b_test.users.tolist()

    def test_different_seed_differs(self):
        ratings = _uniform_ratings(200)
        a, _ = split(ratings, 50, seed=1)
        b, _ = split(ratings, 50, seed=2)
        assert a.users.tolist() != b.users.tolist()

    def test_partition_is_disjoint_and_complete(self):
        ratings = _uniform_ratings(100)
        train_part, test_part = split(ratings, 73, seed=3)
        got = sorted(train_part.users.tolist() + test_part.users.tolist())
        assert got == list(range(100))

    def test_paper_grid_fractions_are_valid(self):
        for x in (20, 50, 80, 90):
            tr, te = split_indices(1000, x, seed=0)
            assert len(tr) == 10 * x and len(te) == 1000 - 10 * x

    def test_empty_partition_rejected(self):
        with pytest.raises(DataError):
            split_indices(1, 99, seed=0)
        with pytest.raises(DataError):
            split_indices(10, 0.5, seed=0)


class TestRmse:
    def test_perfect_predictions(self):
        test = SparseRatings.from_triples(2, 2, [0, 1], [0, 1],
                                          [3.0, 3.0])
        params = ModelParams.zeros(3.0, 2, 2, 2, 2)
        assert rmse(params, test) == 0.0

    def test_constant_unit_error(self):
        test = SparseRatings.from_triples(3, 1, [0, 1, 2], [0, 0, 0],
                                          [4.0, 4.0, 4.0])
        params = ModelParams.zeros(3.0, 3, 1, 2, 2)
        assert rmse(params, test) == 1.0

    def test_mean_baseline_matches_direct_formula(self):
        rng = np.random.default_rng(12)
        values = rng.normal(3.0, 1.0, 10_000)
        test = SparseRatings.from_triples(
            10_000, 1, np.arange(10_000), np.zeros(10_000, int), values)
        mu = 3.1415
        params = ModelParams.zeros(mu, 10_000, 1, 2, 2)
        direct = math.sqrt(math.fsum((float(v) - mu) ** 2
                                     for v in values) / len(values))
        assert abs(rmse(params, test) - direct) < 1e-12

    def test_centered_test_rejected(self):
        from mr3rec.data import center_ratings
        centered, _ = center_ratings(_uniform_ratings(5))
        with pytest.raises(DataError, match="raw"):
            rmse(ModelParams.zeros(3.0, 5, 1, 2, 2), centered)


class TestPrepareFold:
    def test_mu_comes_from_train_side_only(self, tiny_dataset):
        fold = prepare_fold(tiny_dataset, 75, seed=0)
        tr_idx, _ = split_indices(len(tiny_dataset), 75, 0)
        want = float(np.mean(tiny_dataset.values[tr_idx]))
        assert abs(fold.mu - want) < 1e-12

    def test_test_reviews_withheld_from_corpus(self):
        # every record carries a distinct word, so the train corpus must
        # hold exactly the words of train-side records
        from mr3rec.ingest import RawDataset
        records = tuple((f"u{n // 2}", f"i{n % 2}", 3.0 + n % 3,
                         f"word{n:02d}") for n in range(8))
        ds = build_dataset(RawDataset(records, ()), vocab_size=20,
                           stoplist=frozenset())
        fold = prepare_fold(ds, 50, seed=0)
        tr_idx, te_idx = split_indices(len(ds), 50, 0)
        corpus_words = {ds.vocab[t] for doc in fold.train_set.corpus.docs
                        for t in doc}
        train_words = {f"word{int(r):02d}" for r in tr_idx}
        assert corpus_words == train_words
        assert len(te_idx) > 0

    def test_graph_used_in_full(self, tiny_dataset):
        fold = prepare_fold(tiny_dataset, 75, seed=0)
        assert len(fold.train_set.graph) == len(tiny_dataset.edges_src)

    def test_similarity_uses_train_ratings_only(self, tiny_dataset):
        fold = prepare_fold(tiny_dataset, 75, seed=0)
        tr_idx, _ = split_indices(len(tiny_dataset), 75, 0)
        train_raw = tiny_dataset.ratings(tr_idx)
        g = fold.train_set.graph
        e = int(np.argmax(fold.context.similarity))
        i, k = int(g.src[e]), int(g.dst[e])
        mask_i = train_raw.users == i
        mask_k = train_raw.users == k
        from mr3rec.social import rating_cosine
        expect = rating_cosine(train_raw.items[mask_i],
                               train_raw.values[mask_i],
                               train_raw.items[mask_k],
                               train_raw.values[mask_k])
        assert abs(fold.context.similarity[e] - expect) < 1e-12


class TestRunCell:
    def test_mean_cell_equals_zero_parameter_rmse(self, tiny_dataset):
        fold = prepare_fold(tiny_dataset, 75, seed=0)
        base = TrainConfig(n_factors=3, passes=2, epochs_per_pass=2)
        cell = run_cell(fold, "mean", base, seed=0)
        assert cell.best_rmse == rmse(mean_params(fold, 3), fold.test)
        assert cell.error == ""

    def test_training_cell_reports_best_pass(self, tiny_dataset):
        fold = prepare_fold(tiny_dataset, 75, seed=0)
        base = TrainConfig(n_factors=3, learning_rate=0.01, passes=3,
                           epochs_per_pass=2)
        cell = run_cell(fold, "mr3", base, seed=0)
        assert cell.error == ""
        assert len(cell.curve) == 3
        assert cell.best_rmse == min(cell.curve)
        assert cell.curve[cell.best_pass] == cell.best_rmse

    def test_divergent_cell_records_error(self, tiny_dataset):
        fold = prepare_fold(tiny_dataset, 75, seed=0)
        base = TrainConfig(n_factors=3, learning_rate=1e9, passes=2,
                           epochs_per_pass=2, lr_policy="fixed")
        cell = run_cell(fold, "pmf", base, seed=0)
        assert cell.error != ""
        assert cell.best_rmse != cell.best_rmse  # NaN


@pytest.fixture(scope="module")
def report(tmp_path_factory):
    out = tmp_path_factory.mktemp("report")
    raw = generate(SynthConfig(n_users=24, n_items=18, n_factors=3,
                               density=0.25, doc_length=6,
                               vocab_size=30, out_neighbors=3, seed=0))
    ratings = out / "ratings.tsv"
    relations = out / "relations.tsv"
    from mr3rec.synth import write_tsv
    write_tsv(raw, ratings, relations)
    spec = ExperimentSpec(
        output=str(out / "rep"),
        ratings_path=str(ratings),
        relations_path=str(relations),
        vocab_size=40, min_count=1,
        train_fractions=(60, 80), seeds=(0, 1),
        variants=("mean", "pmf", "mr3"),
        base=TrainConfig(n_factors=3, learning_rate=0.01, passes=2,
                         epochs_per_pass=2),
        sweep_factors=(2, 3),
    )
    return spec, run(spec)


class TestRun:
    def test_report_files_exist(self, report):
        import os
        spec, summary = report
        for name in ("results.tsv", "curves.tsv", "table.tsv", "table.txt",
                     "sweep_factors.tsv", "rmse_by_fraction.png",
                     "curves_x60.png", "curves_x80.png",
                     "sweep_factors.png"):
            assert os.path.exists(os.path.join(spec.output, name)), name

    def test_every_grid_cell_present(self, report):
        _, summary = report
        cells = summary["cells"]
        keys = {(c.variant, c.train_fraction, c.seed) for c in cells}
        assert keys == {(v, x, s) for v in ("mean", "pmf", "mr3")
                        for x in (60, 80) for s in (0, 1)}
        assert all(not c.error for c in cells)

    def test_table_has_improvement_columns(self, report):
        spec, _ = report
        with open(f"{spec.output}/table.tsv", encoding="utf-8") as fh:
            header = fh.readline().strip().split("\t")
        assert "mr3_vs_pmf%" in header and "mr3_vs_pmf_alt%" in header

    def test_table_values_average_seeds(self, report):
        _, summary = report
        cells = summary["cells"]
        manual = np.mean([c.best_rmse for c in cells
                          if c.variant == "pmf" and c.train_fraction == 60])
        row = [r for r in summary["table"] if r["training"] == "60%"][0]
        assert abs(row["pmf"] - manual) < 1e-12

    def test_rerun_reproduces_results_byte_for_byte(self, report,
                                                    tmp_path):
        from dataclasses import replace
        spec, _ = report
        spec2 = replace(spec, output=str(tmp_path / "rep2"), figures=False)
        run(spec2)
        with open(f"{spec.output}/results.tsv", "rb") as fh:
            first = fh.read()
        with open(f"{spec2.output}/results.tsv", "rb") as fh:
            second = fh.read()
        assert first == second


class TestSpecParsing:
    def test_round_trip_from_file(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text(
            "# comment\n"
            "ratings = r.tsv\n"
            "relations = s.tsv\n"
            "output = out\n"
            "train_fractions = 20, 50, 80, 90\n"
            "seeds = 0,1,2\n"
            "variants = mean, pmf, mr3\\content\n"
            "factors = 7\n"
            "lambda_rel = 0.01\n"
            "sweep_factors = 5,10\n",
            encoding="utf-8")
        spec = spec_from_file(path)
        assert spec.train_fractions == (20, 50, 80, 90)
        assert spec.seeds == (0, 1, 2)
        assert "mr3\\content" in spec.variants
        assert spec.base.n_factors == 7
        assert spec.base.variant.social_weight == 0.01
        assert spec.sweep_factors == (5, 10)

    def test_ablation_names_map_to_reduced_variants(self):
        from mr3rec.experiment import _canonical_variants
        got = _canonical_variants(["mr3\\content", "mr3\\social",
                                   "mr3\\content\\social", "mr3"])
        assert got == ["esmf", "hft", "pmf", "mr3"]

    def test_missing_output_rejected(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("ratings = r.tsv\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="output"):
            spec_from_file(path)

    def test_bad_fraction_rejected(self):
        with pytest.raises(ConfigError):
            ExperimentSpec(output="x", train_fractions=(0,))

    def test_no_variants_rejected(self):
        with pytest.raises(ConfigError):
            ExperimentSpec(output="x", variants=())
