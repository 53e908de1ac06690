import subprocess
import sys

import pytest

from mr3rec.cli import main

TRAIN_CFG = """\
variant = mr3
factors = 3
lambda = 0.5
lambda_rel = 0.01
lambda_rev = 0.05
learning_rate = 0.01
momentum = 0.8
passes = 2
epochs_per_pass = 2
seed = 0
"""


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synthdata")
    code = main(["synth", "--out", str(out), "--users", "30", "--items",
                 "20", "--factors", "3", "--density", "0.2",
                 "--doc-length", "5", "--vocab-size", "30",
                 "--out-neighbors", "3", "--seed", "1"])
    assert code == 0
    return out


@pytest.fixture(scope="module")
def dataset_file(synth_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("ds") / "data.npz"
    code = main(["ingest", "--ratings", str(synth_dir / "ratings.tsv"),
                 "--relations", str(synth_dir / "relations.tsv"),
                 "--vocab-size", "40", "--min-count", "1",
                 "--out", str(out)])
    assert code == 0
    return out


class TestPipeline:
    def test_synth_writes_expected_files(self, synth_dir):
        assert (synth_dir / "ratings.tsv").exists()
        assert (synth_dir / "relations.tsv").exists()
        assert (synth_dir / "generator.json").exists()

    def test_ingest_writes_manifest(self, dataset_file):
        import json
        manifest = json.loads(
            (dataset_file.parent / "data.npz.manifest.json").read_text())
        assert manifest["users"] == 30 and manifest["items"] == 20
        assert manifest["ratings"] == 120
        assert manifest["words"] > 0

    def test_train_eval_round_trip(self, dataset_file, tmp_path, capsys):
        cfg = tmp_path / "train.cfg"
        cfg.write_text(TRAIN_CFG, encoding="utf-8")
        ckpt = tmp_path / "model.ckpt"
        hist = tmp_path / "history.tsv"
        assert main(["train", "--data", str(dataset_file), "--config",
                     str(cfg), "--checkpoint", str(ckpt), "--history",
                     str(hist)]) == 0
        assert ckpt.exists()
        lines = hist.read_text().splitlines()
        assert lines[0] == "pass\tepoch\tobjective\tlr"
        assert len(lines) == 1 + 2 * 2
        capsys.readouterr()
        assert main(["eval", "--data", str(dataset_file), "--checkpoint",
                     str(ckpt)]) == 0
        out = capsys.readouterr().out
        assert out.startswith("rmse\t")
        float(out.split("\t")[1])

    def test_same_seed_checkpoints_byte_identical(self, dataset_file,
                                                  tmp_path):
        cfg = tmp_path / "train.cfg"
        cfg.write_text(TRAIN_CFG + "train_fraction = 80\nsplit_seed = 0\n",
                       encoding="utf-8")
        a, b = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
        assert main(["train", "--data", str(dataset_file), "--config",
                     str(cfg), "--checkpoint", str(a)]) == 0
        assert main(["train", "--data", str(dataset_file), "--config",
                     str(cfg), "--checkpoint", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_eval_on_held_out_split(self, dataset_file, tmp_path, capsys):
        cfg = tmp_path / "train.cfg"
        cfg.write_text(TRAIN_CFG + "train_fraction = 80\nsplit_seed = 0\n",
                       encoding="utf-8")
        ckpt = tmp_path / "model.ckpt"
        assert main(["train", "--data", str(dataset_file), "--config",
                     str(cfg), "--checkpoint", str(ckpt)]) == 0
        capsys.readouterr()
        assert main(["eval", "--data", str(dataset_file), "--checkpoint",
                     str(ckpt), "--fraction", "80",
                     "--split-seed", "0"]) == 0
        first = capsys.readouterr().out
        assert main(["eval", "--data", str(dataset_file), "--checkpoint",
                     str(ckpt), "--fraction", "80",
                     "--split-seed", "0"]) == 0
        second = capsys.readouterr().out
        assert first == second  # same split, same checkpoint, same value

    def test_experiment_subcommand(self, synth_dir, tmp_path, capsys):
        spec = tmp_path / "exp.cfg"
        spec.write_text(
            f"ratings = {synth_dir / 'ratings.tsv'}\n"
            f"relations = {synth_dir / 'relations.tsv'}\n"
            f"output = {tmp_path / 'rep'}\n"
            "min_count = 1\n"
            "vocab_size = 40\n"
            "train_fractions = 70\n"
            "seeds = 0\n"
            "variants = mean, pmf, mr3\n"
            "factors = 3\n"
            "learning_rate = 0.01\n"
            "passes = 2\n"
            "epochs_per_pass = 2\n"
            "figures = no\n",
            encoding="utf-8")
        assert main(["experiment", "--spec", str(spec)]) == 0
        assert (tmp_path / "rep" / "table.txt").exists()

    def test_context_dump(self, dataset_file, tmp_path):
        cfg = tmp_path / "train.cfg"
        cfg.write_text(TRAIN_CFG, encoding="utf-8")
        ctx_dir = tmp_path / "ctx"
        assert main(["train", "--data", str(dataset_file), "--config",
                     str(cfg), "--checkpoint", str(tmp_path / "m.ckpt"),
                     "--context-dir", str(ctx_dir)]) == 0
        users = (ctx_dir / "user_weights.tsv").read_text().splitlines()
        assert users[0] == "user\trank\tweight\tpagerank"
        assert len(users) == 1 + 30
        edges = (ctx_dir / "edge_context.tsv").read_text().splitlines()
        assert edges[0] == "truster\ttrustee\ttrust\tsimilarity"


class TestExitCodes:
    def test_usage_error_is_1(self, capsys):
        assert main(["train"]) == 1  # missing required options
        assert main(["no-such-command"]) == 1

    def test_bad_config_is_1(self, dataset_file, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("variant = nonsense\n", encoding="utf-8")
        assert main(["train", "--data", str(dataset_file), "--config",
                     str(cfg), "--checkpoint",
                     str(tmp_path / "x.ckpt")]) == 1

    def test_missing_file_is_2(self, tmp_path, capsys):
        assert main(["ingest", "--ratings", str(tmp_path / "nope.tsv"),
                     "--out", str(tmp_path / "d.npz")]) == 2

    def test_malformed_data_is_2(self, tmp_path, capsys):
        bad = tmp_path / "ratings.tsv"
        bad.write_text("u1\ti1\tfive\n", encoding="utf-8")
        assert main(["ingest", "--ratings", str(bad), "--out",
                     str(tmp_path / "d.npz")]) == 2

    def test_divergence_is_3(self, dataset_file, tmp_path, capsys):
        cfg = tmp_path / "diverge.cfg"
        cfg.write_text(TRAIN_CFG.replace("learning_rate = 0.01",
                                         "learning_rate = 1e9")
                       + "lr_policy = fixed\n", encoding="utf-8")
        assert main(["train", "--data", str(dataset_file), "--config",
                     str(cfg), "--checkpoint",
                     str(tmp_path / "x.ckpt")]) == 3


def test_module_entry_point(synth_dir, tmp_path):
    result = subprocess.run(
        [sys.executable, "-m", "mr3rec", "ingest", "--ratings",
         str(synth_dir / "ratings.tsv"), "--min-count", "1", "--out",
         str(tmp_path / "d.npz")],
        capture_output=True, text=True)
    assert result.returncode == 0, result.stderr
    assert (tmp_path / "d.npz").exists()
