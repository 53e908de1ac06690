"""Command-line interface.

Subcommands: ingest (files -> dataset + manifest), train (dataset + config
-> checkpoint + log), eval (checkpoint + split -> RMSE), experiment (spec
file -> report directory), synth (generator parameters -> TSV dataset).

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 divergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import config as cfgmod
from . import experiment, ingest, social, synth
from .data import center_ratings, TrainingSet
from .errors import ConfigError, DataError, DivergenceError
from .model import load_checkpoint, save_checkpoint
from .train import train

log = logging.getLogger(__name__)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser():
    parser = _Parser(prog="mr3rec", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse TSV files into a dataset")
    p.add_argument("--ratings", required=True)
    p.add_argument("--relations")
    p.add_argument("--stoplist")
    p.add_argument("--vocab-size", type=int, default=8000)
    p.add_argument("--min-count", type=int, default=3,
                   help="drop users/items with fewer rating occurrences")
    p.add_argument("--out", required=True, help="dataset file (.npz)")
    p.add_argument("--manifest", help="manifest path (default <out>.manifest.json)")

    p = sub.add_parser("train", help="train a model on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--config", required=True, help="key=value file")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--history", help="write per-epoch TSV log here")
    p.add_argument("--context-dir", help="dump social context tables")
    p.add_argument("--verbose", action="store_true",
                   help="print one 'pass epoch objective lr' line per epoch")

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--fraction", type=float,
                   help="evaluate on the held-out side of this split")
    p.add_argument("--split-seed", type=int, default=0)

    p = sub.add_parser("experiment", help="run a full comparison/report")
    p.add_argument("--spec", required=True, help="key=value spec file")

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--users", type=int, default=200)
    p.add_argument("--items", type=int, default=300)
    p.add_argument("--factors", type=int, default=5)
    p.add_argument("--density", type=float, default=0.05)
    p.add_argument("--doc-length", type=int, default=30)
    p.add_argument("--vocab-size", type=int, default=250)
    p.add_argument("--noise", type=float, default=0.45)
    p.add_argument("--out-neighbors", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _cmd_ingest(args):
    stoplist = ingest.load_stoplist(args.stoplist) if args.stoplist \
        else ingest.DEFAULT_STOPWORDS
    raw = ingest.load_raw(args.ratings, args.relations)
    if args.min_count > 1:
        raw = ingest.prune_rare(raw, args.min_count)
    dataset = ingest.build_dataset(raw, args.vocab_size, stoplist)
    ingest.save_dataset(args.out, dataset)
    manifest_path = args.manifest or args.out + ".manifest.json"
    ingest.write_manifest(manifest_path, dataset)
    print(f"wrote {args.out} and {manifest_path}")
    return 0


def _prepare_training(dataset, cfg_dict):
    """Assemble the training inputs, honoring an optional train split."""
    fraction = cfg_dict.get("train_fraction")
    if fraction is not None:
        fold = experiment.prepare_fold(
            dataset, float(fraction),
            cfgmod.get_int(cfg_dict, "split_seed", 0),
            damping=cfgmod.get_float(cfg_dict, "pagerank_damping", 0.85),
            tol=cfgmod.get_float(cfg_dict, "pagerank_tol", 1e-10),
            max_iter=cfgmod.get_int(cfg_dict, "pagerank_max_iter", 200))
        return fold.train_set, fold.context
    ratings = dataset.ratings()
    graph = dataset.graph()
    context = social.build_context(
        graph, ratings,
        damping=cfgmod.get_float(cfg_dict, "pagerank_damping", 0.85),
        tol=cfgmod.get_float(cfg_dict, "pagerank_tol", 1e-10),
        max_iter=cfgmod.get_int(cfg_dict, "pagerank_max_iter", 200))
    centered, _ = center_ratings(ratings)
    return TrainingSet(centered, graph, dataset.corpus()), context


def _cmd_train(args):
    dataset = ingest.load_dataset(args.data)
    cfg_dict = cfgmod.parse_config(args.config)
    train_cfg = cfgmod.train_config_from(cfg_dict)
    data, context = _prepare_training(dataset, cfg_dict)
    if args.context_dir:
        social.write_context_tables(context, data.graph, args.context_dir)
    params, state = train(data, context, train_cfg, verbose=args.verbose)
    save_checkpoint(args.checkpoint, params)
    if args.history:
        with open(args.history, "w", encoding="utf-8") as fh:
            fh.write("pass\tepoch\tobjective\tlr\n")
            for rec in state.history:
                fh.write(f"{rec.pass_index}\t{rec.epoch_index}"
                         f"\t{rec.objective!r}\t{rec.lr!r}\n")
    best = min(rec.objective for rec in state.history)
    print(f"wrote {args.checkpoint} (best objective {best!r})")
    return 0


def _cmd_eval(args):
    dataset = ingest.load_dataset(args.data)
    params = load_checkpoint(args.checkpoint)
    if args.fraction is not None:
        _, test_idx = experiment.split_indices(len(dataset), args.fraction,
                                               args.split_seed)
        test = dataset.ratings(test_idx)
    else:
        test = dataset.ratings()
    value = experiment.rmse(params, test)
    print(f"rmse\t{value!r}")
    return 0


def _cmd_experiment(args):
    spec = experiment.spec_from_file(args.spec)
    summary = experiment.run(spec)
    print(f"report written to {spec.output}")
    for name, path in sorted(summary["paths"].items()):
        print(f"  {name}: {path}")
    return 0


def _cmd_synth(args):
    cfg = synth.SynthConfig(
        n_users=args.users, n_items=args.items, n_factors=args.factors,
        density=args.density, doc_length=args.doc_length,
        vocab_size=args.vocab_size, noise=args.noise,
        out_neighbors=args.out_neighbors, seed=args.seed)
    raw = synth.generate(cfg)
    os.makedirs(args.out, exist_ok=True)
    ratings_path = os.path.join(args.out, "ratings.tsv")
    relations_path = os.path.join(args.out, "relations.tsv")
    synth.write_tsv(raw, ratings_path, relations_path)
    with open(os.path.join(args.out, "generator.json"), "w",
              encoding="utf-8") as fh:
        json.dump(synth.describe(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {ratings_path} and {relations_path}")
    return 0


_COMMANDS = {
    "ingest": _cmd_ingest,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "experiment": _cmd_experiment,
    "synth": _cmd_synth,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 1
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 1
    except FileNotFoundError as err:
        print(f"data error: {err}", file=sys.stderr)
        return 2
    except DataError as err:
        print(f"data error: {err}", file=sys.stderr)
        return 2
    except DivergenceError as err:
        where = ""
        if err.pass_index is not None:
            where = f" at pass {err.pass_index} epoch {err.epoch_index}"
        print(f"divergence{where}: {err}", file=sys.stderr)
        return 3


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
