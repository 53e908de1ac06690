import itertools
import sys
import time

import numpy as np

from mr3rec.experiment import prepare_fold, run_cell
from mr3rec.ingest import build_dataset
from mr3rec.synth import SynthConfig, generate
from mr3rec.train import TrainConfig
from mr3rec.model import make_variant

seeds = range(int(sys.argv[1]) if len(sys.argv) > 1 else 3)
folds = {}
for noise in (0.45, 0.30):
    for seed in seeds:
        cfg = SynthConfig(seed=seed, noise=noise)
        ds = build_dataset(generate(cfg), vocab_size=cfg.vocab_size,
                           stoplist=frozenset())
        folds[(noise, seed)] = prepare_fold(ds, 80, seed=seed)

grid = itertools.product((0.45, 0.30), (2.0, 8.0), (0.005,),
                         (0.1, 0.5), (0.01, 0.05))
for noise, lam, lr, rev, rel in grid:
    t0 = time.time()
    avg = {}
    for v in ("pmf", "hft", "esmf", "mr3"):
        vals = []
        for seed in seeds:
            base = TrainConfig(n_factors=5, learning_rate=lr, momentum=0.8,
                               passes=50, epochs_per_pass=5,
                               variant=make_variant("mr3", norm_penalty=lam,
                                                    social_weight=rel,
                                                    review_weight=rev))
            cell = run_cell(folds[(noise, seed)], v, base, seed=seed)
            vals.append(cell.best_rmse)
        avg[v] = float(np.mean(vals))
    imp = 100 * (avg["pmf"] - avg["mr3"]) / avg["pmf"]
    ok = (avg["mr3"] <= avg["esmf"] and avg["mr3"] <= avg["hft"]
          and imp >= 3.0)
    print(f"noise={noise} lam={lam:4.1f} lr={lr} rev={rev} rel={rel} | "
          f"pmf={avg['pmf']:.4f} hft={avg['hft']:.4f} "
          f"esmf={avg['esmf']:.4f} mr3={avg['mr3']:.4f} "
          f"imp={imp:5.2f}% {'OK ' if ok else '   '} "
          f"({time.time()-t0:.0f}s)")
