import itertools
import sys
import time

import numpy as np

from mr3rec.experiment import prepare_fold, run_cell
from mr3rec.ingest import build_dataset
from mr3rec.synth import SynthConfig, generate
from mr3rec.train import TrainConfig
from mr3rec.model import make_variant

n_seeds = int(sys.argv[1]) if len(sys.argv) > 1 else 2
fs = 0.7
folds = {}
for seed in range(n_seeds):
    cfg = SynthConfig(seed=seed, factor_scale=fs)
    ds = build_dataset(generate(cfg), vocab_size=cfg.vocab_size,
                       stoplist=frozenset())
    folds[seed] = prepare_fold(ds, 80, seed=seed)

for lam, lr, rev, rel in itertools.product(
        (2.0,), (0.003,), (2.0, 5.0, 10.0), (0.5, 2.0)):
    t0 = time.time()
    avg, bp = {}, {}
    for v in ("pmf", "hft", "esmf", "mr3"):
        vals, passes = [], []
        for seed in range(n_seeds):
            base = TrainConfig(n_factors=5, learning_rate=lr, momentum=0.8,
                               passes=50, epochs_per_pass=5,
                               variant=make_variant("mr3", norm_penalty=lam,
                                                    social_weight=rel,
                                                    review_weight=rev))
            cell = run_cell(folds[seed], v, base, seed=seed)
            vals.append(cell.best_rmse)
            passes.append(cell.best_pass)
        avg[v] = float(np.mean(vals))
        bp[v] = passes
    imp = 100 * (avg["pmf"] - avg["mr3"]) / avg["pmf"]
    ok = (avg["mr3"] <= avg["esmf"] and avg["mr3"] <= avg["hft"]
          and imp >= 3.0)
    print(f"rev={rev:4.1f} rel={rel:3.1f} | pmf={avg['pmf']:.4f} "
          f"hft={avg['hft']:.4f} esmf={avg['esmf']:.4f} "
          f"mr3={avg['mr3']:.4f} imp={imp:5.2f}% {'OK' if ok else '  '} "
          f"bp hft={bp['hft']} mr3={bp['mr3']} ({time.time()-t0:.0f}s)")
