import sys
import time

import numpy as np

from mr3rec.experiment import prepare_fold, run_cell
from mr3rec.ingest import build_dataset
from mr3rec.synth import SynthConfig, generate
from mr3rec.train import TrainConfig
from mr3rec.model import make_variant

t0 = time.time()
variants = ("pmf", "hft", "esmf", "mr3")
weights = {"pmf": (0.0, 0.0), "hft": (0.0, 5.0),
           "esmf": (0.1, 0.0), "mr3": (0.1, 1.0)}
if len(sys.argv) > 2:
    weights["mr3"] = (float(sys.argv[1]), float(sys.argv[2]))
results = {v: [] for v in variants}
for seed in range(5):
    cfg = SynthConfig(seed=seed)
    ds = build_dataset(generate(cfg), vocab_size=50, stoplist=frozenset())
    fold = prepare_fold(ds, 80, seed=seed)
    for v in variants:
        rel, rev = weights[v]
        base = TrainConfig(n_factors=5, learning_rate=0.001, momentum=0.8,
                           passes=50, epochs_per_pass=5,
                           variant=make_variant("mr3", norm_penalty=2.0,
                                                social_weight=rel or 0.1,
                                                review_weight=rev or 5.0))
        cell = run_cell(fold, v, base, seed=seed)
        results[v].append(cell.best_rmse)
avg = {v: float(np.mean(results[v])) for v in variants}
imp = 100 * (avg["pmf"] - avg["mr3"]) / avg["pmf"]
ok = (avg["mr3"] <= avg["esmf"] and avg["mr3"] <= avg["hft"]
      and imp >= 3.0)
print(f"pmf={avg['pmf']:.4f} hft={avg['hft']:.4f} esmf={avg['esmf']:.4f} "
      f"mr3={avg['mr3']:.4f} imp={imp:5.2f}% {'OK' if ok else 'FAIL'}")
for v in variants:
    print(f"  {v:5s} " + " ".join(f"{x:.4f}" for x in results[v]))
print(f"elapsed {time.time()-t0:.1f}s")
