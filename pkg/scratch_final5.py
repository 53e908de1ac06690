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
for rel in (0.05, 0.5):
    results = {v: [] for v in variants}
    for seed in range(5):
        cfg = SynthConfig(seed=seed, factor_scale=0.7, topic_sharpness=8.0,
                          vocab_size=50, peakiness=3.0)
        ds = build_dataset(generate(cfg), vocab_size=50,
                           stoplist=frozenset())
        fold = prepare_fold(ds, 80, seed=seed)
        base = TrainConfig(n_factors=5, learning_rate=0.001, momentum=0.8,
                           passes=50, epochs_per_pass=5,
                           variant=make_variant("mr3", norm_penalty=2.0,
                                                social_weight=rel,
                                                review_weight=5.0))
        for v in variants:
            cell = run_cell(fold, v, base, seed=seed)
            results[v].append(cell.best_rmse)
    avg = {v: float(np.mean(results[v])) for v in variants}
    imp = 100 * (avg["pmf"] - avg["mr3"]) / avg["pmf"]
    ok = (avg["mr3"] <= avg["esmf"] and avg["mr3"] <= avg["hft"]
          and avg["mr3"] <= avg["pmf"] and imp >= 3.0)
    print(f"rel={rel}: pmf={avg['pmf']:.4f} hft={avg['hft']:.4f} "
          f"esmf={avg['esmf']:.4f} mr3={avg['mr3']:.4f} "
          f"imp={imp:5.2f}% {'OK' if ok else 'FAIL'}")
    for v in variants:
        print(f"   {v:5s} per-seed: "
              + " ".join(f"{x:.4f}" for x in results[v]))
print(f"elapsed {time.time()-t0:.1f}s")
