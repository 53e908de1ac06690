import time

import numpy as np

from mr3rec.experiment import prepare_fold, run_cell
from mr3rec.ingest import build_dataset
from mr3rec.synth import SynthConfig, generate
from mr3rec.train import TrainConfig
from mr3rec.model import make_variant

t0 = time.time()
variants = ("pmf", "hft", "esmf", "mr3")
results = {v: [] for v in variants}
for seed in range(5):
    cfg = SynthConfig(seed=seed)
    ds = build_dataset(generate(cfg), vocab_size=cfg.vocab_size,
                       stoplist=frozenset())
    fold = prepare_fold(ds, 80, seed=seed)
    base = TrainConfig(n_factors=5, learning_rate=0.01, momentum=0.8,
                       passes=50, epochs_per_pass=5,
                       variant=make_variant("mr3", norm_penalty=0.5,
                                            social_weight=0.01,
                                            review_weight=0.05))
    for v in variants:
        cell = run_cell(fold, v, base, seed=seed)
        results[v].append(cell.best_rmse)
        print(f"seed={seed} {v:6s} rmse={cell.best_rmse:.4f} "
              f"best_pass={cell.best_pass} err={cell.error}")

print()
avg = {v: float(np.mean(results[v])) for v in variants}
for v in variants:
    print(f"{v:6s} avg={avg[v]:.4f}")
print(f"mr3 vs pmf improvement: {100*(avg['pmf']-avg['mr3'])/avg['pmf']:.2f}%")
print(f"elapsed {time.time()-t0:.1f}s")
