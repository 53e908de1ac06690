import sys
import time

import numpy as np

from mr3rec.experiment import prepare_fold, run_cell
from mr3rec.ingest import build_dataset
from mr3rec.synth import SynthConfig, generate
from mr3rec.train import TrainConfig
from mr3rec.model import make_variant

lr = float(sys.argv[1]) if len(sys.argv) > 1 else 0.002
lam = float(sys.argv[2]) if len(sys.argv) > 2 else 0.5
rel = float(sys.argv[3]) if len(sys.argv) > 3 else 0.01
rev = float(sys.argv[4]) if len(sys.argv) > 4 else 0.05

cfg = SynthConfig(seed=0)
ds = build_dataset(generate(cfg), vocab_size=cfg.vocab_size,
                   stoplist=frozenset())
fold = prepare_fold(ds, 80, seed=0)
base = TrainConfig(n_factors=5, learning_rate=lr, momentum=0.8,
                   passes=50, epochs_per_pass=5,
                   variant=make_variant("mr3", norm_penalty=lam,
                                        social_weight=rel,
                                        review_weight=rev))
t0 = time.time()
for v in ("pmf", "hft", "esmf", "mr3"):
    cell = run_cell(fold, v, base, seed=0)
    curve = np.array(cell.curve)
    marks = [0, 1, 2, 4, 9, 19, 34, 49]
    pts = " ".join(f"p{m}={curve[m]:.4f}" for m in marks)
    print(f"{v:5s} best={cell.best_rmse:.4f}@{cell.best_pass:2d}  {pts}")
print(f"elapsed {time.time()-t0:.1f}s  (lr={lr} lam={lam} rel={rel} rev={rev})")
