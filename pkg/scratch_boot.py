import itertools
import sys

import numpy as np

from mr3rec.experiment import prepare_fold, rmse
from mr3rec.ingest import build_dataset
from mr3rec.synth import SynthConfig, generate
from mr3rec.train import TrainConfig, train
from mr3rec.model import make_variant, word_matrix

cfg = SynthConfig(seed=0, factor_scale=0.7, topic_sharpness=6.0,
                  vocab_size=150, peakiness=3.0)
ds = build_dataset(generate(cfg), vocab_size=cfg.vocab_size,
                   stoplist=frozenset())
fold = prepare_fold(ds, 80, seed=0)

for init, rev, lr in itertools.product((0.1, 0.5, 1.0), (5.0, 20.0),
                                       (0.001,)):
    out = {}
    for name in ("pmf", "hft"):
        tc = TrainConfig(n_factors=5, learning_rate=lr, momentum=0.8,
                         passes=50, epochs_per_pass=5, init_scale=init,
                         variant=make_variant(name, norm_penalty=2.0,
                                              review_weight=rev))
        curve = []
        params, _ = train(fold.train_set, fold.context, tc,
                          pass_callback=lambda s: curve.append(
                              rmse(s.params, fold.test)))
        out[name] = (min(curve), int(np.argmin(curve)),
                     word_matrix(params.word_weights).max(axis=1).mean())
    pmf, hft = out["pmf"], out["hft"]
    gain = 100 * (pmf[0] - hft[0]) / pmf[0]
    print(f"init={init} rev={rev:4.1f}: pmf={pmf[0]:.4f}@{pmf[1]:2d} "
          f"hft={hft[0]:.4f}@{hft[1]:2d} phimax={hft[2]:.3f} "
          f"gain={gain:5.2f}%")
