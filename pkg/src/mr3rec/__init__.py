"""Rating prediction by jointly factorizing ratings, a directed trust
graph, and item review text, with the single-source baselines it reduces
to (mean, plain MF, review-topic MF, and two social MF variants)."""

from .data import (Corpus, ModelParams, SocialGraph, SparseRatings,
                   TopicCounts, TrainingSet, center_ratings, rebuild_counts,
                   validate_topic_counts)
from .errors import ConfigError, DataError, DivergenceError
from .experiment import (ExperimentSpec, Fold, prepare_fold, rmse, run,
                         split, split_indices)
from .ingest import (Dataset, RawDataset, assemble, build_dataset,
                     build_vocabulary, load_dataset, load_raw, prune_rare,
                     save_dataset, tokenize)
from .model import (Gradients, VariantConfig, gradients, load_checkpoint,
                    make_variant, objective, predict, predict_pairs,
                    save_checkpoint, topic_transform, word_dist)
from .social import (SocialContext, build_context, pagerank, rating_cosine,
                     rating_weight, trust_value)
from .synth import SynthConfig, generate
from .train import (OptimizerState, TrainConfig, gd_step,
                    sample_assignments, train)

__version__ = "0.1.0"
