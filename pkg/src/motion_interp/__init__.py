"""Stochastic human-motion in-betweening with a conditional VAE."""
from .data import Corpus, CorpusItem, Normalizer, extract_windows, fit_normalizer, generate_synthetic_corpus, load_corpus
from .estimator import MotionInterpolator
from .evaluation import EvaluationReport, SampleSet, ade, apd, boundary_gap, evaluate, interpolate
from .losses import (
    LossBreakdown,
    coherence_loss,
    diversity_loss,
    kl_divergence,
    reconstruction_loss,
    total_loss,
)
from .model import LatentSample, ModelConfig, MotionCVAE, PosteriorParams
from .motion import (
    InterpolationTask,
    MotionSequence,
    SkeletonSpec,
    flatten_motion,
    pose_distance,
    read_motion,
    split_sequence,
    unflatten_motion,
    write_motion,
)
from .training import TrainConfig, train

__version__ = "0.1.0"
