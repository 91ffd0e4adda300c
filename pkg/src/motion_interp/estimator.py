"""scikit-learn style wrapper around the training / sampling / scoring pipeline."""
from __future__ import annotations

from typing import Optional

import numpy as np
import torch
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .checkpoint import load_checkpoint, save_checkpoint
from .data import Corpus
from .evaluation import SampleSet, derive_seed, evaluate, evaluate_tasks, interpolate
from .model import ModelConfig
from .motion import InterpolationTask, MotionSequence, split_sequence
from .training import TrainConfig, train
from .validation import check_clip, check_k, check_windows


class MotionInterpolator(BaseEstimator):
    """Stochastic motion in-betweening model.

    ``fit`` takes a :class:`~motion_interp.data.Corpus` (windowed with
    ``stride``) or an array of ready-made windows shaped
    ``(N, 2 * condition_length + gap_length, d)``. After fitting, ``sample``
    draws K gap fillers for one start/end pair.

    Attributes set by ``fit``: ``model_``, ``normalizer_``, ``config_``,
    ``loss_log_`` and ``n_features_in_`` (the pose dimension).
    """

    def __init__(self, hidden_size=128, latent_size=32, gap_length=75, condition_length=25,
                 epochs=500, learning_rate=1e-3, lambda_=5.0, batch_size=16, cap=100.0,
                 clip_norm=5.0, use_coherence=True, stride=25, checkpoint_every=50,
                 checkpoint_path=None, random_state=0):
        self.hidden_size = hidden_size
        self.latent_size = latent_size
        self.gap_length = gap_length
        self.condition_length = condition_length
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.lambda_ = lambda_
        self.batch_size = batch_size
        self.cap = cap
        self.clip_norm = clip_norm
        self.use_coherence = use_coherence
        self.stride = stride
        self.checkpoint_every = checkpoint_every
        self.checkpoint_path = checkpoint_path
        self.random_state = random_state

    def _model_config(self, d: int) -> ModelConfig:
        return ModelConfig(d, self.hidden_size, self.latent_size, self.gap_length, self.condition_length)

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs, learning_rate=self.learning_rate, lambda_=self.lambda_,
            batch_size=self.batch_size, seed=self.random_state, cap=self.cap,
            clip_norm=self.clip_norm, use_coherence=self.use_coherence,
            checkpoint_every=self.checkpoint_every, stride=self.stride,
        )

    def fit(self, X, y=None):
        if isinstance(X, Corpus):
            if not X.items:
                raise ValueError("cannot fit on an empty corpus")
            d = X.d
            data = X
        else:
            window = 2 * self.condition_length + self.gap_length
            data = check_windows(X, window=window)
            d = data.shape[2]
        config = self._model_config(d)
        result = train(data, config, self._train_config(), checkpoint_path=self.checkpoint_path)
        self.model_ = result.model
        self.normalizer_ = result.normalizer
        self.loss_log_ = result.log
        self.config_ = config
        self.n_features_in_ = d
        return self

    def _task(self, X_start, X_end, gap_length):
        check_is_fitted(self, "model_")
        d = self.n_features_in_
        start = MotionSequence(check_clip(X_start, d, "start clip"))
        end = MotionSequence(check_clip(X_end, d, "end clip"))
        return InterpolationTask(start, end, gap_length or self.config_.gap_length)

    def sample(self, X_start, X_end=None, k: int = 5, random_state: Optional[int] = None,
               gap_length: Optional[int] = None) -> SampleSet:
        """K interpolations between ``X_start`` and ``X_end``.

        ``X_start`` may also be an :class:`InterpolationTask`, in which case
        ``X_end`` is ignored.
        """
        k = check_k(k, 1)
        if isinstance(X_start, InterpolationTask):
            check_is_fitted(self, "model_")
            task = X_start
        else:
            task = self._task(X_start, X_end, gap_length)
        seed = self.random_state if random_state is None else random_state
        return interpolate(self.model_, task, k, seed, self.normalizer_)

    @torch.no_grad()
    def predict(self, X) -> np.ndarray:
        """Latent-mean (z = 0) gap for each window in ``X``; the gap frames of ``X`` are ignored."""
        check_is_fitted(self, "model_")
        cfg = self.config_
        arr = check_windows(X, window=cfg.window, d=cfg.d)
        norm = torch.as_tensor(self.normalizer_.apply(arr))
        c, g = cfg.condition_length, cfg.gap_length
        x_s, x_e = norm[:, :c], norm[:, c + g:]
        cond = self.model_.encode_condition(x_s, x_e)
        z = torch.zeros((arr.shape[0], cfg.latent_size), dtype=cond.dtype)
        out = self.model_.decode(z, cond, x_s[:, -1], g)
        return self.normalizer_.invert(out.numpy())

    def evaluate(self, X, k: int = 5, random_state: Optional[int] = None):
        """``(EvaluationReport, per-task scores)`` on a test corpus or window array."""
        check_is_fitted(self, "model_")
        k = check_k(k, 2)
        seed = self.random_state if random_state is None else random_state
        if isinstance(X, Corpus):
            return evaluate(self.model_, X, k, seed, self.normalizer_)
        cfg = self.config_
        arr = check_windows(X, window=cfg.window, d=cfg.d)
        tasks = [split_sequence(MotionSequence(w), cfg.t_s, cfg.t_e) for w in arr]
        return evaluate_tasks(self.model_, tasks, k, seed, self.normalizer_)

    def score(self, X, y=None) -> float:
        """Negative best-of-5 ADE, so that larger is better."""
        report, _ = self.evaluate(X, k=5)
        return -report.ade

    def save(self, path) -> None:
        check_is_fitted(self, "model_")
        save_checkpoint(self.model_, path, self.normalizer_)

    @classmethod
    def load(cls, path, **params) -> "MotionInterpolator":
        model, cfg, normalizer = load_checkpoint(path)
        est = cls(hidden_size=cfg.hidden_size, latent_size=cfg.latent_size, gap_length=cfg.gap_length,
                  condition_length=cfg.condition_length, **params)
        est.model_ = model
        est.normalizer_ = normalizer
        est.config_ = cfg
        est.loss_log_ = []
        est.n_features_in_ = cfg.d
        return est
