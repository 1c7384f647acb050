"""scikit-learn style wrappers so the detector composes with the ecosystem.

``BreakageClassifier`` exposes the training pipeline behind the familiar
fit/predict/predict_proba surface; ``FeatureStandardizer`` is the
zero-mean/unit-spread transform as a fit/transform estimator. Both keep
constructor arguments verbatim (get_params/set_params work as usual) and
publish fitted state through trailing-underscore attributes.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.exceptions import NotFittedError

from .dataset import LabeledSample
from .features import fit_normalization, normalize
from .models import build_bp_scaled, build_cnn_scaled
from .training import TrainConfig, predict_scores, train
from .validation import check_binary_labels, check_feature_matrix, infer_real_lengths


class FeatureStandardizer(TransformerMixin, BaseEstimator):
    """Center on the fitted mean, divide by the fitted spread.

    ``divisor="std"`` gives the usual standardization; ``divisor="var"``
    divides by sigma squared instead.
    """

    def __init__(self, divisor: str = "std"):
        self.divisor = divisor

    def fit(self, X, y=None):
        values = np.asarray(X, dtype=np.float64).ravel()
        self.stats_ = fit_normalization(values)
        self.mu_ = self.stats_.mu
        self.sigma_ = self.stats_.sigma
        return self

    def transform(self, X):
        if not hasattr(self, "stats_"):
            raise NotFittedError("FeatureStandardizer is not fitted; call fit first")
        return normalize(X, self.stats_, self.divisor)


class BreakageClassifier(ClassifierMixin, BaseEstimator):
    """Binary breakage detector over fixed-length feature windows.

    Rows of X are zero-padded feature vectors (trailing zeros count as
    padding and are excluded from normalization). ``arch="cnn"`` trains
    the scaled convolutional network with Adam, ``arch="mlp"`` the
    single-hidden-layer baseline with plain gradient descent.
    """

    def __init__(self, arch: str = "cnn", conv_filters: tuple[int, int, int] = (8, 16, 32),
                 dense_width: int | None = None, dropout_rate: float = 0.5,
                 iterations: int = 2400, batch_size: int = 20,
                 learning_rate: float = 1e-4, seed: int = 0,
                 balanced_sampling: bool = False, normalize_divisor: str = "std"):
        self.arch = arch
        self.conv_filters = conv_filters
        self.dense_width = dense_width
        self.dropout_rate = dropout_rate
        self.iterations = iterations
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.seed = seed
        self.balanced_sampling = balanced_sampling
        self.normalize_divisor = normalize_divisor

    def _build_spec(self, input_length: int):
        if self.arch == "cnn":
            spec = build_cnn_scaled(input_length=input_length,
                                    conv_filters=tuple(self.conv_filters),
                                    dense_width=self.dense_width or 128,
                                    dropout_rate=self.dropout_rate)
        elif self.arch == "mlp":
            spec = build_bp_scaled(input_length=input_length)
            if self.dense_width:
                spec = replace(spec, dense_width=self.dense_width)
        else:
            raise ValueError(f"arch must be 'cnn' or 'mlp', got {self.arch!r}")
        if self.normalize_divisor != spec.normalize_divisor:
            spec = replace(spec, normalize_divisor=self.normalize_divisor)
        return spec

    @staticmethod
    def _to_samples(X: np.ndarray, y: np.ndarray) -> list[LabeledSample]:
        lengths = infer_real_lengths(X)
        return [
            LabeledSample(np.ascontiguousarray(X[i]), int(lengths[i]), int(y[i]),
                          "rows", i + 1)
            for i in range(X.shape[0])
        ]

    def fit(self, X, y):
        X = check_feature_matrix(X)
        y = check_binary_labels(y, X.shape[0])
        spec = self._build_spec(X.shape[1])
        config = TrainConfig(iterations=self.iterations, batch_size=self.batch_size,
                             learning_rate=self.learning_rate, seed=self.seed,
                             balanced_sampling=self.balanced_sampling)
        ckpt, losses = train(spec, self._to_samples(X, y), config)
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = X.shape[1]
        self.checkpoint_ = ckpt
        self.loss_curve_ = losses
        return self

    def _check_fitted_input(self, X) -> np.ndarray:
        if not hasattr(self, "checkpoint_"):
            raise NotFittedError("BreakageClassifier is not fitted; call fit first")
        X = check_feature_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, fitted on {self.n_features_in_}")
        return X

    def predict_proba(self, X):
        X = self._check_fitted_input(X)
        dummy = np.zeros(X.shape[0], dtype=np.intp)
        p1 = predict_scores(self.checkpoint_, self._to_samples(X, dummy))
        return np.column_stack([1.0 - p1, p1])

    def predict(self, X):
        return (self.predict_proba(X)[:, 1] > 0.5).astype(np.intp)
