"""scikit-learn style wrappers.

Channels play the role of samples: ``transform`` maps a sequence of
channels to a feature matrix, so the metrics slot into ordinary
pipelines.  :class:`PowerLawScaling` is the depth-scaling fit as a
regressor on ``K``.
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import metrics
from .channels import Channel
from .circuits import fit_scaling
from .diamond import diamond_distance
from .validation import PreconditionError


def check_channels(X):
    """Validate a sequence of :class:`Channel` objects and return it as a list."""
    if isinstance(X, Channel):
        X = [X]
    X = list(X)
    if not X:
        raise PreconditionError("need at least one channel")
    for ch in X:
        if not isinstance(ch, Channel):
            raise PreconditionError(f"expected Channel instances, got {type(ch).__name__}")
    return X


class ChannelMetrics(TransformerMixin, BaseEstimator):
    """Channels -> rows of (r, u, p, alpha, C, j2)."""

    FEATURES = ("r", "u", "p", "alpha", "C", "j2")

    def __init__(self, features=FEATURES):
        self.features = features

    def fit(self, X, y=None):
        check_channels(X)
        unknown = set(self.features) - set(self.FEATURES)
        if unknown:
            raise PreconditionError(f"unknown features {sorted(unknown)}")
        self.n_features_out_ = len(self.features)
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_out_")
        rows = []
        for ch in check_channels(X):
            rep = metrics.metrics_report(ch).to_dict()
            rows.append([rep[f] for f in self.features])
        return np.array(rows, dtype=float)

    def get_feature_names_out(self, input_features=None):
        return np.array(self.features, dtype=object)


class DiamondDistance(TransformerMixin, BaseEstimator):
    """Channels -> certified diamond distance (one column)."""

    def __init__(self, method="sdp", gap_tol=1e-8):
        self.method = method
        self.gap_tol = gap_tol

    def fit(self, X, y=None):
        check_channels(X)
        if self.method not in ("sdp", "auto"):
            raise PreconditionError(f"method must be 'sdp' or 'auto', got {self.method!r}")
        self.results_ = []
        return self

    def transform(self, X):
        check_is_fitted(self, "results_")
        self.results_ = [diamond_distance(ch, self.method, self.gap_tol) for ch in check_channels(X)]
        return np.array([[r.value] for r in self.results_])


class PowerLawScaling(RegressorMixin, BaseEstimator):
    """``tau ~ c K^slope`` fitted by least squares in log-log space."""

    def fit(self, X, y):
        X, y = check_X_y(np.reshape(X, (-1, 1)), y, ensure_min_samples=3, y_numeric=True)
        self.slope_, self.slope_stderr_ = fit_scaling(X[:, 0], y)
        logK, logt = np.log(X[:, 0]), np.log(y)
        self.intercept_ = float(np.mean(logt) - self.slope_ * np.mean(logK))
        return self

    def predict(self, X):
        check_is_fitted(self, "slope_")
        X = check_array(np.reshape(X, (-1, 1)))
        return np.exp(self.intercept_) * X[:, 0] ** self.slope_
