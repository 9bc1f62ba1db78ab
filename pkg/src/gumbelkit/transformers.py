"""scikit-learn style wrappers: each row of ``X`` is a vector of logits.

These are thin adapters over the functional samplers for use inside
pipelines. ``fit`` only records the number of classes; ``transform`` draws
one sample per row. Output is a pure function of ``(X, seed)``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .distributions import CategoricalParams, DomainError
from .relax import relaxed_weights
from .rng import RngState
from .sampling import PerturbedLogits, standard_gumbels
from .wor import gumbel_topk

__all__ = ["check_logits", "GumbelMaxSampler", "GumbelSoftmaxTransformer", "GumbelTopKTransformer"]


def check_logits(X) -> np.ndarray:
    """2-d float array of logits; ``-inf`` allowed, NaN and ``+inf`` not."""
    X = check_array(X, dtype=np.float64, ensure_all_finite=False)
    if np.any(np.isnan(X)) or np.any(X == np.inf):
        raise DomainError("logits must not contain NaN or +inf")
    if np.any(np.all(X == -np.inf, axis=1)):
        raise DomainError("every row needs at least one finite logit")
    return X


class _LogitsTransformer(TransformerMixin, BaseEstimator):
    def fit(self, X, y=None):
        X = check_logits(X)
        self.n_features_in_ = X.shape[1]
        return self

    def _validate(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_logits(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} columns, fitted with {self.n_features_in_}"
            )
        return X

    def _noise(self, shape):
        g, _ = standard_gumbels(RngState(self.seed), shape)
        return g

    def _log_theta(self, X):
        if not self.temperature > 0:
            raise DomainError(f"temperature must be > 0, got {self.temperature}")
        return X / self.temperature


class GumbelMaxSampler(_LogitsTransformer):
    """One exact categorical draw per row, as a one-hot row or an index."""

    def __init__(self, temperature=1.0, noise_scale=1.0, output="onehot", seed=0):
        self.temperature = temperature
        self.noise_scale = noise_scale
        self.output = output
        self.seed = seed

    def transform(self, X):
        X = self._validate(X)
        if self.output not in ("onehot", "index"):
            raise ValueError(f"output must be 'onehot' or 'index', got {self.output!r}")
        if not self.noise_scale >= 0:
            raise DomainError(f"noise_scale must be >= 0, got {self.noise_scale}")
        values = self._log_theta(X) + self.noise_scale * self._noise(X.shape)
        idx = np.argmax(values, axis=1)
        if self.output == "index":
            return idx
        out = np.zeros_like(X)
        out[np.arange(X.shape[0]), idx] = 1.0
        return out


class GumbelSoftmaxTransformer(_LogitsTransformer):
    """Relaxed sample ``softmax((a/T + g) / lam)`` per row.

    With ``hard=True`` the output is the one-hot of the relaxed sample's argmax.
    """

    def __init__(self, lam=1.0, temperature=1.0, hard=False, seed=0):
        self.lam = lam
        self.temperature = temperature
        self.hard = hard
        self.seed = seed

    def transform(self, X):
        X = self._validate(X)
        w = relaxed_weights(self._log_theta(X), self._noise(X.shape), self.lam)
        if not self.hard:
            return w
        out = np.zeros_like(w)
        out[np.arange(w.shape[0]), np.argmax(w, axis=1)] = 1.0
        return out


class GumbelTopKTransformer(_LogitsTransformer):
    """Indices of ``k`` classes sampled without replacement, in sampled order."""

    def __init__(self, k=1, temperature=1.0, seed=0):
        self.k = k
        self.temperature = temperature
        self.seed = seed

    def transform(self, X):
        X = self._validate(X)
        if not 1 <= self.k <= X.shape[1]:
            raise ValueError(f"k must be in 1..{X.shape[1]}, got {self.k}")
        c = CategoricalParams(np.zeros(X.shape[1]))
        values = self._log_theta(X) + self._noise(X.shape)
        return gumbel_topk(PerturbedLogits(values, c), self.k).indices
