"""Gumbel-Softmax (Concrete) relaxation of categorical samples."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, softmax

from .distributions import DomainError, GumbelSoftmaxParams
from .rng import RngState
from .sampling import standard_gumbels

__all__ = [
    "SoftSample",
    "relaxed_weights",
    "gs_sample",
    "st_gs_sample",
    "scaled_noise_relaxation",
    "binary_gs_weight",
    "effective_gs_temperature",
    "log_convexity_bound",
]


@dataclass(frozen=True, eq=False)
class SoftSample:
    """Point on the simplex plus the Gumbel noise that produced it.

    Keeping ``noise`` lets gradient code re-evaluate the same sample path.
    """

    weights: np.ndarray
    lam: float
    noise: np.ndarray

    @property
    def argmax(self):
        return np.argmax(self.weights, axis=-1)[()]


def relaxed_weights(log_theta, noise, lam: float) -> np.ndarray:
    """``softmax((log theta + g) / lam)`` along the last axis."""
    if not lam > 0:
        raise DomainError(f"relaxation temperature must be > 0, got {lam}")
    return softmax((np.asarray(log_theta) + noise) / lam, axis=-1)


def gs_sample(p: GumbelSoftmaxParams, rng: RngState, size=None, noise=None):
    """One (or ``size``) Gumbel-Softmax samples; returns ``(SoftSample, state)``."""
    if noise is None:
        shape = (p.base.n,) if size is None else (int(size), p.base.n)
        noise, rng = standard_gumbels(rng, shape)
    else:
        noise = np.asarray(noise, dtype=float)
    weights = relaxed_weights(p.base.log_theta, noise, p.lam)
    return SoftSample(weights, p.lam, noise), rng


def st_gs_sample(p: GumbelSoftmaxParams, rng: RngState, size=None, noise=None):
    """Straight-through pair: one-hot of the soft sample's argmax, and the soft sample."""
    soft, rng = gs_sample(p, rng, size=size, noise=noise)
    idx = np.argmax(soft.weights, axis=-1)
    hard = np.zeros_like(soft.weights)
    np.put_along_axis(hard, np.expand_dims(idx, -1), 1.0, axis=-1)
    return hard, soft, rng


def scaled_noise_relaxation(logits, noise, noise_scale: float, lam: float):
    """``softmax((a + beta g) / lam)``: the relaxed scaled-noise Gumbel-max sample."""
    return relaxed_weights(np.asarray(logits) + noise_scale * np.asarray(noise), 0.0, lam)


def binary_gs_weight(log_theta, noise, lam: float):
    """Weight of class 0 for N = 2, written as a sigmoid."""
    log_theta = np.asarray(log_theta, dtype=float)
    noise = np.asarray(noise, dtype=float)
    diff = (log_theta[0] - log_theta[1]) + (noise[..., 0] - noise[..., 1])
    return expit(diff / lam)


def effective_gs_temperature(boltzmann_t: float, lam: float) -> float:
    """Temperature seen by the relaxation when ``T`` enters as a noise scale.

    Relaxing the scaled-noise sampler of Cat(a, T) at ``lam`` gives
    ``softmax((a + T g)/lam) = softmax((a/T + g) / (lam/T))``: a Gumbel-Softmax
    sample of Cat(a, T) at temperature ``lam / T``.
    """
    if not (boltzmann_t > 0 and lam > 0):
        raise DomainError("both temperatures must be positive")
    return lam / boltzmann_t


def log_convexity_bound(n: int) -> float:
    """Largest lam, ``1/(N-1)``, for which the relaxed density has no interior mode."""
    if n < 2:
        raise DomainError(f"need N >= 2 classes, got {n}")
    return 1.0 / (n - 1)
