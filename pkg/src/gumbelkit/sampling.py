"""Exact categorical sampling.

Inverse transform sampling, the Gumbel-max trick (plain, scaled-noise and
restricted to a sub-domain) and the Exponential race. Every sampler takes an
``RngState`` and returns its result together with the advanced state. Passing
``size`` draws a batch; batched results carry a leading axis of that length.

Perturbation consumes one uniform per class, in class order, so draws that
share a stream share their noise coordinate by coordinate.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .distributions import (
    CategoricalParams,
    DomainError,
    GumbelParams,
    gumbel_icdf,
)
from .rng import RngState, uniforms

__all__ = [
    "PerturbedLogits",
    "DrawResult",
    "IndexSubset",
    "standard_gumbels",
    "categorical_icdf",
    "inverse_transform_sample",
    "perturb",
    "gumbel_max",
    "gumbel_max_scaled",
    "gumbel_max_subdomain",
    "exponential_race",
]


@dataclass(frozen=True, eq=False)
class PerturbedLogits:
    """``log theta_i + g_i`` for every class; shape ``(N,)`` or ``(n, N)``."""

    values: np.ndarray
    source: CategoricalParams

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape[-1] != self.source.n:
            raise ValueError(
                f"expected {self.source.n} perturbed logits, got {values.shape[-1]}"
            )
        object.__setattr__(self, "values", values)

    @property
    def batched(self) -> bool:
        return self.values.ndim == 2


@dataclass(frozen=True, eq=False)
class DrawResult:
    index: int | np.ndarray
    max_value: float | np.ndarray


@dataclass(frozen=True)
class IndexSubset:
    members: frozenset

    def __init__(self, members):
        members = frozenset(int(i) for i in members)
        if not members:
            raise DomainError("index subset is empty")
        object.__setattr__(self, "members", members)

    def mask(self, n: int) -> np.ndarray:
        if max(self.members) >= n or min(self.members) < 0:
            raise DomainError(f"subset {sorted(self.members)} outside 0..{n - 1}")
        out = np.zeros(n, dtype=bool)
        out[list(self.members)] = True
        return out


def _shape(size, n):
    if size is None:
        return (n,)
    return (int(size), n)


def standard_gumbels(rng: RngState, shape) -> tuple[np.ndarray, RngState]:
    u, rng = uniforms(rng, shape)
    return gumbel_icdf(u), rng


def categorical_icdf(probs, u):
    """Class whose CDF bin ``[F_{i-1}, F_i)`` contains ``u``."""
    probs = np.asarray(probs, dtype=float)
    cdf = np.cumsum(probs)
    idx = np.searchsorted(cdf, np.asarray(u) * cdf[-1], side="right")
    # rounding can push u past the last bin; fall back to the last class with mass
    last = np.flatnonzero(probs > 0)[-1]
    return np.minimum(idx, last)[()]


def inverse_transform_sample(c: CategoricalParams, rng: RngState, size=None):
    probs = c.probs
    if not np.any(probs > 0):
        raise DomainError("categorical has no mass")
    u, rng = uniforms(rng, size)
    return categorical_icdf(probs, u), rng


def perturb(c: CategoricalParams, rng: RngState, size=None, noise=None):
    """Add i.i.d. standard Gumbel noise to ``log theta``.

    ``noise`` injects a fixed Gumbel vector (or batch) instead of drawing one;
    the state is then returned unchanged.
    """
    if noise is None:
        noise, rng = standard_gumbels(rng, _shape(size, c.n))
    else:
        noise = np.asarray(noise, dtype=float)
    return PerturbedLogits(c.log_theta + noise, c), rng


def _argmax(values: np.ndarray) -> DrawResult:
    finite_any = np.any(values > -np.inf, axis=-1)
    if not np.all(finite_any):
        raise DomainError("all perturbed logits are -inf")
    index = np.argmax(values, axis=-1)
    max_value = np.take_along_axis(values, np.expand_dims(index, -1), axis=-1)[..., 0]
    return DrawResult(index[()], max_value[()])


def gumbel_max(pl: PerturbedLogits) -> DrawResult:
    """Argmax (lowest index on ties) and max of the perturbed logits."""
    return _argmax(pl.values)


def gumbel_max_scaled(
    c: CategoricalParams, noise: GumbelParams, rng: RngState, size=None
):
    """Gumbel-max with Gumbel(mu, beta) noise.

    The index follows Cat(a, T*beta) and the max Gumbel(mu + beta*log Z', beta).
    ``beta = 0`` is the greedy limit: the argmax of the logits, with a warning.
    Uniforms are consumed exactly as in :func:`perturb` for every ``beta``.
    """
    g, rng = standard_gumbels(rng, _shape(size, c.n))
    if noise.beta == 0:
        warnings.warn(
            "noise scale 0: sampling is the deterministic argmax of the logits",
            stacklevel=2,
        )
        g = np.zeros_like(g)
    values = c.log_theta + noise.beta * g + noise.mu
    return _argmax(values), rng


def gumbel_max_subdomain(pl: PerturbedLogits, b) -> DrawResult:
    """Gumbel-max restricted to the classes in ``b``."""
    b = b if isinstance(b, IndexSubset) else IndexSubset(b)
    mask = b.mask(pl.source.n)
    if not np.any(mask & (pl.source.log_theta > -np.inf)):
        raise DomainError("subset contains no class with positive mass")
    return _argmax(np.where(mask, pl.values, -np.inf))


def exponential_race(c: CategoricalParams, rng: RngState, size=None):
    """First arrival among independent Exponential(theta_i) clocks.

    Uses ``X_i = -log u_i`` on the same uniforms as :func:`perturb`, so
    ``-log(X_i / theta_i)`` equals the perturbed logits. Returns
    ``(index, min_time, state)``; ``min_time`` is Exponential(Z).
    """
    u, rng = uniforms(rng, _shape(size, c.n))
    times = -np.log(u) * np.exp(-c.log_theta)
    index = np.argmin(times, axis=-1)
    min_time = np.take_along_axis(times, np.expand_dims(index, -1), axis=-1)[..., 0]
    return index[()], min_time[()], rng
