"""Gumbel, truncated Gumbel, Exponential and categorical (Boltzmann) families.

All functions broadcast over numpy arrays. Parameters are small frozen
dataclasses; a ``beta`` of zero encodes the degenerate point mass of a Gumbel.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

__all__ = [
    "EULER_GAMMA",
    "DomainError",
    "GumbelParams",
    "TruncGumbelParams",
    "CategoricalParams",
    "GumbelSoftmaxParams",
    "gumbel_pdf",
    "gumbel_cdf",
    "gumbel_icdf",
    "gumbel_moments",
    "trunc_gumbel_icdf",
    "trunc_gumbel_cdf",
    "categorical_probs",
    "exponential_icdf",
    "exponential_cdf",
]

EULER_GAMMA = 0.57721566490153286061


class DomainError(ValueError):
    """An argument lies outside the domain of the function."""


@dataclass(frozen=True)
class GumbelParams:
    mu: float = 0.0
    beta: float = 1.0

    def __post_init__(self):
        if not self.beta >= 0:
            raise DomainError(f"Gumbel scale must be >= 0, got {self.beta}")


STANDARD_GUMBEL = GumbelParams(0.0, 1.0)


@dataclass(frozen=True)
class TruncGumbelParams:
    """Gumbel(mu, beta) conditioned on being at most ``bound``."""

    mu: float = 0.0
    beta: float = 1.0
    bound: float = math.inf

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError(f"truncated Gumbel scale must be > 0, got {self.beta}")
        if math.isnan(self.bound) or self.bound == -math.inf:
            raise DomainError(f"invalid truncation bound {self.bound}")


def _readonly(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class CategoricalParams:
    """Logits ``a`` and Boltzmann temperature ``T``; log-theta is ``a / T``.

    ``-inf`` logits are allowed and give a class zero mass.
    """

    logits: np.ndarray
    temperature: float = 1.0
    _log_z: float = field(init=False, repr=False)

    def __post_init__(self):
        logits = _readonly(self.logits)
        if logits.size < 1:
            raise DomainError("need at least one logit")
        if np.any(np.isnan(logits)) or np.any(logits == np.inf):
            raise DomainError("logits must be finite or -inf")
        if not self.temperature > 0:
            raise DomainError(f"temperature must be > 0, got {self.temperature}")
        if not np.any(np.isfinite(logits)):
            raise DomainError("all logits are -inf; the distribution has no mass")
        object.__setattr__(self, "logits", logits)
        object.__setattr__(self, "temperature", float(self.temperature))
        object.__setattr__(self, "_log_z", float(logsumexp(logits / self.temperature)))

    @classmethod
    def from_probs(cls, probs, temperature: float = 1.0) -> "CategoricalParams":
        with np.errstate(divide="ignore"):
            return cls(np.log(np.asarray(probs, dtype=float)), temperature)

    @property
    def n(self) -> int:
        return self.logits.size

    @property
    def log_theta(self) -> np.ndarray:
        return self.logits / self.temperature

    @property
    def theta(self) -> np.ndarray:
        return np.exp(self.log_theta)

    @property
    def log_z(self) -> float:
        return self._log_z

    @property
    def probs(self) -> np.ndarray:
        return categorical_probs(self)

    def with_temperature(self, temperature: float) -> "CategoricalParams":
        return CategoricalParams(self.logits, temperature)

    def __eq__(self, other):
        if not isinstance(other, CategoricalParams):
            return NotImplemented
        return self.temperature == other.temperature and np.array_equal(
            self.logits, other.logits
        )

    def __hash__(self):
        return hash((self.logits.tobytes(), self.temperature))

    def to_dict(self) -> dict:
        return {
            "logits": [None if v == -np.inf else float(v) for v in self.logits],
            "temperature": self.temperature,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "CategoricalParams":
        logits = [-np.inf if v is None else float(v) for v in data["logits"]]
        return cls(np.array(logits), float(data.get("temperature", 1.0)))

    @classmethod
    def from_json(cls, text: str) -> "CategoricalParams":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class GumbelSoftmaxParams:
    base: CategoricalParams
    lam: float = 1.0

    def __post_init__(self):
        if not self.lam > 0:
            raise DomainError(f"relaxation temperature must be > 0, got {self.lam}")


def _check_scale(p: GumbelParams):
    if p.beta == 0:
        raise DomainError("density is undefined for a degenerate Gumbel (beta = 0)")


def gumbel_pdf(x, p: GumbelParams = STANDARD_GUMBEL):
    _check_scale(p)
    z = (np.asarray(x, dtype=float) - p.mu) / p.beta
    with np.errstate(over="ignore"):
        return np.exp(-z - np.exp(-z)) / p.beta


def gumbel_cdf(x, p: GumbelParams = STANDARD_GUMBEL):
    _check_scale(p)
    z = (np.asarray(x, dtype=float) - p.mu) / p.beta
    with np.errstate(over="ignore"):
        return np.exp(-np.exp(-z))


def _open_unit(u, name="u"):
    u = np.asarray(u, dtype=float)
    if np.any(~((u > 0) & (u < 1))):
        raise DomainError(f"{name} must lie in the open interval (0, 1)")
    return u


def gumbel_icdf(u, p: GumbelParams = STANDARD_GUMBEL):
    """Quantile function ``mu - beta * log(-log u)``."""
    _check_scale(p)
    u = _open_unit(u)
    return p.mu - p.beta * np.log(-np.log(u))


def gumbel_moments(p: GumbelParams) -> tuple[float, float]:
    """Mean ``mu + gamma*beta`` and variance ``pi^2/6 * beta^2``."""
    return p.mu + EULER_GAMMA * p.beta, (math.pi**2 / 6.0) * p.beta**2


def _trunc_icdf(u, mu, beta, bound):
    with np.errstate(divide="ignore"):
        log_neg_log_u = np.log(-np.log(u))
    x = mu - beta * np.logaddexp((mu - bound) / beta, log_neg_log_u)
    return np.where(u == 1, bound, np.minimum(x, bound))[()]


def _trunc_cdf(x, mu, beta, bound):
    z = (np.minimum(x, bound) - mu) / beta
    zm = (bound - mu) / beta
    with np.errstate(over="ignore"):
        log_cdf = np.exp(-zm) - np.exp(-z)
    return np.exp(np.minimum(log_cdf, 0.0))


def trunc_gumbel_icdf(u, p: TruncGumbelParams):
    """Quantile of Gumbel(mu, beta) truncated above at ``p.bound``.

    ``mu - beta * log(exp((mu - m)/beta) - log u)`` evaluated as a log-sum-exp
    of ``(mu - m)/beta`` and ``log(-log u)`` so that ``m << mu`` cannot overflow.
    """
    u = np.asarray(u, dtype=float)
    if np.any(~((u > 0) & (u <= 1))):
        raise DomainError("u must lie in (0, 1]")
    return _trunc_icdf(u, p.mu, p.beta, p.bound)


def trunc_gumbel_cdf(x, p: TruncGumbelParams):
    return _trunc_cdf(np.asarray(x, dtype=float), p.mu, p.beta, p.bound)


def categorical_probs(c: CategoricalParams) -> np.ndarray:
    """Softmax of ``a / T`` via max-subtraction; -inf logits map to 0."""
    return np.exp(c.log_theta - c.log_z)


def exponential_icdf(u, rate):
    if not np.all(np.asarray(rate) > 0):
        raise DomainError(f"rate must be > 0, got {rate}")
    u = _open_unit(u)
    return -np.log1p(-u) / rate


def exponential_cdf(x, rate):
    x = np.asarray(x, dtype=float)
    return np.where(x < 0, 0.0, -np.expm1(-rate * np.maximum(x, 0.0)))[()]
