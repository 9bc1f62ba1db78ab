"""Gradient estimators for d/da E[f(X)], X ~ Cat(a, T).

REINFORCE (score function), the pathwise Gumbel-Softmax estimator and its
straight-through variant, with the exact gradient and finite differences as
references. All Jacobians are written out by hand.

Payoffs live on the simplex: ``f(S) = <c, S>`` (linear) or ``sum c_i S_i^2``
(quadratic). Both equal ``c_w`` at a vertex, so the discrete objective is
``sum_i pi_i c_i`` in either case.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .distributions import CategoricalParams, DomainError, GumbelSoftmaxParams
from .relax import relaxed_weights
from .rng import RngState, fork_stream
from .sampling import gumbel_max, perturb, standard_gumbels

__all__ = [
    "Objective",
    "EstimatorReport",
    "analytic_grad",
    "finite_difference_grad",
    "relaxed_objective",
    "reinforce_samples",
    "gs_samples",
    "st_gs_samples",
    "reinforce_grad",
    "gs_grad",
    "st_gs_grad",
    "ESTIMATORS",
    "VarianceConfig",
    "variance_report",
]


@dataclass(frozen=True, eq=False)
class Objective:
    payoff: np.ndarray
    kind: str = "linear"
    description: str = ""

    def __post_init__(self):
        payoff = np.array(self.payoff, dtype=float).reshape(-1)
        if not np.all(np.isfinite(payoff)):
            raise DomainError("payoff entries must be finite")
        if self.kind not in ("linear", "quadratic"):
            raise ValueError(f"unknown payoff kind {self.kind!r}")
        object.__setattr__(self, "payoff", payoff)

    def value(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "linear":
            return s @ self.payoff
        return (s**2) @ self.payoff

    def grad(self, s):
        """df/dS, row-wise."""
        s = np.asarray(s, dtype=float)
        if self.kind == "linear":
            return np.broadcast_to(self.payoff, s.shape)
        return 2.0 * self.payoff * s

    def at_vertex(self, index):
        return self.payoff[index]


@dataclass(frozen=True, eq=False)
class EstimatorReport:
    grad_mean: np.ndarray
    grad_std_err: np.ndarray
    n_samples: int
    oracle_grad: np.ndarray
    max_abs_bias: float
    estimator: str = ""
    lam: float | None = None
    grad_var: np.ndarray = field(default=None, repr=False)

    def within(self, k_sigma: float = 3.0) -> np.ndarray:
        """Per-coordinate: |mean - oracle| <= k_sigma * std_err."""
        return np.abs(self.grad_mean - self.oracle_grad) <= k_sigma * self.grad_std_err

    def to_dict(self) -> dict:
        out = asdict(self)
        for key, value in out.items():
            if isinstance(value, np.ndarray):
                out[key] = value.tolist()
        return out


def analytic_grad(c: CategoricalParams, obj: Objective) -> np.ndarray:
    """Exact gradient ``pi_j (c_j - <pi, c>) / T`` of the discrete objective."""
    pi = c.probs
    return pi * (obj.payoff - pi @ obj.payoff) / c.temperature


def finite_difference_grad(func, x, h: float = 1e-5) -> np.ndarray:
    """Central differences of a scalar function of a vector."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for j in range(x.size):
        step = np.zeros_like(x)
        step[j] = h
        out[j] = (func(x + step) - func(x - step)) / (2 * h)
    return out


def relaxed_objective(logits, noise, obj: Objective, lam: float, temperature=1.0):
    """Average of ``f(S)`` over a fixed batch of Gumbel noise vectors."""
    log_theta = np.asarray(logits, dtype=float) / temperature
    return float(np.mean(obj.value(relaxed_weights(log_theta, noise, lam))))


def _softmax_vjp(s, d, lam, temperature):
    # sum_i d_i dS_i/da_j with dS_i/da_j = S_i (1{i=j} - S_j) / (lam T)
    inner = np.sum(d * s, axis=-1, keepdims=True)
    return s * (d - inner) / (lam * temperature)


def reinforce_samples(c: CategoricalParams, obj: Objective, n_samples: int, rng):
    """Per-sample ``f(X) d log p(X)/da``; shape ``(n_samples, N)``."""
    pl, rng = perturb(c, rng, size=n_samples)
    idx = gumbel_max(pl).index
    score = -np.broadcast_to(c.probs, (n_samples, c.n)).copy()
    score[np.arange(n_samples), idx] += 1.0
    return obj.at_vertex(idx)[:, None] * score / c.temperature, rng


def gs_samples(p: GumbelSoftmaxParams, obj: Objective, n_samples: int, rng, noise=None):
    """Per-sample pathwise gradients through the relaxed sample."""
    c = p.base
    if noise is None:
        noise, rng = standard_gumbels(rng, (n_samples, c.n))
    s = relaxed_weights(c.log_theta, noise, p.lam)
    return _softmax_vjp(s, obj.grad(s), p.lam, c.temperature), rng


def st_gs_samples(p: GumbelSoftmaxParams, obj: Objective, n_samples: int, rng, noise=None):
    """Straight-through: df/dX at the hard one-hot, Jacobian of the soft sample."""
    c = p.base
    if noise is None:
        noise, rng = standard_gumbels(rng, (n_samples, c.n))
    s = relaxed_weights(c.log_theta, noise, p.lam)
    hard = np.zeros_like(s)
    np.put_along_axis(hard, np.argmax(s, axis=-1)[:, None], 1.0, axis=-1)
    return _softmax_vjp(s, obj.grad(hard), p.lam, c.temperature), rng


def _report(samples, oracle, name, lam=None) -> EstimatorReport:
    n = samples.shape[0]
    mean = samples.mean(axis=0)
    var = samples.var(axis=0, ddof=1) if n > 1 else np.zeros(samples.shape[1])
    std_err = np.sqrt(var / n)
    return EstimatorReport(
        grad_mean=mean,
        grad_std_err=std_err,
        n_samples=n,
        oracle_grad=oracle,
        max_abs_bias=float(np.max(np.abs(mean - oracle))),
        estimator=name,
        lam=lam,
        grad_var=var,
    )


def _check_n(n_samples):
    if n_samples < 1:
        raise DomainError("need at least one sample")


def reinforce_grad(c: CategoricalParams, obj: Objective, n_samples: int, rng: RngState):
    _check_n(n_samples)
    samples, rng = reinforce_samples(c, obj, n_samples, rng)
    return _report(samples, analytic_grad(c, obj), "reinforce"), rng


def gs_grad(p: GumbelSoftmaxParams, obj: Objective, n_samples: int, rng: RngState):
    """Gumbel-Softmax estimate; ``max_abs_bias`` is measured against the discrete gradient."""
    _check_n(n_samples)
    samples, rng = gs_samples(p, obj, n_samples, rng)
    return _report(samples, analytic_grad(p.base, obj), "gs", p.lam), rng


def st_gs_grad(p: GumbelSoftmaxParams, obj: Objective, n_samples: int, rng: RngState):
    _check_n(n_samples)
    samples, rng = st_gs_samples(p, obj, n_samples, rng)
    return _report(samples, analytic_grad(p.base, obj), "stgs", p.lam), rng


ESTIMATORS = {"reinforce": reinforce_grad, "gs": gs_grad, "stgs": st_gs_grad}


@dataclass(frozen=True, eq=False)
class VarianceConfig:
    categorical: CategoricalParams
    objective: Objective
    lambdas: tuple = (0.1, 0.5, 1.0, 2.0)
    n_samples: int = 1000
    n_reps: int = 20
    seed: int = 0


def variance_report(cfg: VarianceConfig) -> list[dict]:
    """Bias/variance table for REINFORCE and GS over a sweep of ``lam``.

    One row per (estimator, lam, coordinate). ``mean`` and ``bias`` average the
    per-replicate estimates, ``bias_se`` is their standard error, and
    ``variance`` is the per-sample variance pooled over replicates. Every
    replicate runs on its own stream, so the table depends only on ``cfg``.
    """
    c, obj = cfg.categorical, cfg.objective
    oracle = analytic_grad(c, obj)
    root = RngState(cfg.seed, 0)
    rows = []
    stream = 0
    for lam in cfg.lambdas:
        p = GumbelSoftmaxParams(c, lam)
        for name in ("reinforce", "gs"):
            means, variances = [], []
            for _ in range(cfg.n_reps):
                stream += 1
                rng = fork_stream(root, stream)
                if name == "reinforce":
                    samples, _ = reinforce_samples(c, obj, cfg.n_samples, rng)
                else:
                    samples, _ = gs_samples(p, obj, cfg.n_samples, rng)
                means.append(samples.mean(axis=0))
                variances.append(samples.var(axis=0, ddof=1))
            means = np.array(means)
            est_mean = means.mean(axis=0)
            bias_se = means.std(axis=0, ddof=1) / np.sqrt(cfg.n_reps)
            pooled_var = np.mean(variances, axis=0)
            for j in range(c.n):
                rows.append(
                    {
                        "estimator": name,
                        "lam": float(lam),
                        "coord": j,
                        "mean": float(est_mean[j]),
                        "variance": float(pooled_var[j]),
                        "bias": float(est_mean[j] - oracle[j]),
                        "bias_se": float(bias_se[j]),
                    }
                )
    return rows
