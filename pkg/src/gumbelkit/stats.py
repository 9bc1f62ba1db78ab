"""Goodness-of-fit and two-sample tests used to check the samplers.

The test statistics are computed here; p-values come from the chi-square and
Kolmogorov distributions in ``scipy.stats``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats as _sps

__all__ = [
    "DEFAULT_ALPHA",
    "GofResult",
    "chi_square_gof",
    "ks_two_sample",
    "ks_one_sample",
    "moment_check",
    "entropy",
]

DEFAULT_ALPHA = 0.001


@dataclass(frozen=True)
class GofResult:
    statistic: float
    p_value: float
    dof: int
    alpha: float
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _result(statistic, p_value, dof, alpha) -> GofResult:
    p_value = float(min(max(p_value, 0.0), 1.0))
    return GofResult(float(statistic), p_value, int(dof), alpha, p_value > alpha)


def _merge_small_bins(observed, expected, min_expected=5.0):
    """Merge neighbouring bins left to right until each expects >= min_expected."""
    obs_out, exp_out = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(observed, expected):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            obs_out.append(acc_o)
            exp_out.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 or acc_o > 0:
        if exp_out:
            obs_out[-1] += acc_o
            exp_out[-1] += acc_e
        else:
            obs_out.append(acc_o)
            exp_out.append(acc_e)
    return np.array(obs_out), np.array(exp_out)


def chi_square_gof(counts, expected_probs, alpha: float = DEFAULT_ALPHA) -> GofResult:
    """Pearson chi-square of observed counts against category probabilities."""
    counts = np.asarray(counts, dtype=float).reshape(-1)
    probs = np.asarray(expected_probs, dtype=float).reshape(-1)
    if counts.shape != probs.shape:
        raise ValueError("counts and expected_probs differ in length")
    if np.any(probs < 0) or not probs.sum() > 0:
        raise ValueError("expected probabilities must be nonnegative and not all zero")
    total = counts.sum()
    if total < 1:
        raise ValueError("need at least one observation")
    support = probs > 0
    if np.any(counts[~support] > 0):
        # an observation in an impossible bin is conclusive
        return _result(np.inf, 0.0, max(int(support.sum()) - 1, 0), alpha)
    probs = probs[support] / probs[support].sum()
    observed, expected = _merge_small_bins(counts[support], total * probs)
    dof = observed.size - 1
    if dof < 1:
        return _result(0.0, 1.0, 0, alpha)
    statistic = float(np.sum((observed - expected) ** 2 / expected))
    return _result(statistic, _sps.chi2.sf(statistic, dof), dof, alpha)


def ks_two_sample(xs, ys, alpha: float = DEFAULT_ALPHA) -> GofResult:
    """Two-sample Kolmogorov-Smirnov with the asymptotic Kolmogorov p-value."""
    xs = np.sort(np.asarray(xs, dtype=float).reshape(-1))
    ys = np.sort(np.asarray(ys, dtype=float).reshape(-1))
    n, m = xs.size, ys.size
    if n == 0 or m == 0:
        raise ValueError("both samples must be nonempty")
    grid = np.concatenate([xs, ys])
    cdf_x = np.searchsorted(xs, grid, side="right") / n
    cdf_y = np.searchsorted(ys, grid, side="right") / m
    d = float(np.max(np.abs(cdf_x - cdf_y)))
    en = np.sqrt(n * m / (n + m))
    return _result(d, _sps.kstwobign.sf(en * d), 0, alpha)


def ks_one_sample(xs, cdf, alpha: float = DEFAULT_ALPHA) -> GofResult:
    """One-sample KS of ``xs`` against a continuous CDF callable."""
    xs = np.sort(np.asarray(xs, dtype=float).reshape(-1))
    n = xs.size
    if n == 0:
        raise ValueError("sample must be nonempty")
    f = np.asarray(cdf(xs), dtype=float)
    i = np.arange(1, n + 1)
    d = float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))
    return _result(d, _sps.kstwo.sf(d, n), 0, alpha)


def moment_check(xs, expected_mean, expected_var, k_sigma: float = 3.0) -> bool:
    """Sample mean and variance each within ``k_sigma`` standard errors."""
    xs = np.asarray(xs, dtype=float).reshape(-1)
    n = xs.size
    if n < 2:
        raise ValueError("need at least two observations")
    mean = xs.mean()
    centered = xs - mean
    var = centered.var(ddof=1)
    m4 = np.mean(centered**4)
    se_mean = np.sqrt(var / n)
    se_var = np.sqrt(max(m4 - var**2, 0.0) / n)
    # rounding slack so that degenerate (constant) samples can pass
    eps = 1e-12 * max(1.0, abs(expected_mean), abs(expected_var))
    return bool(
        abs(mean - expected_mean) <= k_sigma * se_mean + eps
        and abs(var - expected_var) <= k_sigma * se_var + eps
    )


def entropy(probs_or_counts) -> float:
    """Shannon entropy (nats) of a histogram, normalized first."""
    p = np.asarray(probs_or_counts, dtype=float)
    p = p / p.sum()
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))
