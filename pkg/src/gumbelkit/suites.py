"""Seeded invariant suites behind ``gumbelkit verify``.

Each suite returns a list of :class:`Check` records. Sample sizes are kept
moderate so that ``verify all`` finishes in well under a minute; the full
acceptance sizes live in the test suite.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .distributions import CategoricalParams, GumbelParams, GumbelSoftmaxParams, gumbel_cdf
from .estimators import (
    Objective,
    finite_difference_grad,
    gs_samples,
    reinforce_grad,
    relaxed_objective,
)
from .rng import RngState, fork_stream, uniforms
from .sampling import exponential_race, gumbel_max, inverse_transform_sample, perturb
from .stats import chi_square_gof, ks_one_sample, ks_two_sample, moment_check
from .topdown import (
    TopDownConstruction,
    assemble_perturbed_logits,
    conditional_perturbed_logits,
    transform_to_truncated,
)
from .wor import gumbel_topk, plackett_luce_prob, sequential_wor

__all__ = ["Check", "SUITES", "run_suite", "random_categorical"]


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    passed: bool
    statistic: float
    p_value: float | None = None

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "check": self.name,
            "passed": self.passed,
            "statistic": self.statistic,
            "p_value": self.p_value,
        }


def _gof(suite, name, res) -> Check:
    return Check(suite, name, res.passed, res.statistic, res.p_value)


def random_categorical(rng: RngState, n: int) -> tuple[CategoricalParams, RngState]:
    """Logits uniform on (-2, 2); used for seeded test instances."""
    u, rng = uniforms(rng, n)
    return CategoricalParams(4.0 * u - 2.0), rng


def _counts(index, n):
    return np.bincount(np.asarray(index).reshape(-1), minlength=n)


def suite_exactness(rng: RngState, n_draws: int = 50_000) -> list[Check]:
    checks = []
    for case in range(5):
        sub = fork_stream(rng, 100 + case)
        c, sub = random_categorical(sub, 2 + 2 * case)
        pl, sub = perturb(c, sub, size=n_draws)
        idx = gumbel_max(pl).index
        checks.append(_gof("exactness", f"gumbel_max N={c.n}", chi_square_gof(_counts(idx, c.n), c.probs)))
        race, _, sub = exponential_race(c, sub, size=n_draws)
        checks.append(_gof("exactness", f"exponential_race N={c.n}", chi_square_gof(_counts(race, c.n), c.probs)))
        inv, sub = inverse_transform_sample(c, sub, size=n_draws)
        checks.append(_gof("exactness", f"inverse_transform N={c.n}", chi_square_gof(_counts(inv, c.n), c.probs)))
    return checks


def suite_max_stability(rng: RngState, n_draws: int = 50_000) -> list[Check]:
    c, rng = random_categorical(fork_stream(rng, 200), 6)
    pl, rng = perturb(c, rng, size=n_draws)
    m = gumbel_max(pl).max_value
    ks = ks_one_sample(m, lambda x: gumbel_cdf(x, GumbelParams(c.log_z)))
    mean, var = c.log_z + 0.5772156649015329, np.pi**2 / 6
    ok = moment_check(m, mean, var, 3.0)
    return [
        _gof("max-stability", "KS max vs Gumbel(log Z)", ks),
        Check("max-stability", "mean/variance within 3 SE", ok, float(np.mean(m) - mean)),
    ]


def suite_independence(rng: RngState, n_draws: int = 50_000) -> list[Check]:
    c = CategoricalParams(np.log([0.4, 0.3, 0.2, 0.1]))
    pl, rng = perturb(c, fork_stream(rng, 300), size=n_draws)
    d = gumbel_max(pl)
    checks = []
    for i, j in itertools.combinations(range(c.n), 2):
        res = ks_two_sample(d.max_value[d.index == i], d.max_value[d.index == j])
        checks.append(_gof("independence", f"KS M|I={i} vs M|I={j}", res))
    return checks


def _coordinate_checks(suite, label, values, c) -> list[Check]:
    checks = []
    for i in range(c.n):
        res = ks_one_sample(values[:, i], lambda x, i=i: gumbel_cdf(x, GumbelParams(c.log_theta[i])))
        checks.append(_gof(suite, f"{label} coordinate {i} KS", res))
    counts = _counts(np.argmax(values, axis=1), c.n)
    checks.append(_gof(suite, f"{label} argmax chi-square", chi_square_gof(counts, c.probs)))
    return checks


def suite_topdown(rng: RngState, n_draws: int = 20_000) -> list[Check]:
    c = CategoricalParams(np.log([0.35, 0.25, 0.2, 0.15, 0.05]))
    rng = fork_stream(rng, 400)
    omega, rng = inverse_transform_sample(c, rng, size=n_draws)
    u, rng = uniforms(rng, n_draws)
    m = c.log_z - np.log(-np.log(u))
    cond, rng = conditional_perturbed_logits(omega, m, c, rng)
    checks = _coordinate_checks("topdown", "conditional", cond.values, c)
    pl, rng = perturb(c, rng, size=n_draws)
    u, rng = uniforms(rng, n_draws)
    trans = transform_to_truncated(pl, c.log_z - np.log(-np.log(u)))
    checks += _coordinate_checks("topdown", "transform", trans.values, c)
    rows = []
    for r in range(n_draws // 4):
        rows.append(assemble_perturbed_logits(TopDownConstruction(c, fork_stream(rng, 10_000 + r)), c).values)
    checks += _coordinate_checks("topdown", "construction", np.array(rows), c)
    return checks


def suite_wor(rng: RngState, n_draws: int = 200_000) -> list[Check]:
    c = CategoricalParams(np.log([0.4, 0.3, 0.2, 0.1]))
    k = 3
    seqs = list(itertools.permutations(range(c.n), k))
    probs = np.array([plackett_luce_prob(c, s) for s in seqs])
    weights = c.n ** np.arange(k)[::-1]
    position = {int(np.dot(s, weights)): i for i, s in enumerate(seqs)}

    def counts(rows):
        out = np.zeros(len(seqs))
        keys, cnt = np.unique(rows @ weights, return_counts=True)
        for key, n in zip(keys, cnt):
            out[position[int(key)]] += n
        return out

    rng = fork_stream(rng, 500)
    pl, rng = perturb(c, rng, size=n_draws)
    topk = gumbel_topk(pl, k).indices
    seq, rng = sequential_wor(c, k, rng, size=n_draws)
    return [
        _gof("wor", "gumbel_topk vs Plackett-Luce", chi_square_gof(counts(topk), probs)),
        _gof("wor", "sequential_wor vs Plackett-Luce", chi_square_gof(counts(seq), probs)),
    ]


def suite_gradients(rng: RngState, n_samples: int = 50_000) -> list[Check]:
    c = CategoricalParams(np.log([0.5, 0.3, 0.2]))
    obj = Objective([1.0, 2.0, 3.0])
    rep, rng = reinforce_grad(c, obj, n_samples, fork_stream(rng, 600))
    z = float(np.max(np.abs(rep.grad_mean - rep.oracle_grad) / rep.grad_std_err))
    checks = [Check("gradients", "REINFORCE within 3 SE of exact", bool(np.all(rep.within(3.0))), z)]
    lam = 0.5
    noise, _ = uniforms(fork_stream(rng, 601), (512, c.n))
    noise = -np.log(-np.log(noise))
    p = GumbelSoftmaxParams(c, lam)
    path, _ = gs_samples(p, obj, 512, None, noise=noise)
    fd = finite_difference_grad(lambda a: relaxed_objective(a, noise, obj, lam), c.logits, 1e-4)
    rel = float(np.max(np.abs(path.mean(axis=0) - fd)) / np.max(np.abs(fd)))
    checks.append(Check("gradients", "GS pathwise vs finite differences", rel <= 1e-5, rel))
    return checks


SUITES = {
    "exactness": suite_exactness,
    "max-stability": suite_max_stability,
    "independence": suite_independence,
    "topdown": suite_topdown,
    "wor": suite_wor,
    "gradients": suite_gradients,
}


def run_suite(name: str, seed: int = 0) -> list[Check]:
    if name == "all":
        names = list(SUITES)
    elif name in SUITES:
        names = [name]
    else:
        raise KeyError(name)
    rng = RngState(seed)
    checks = []
    for n in names:
        checks.extend(SUITES[n](rng))
    return checks
