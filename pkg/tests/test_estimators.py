import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gumbelkit.distributions import CategoricalParams, DomainError, GumbelSoftmaxParams
from gumbelkit.estimators import (
    Objective,
    VarianceConfig,
    _softmax_vjp,
    analytic_grad,
    finite_difference_grad,
    gs_grad,
    gs_samples,
    reinforce_grad,
    relaxed_objective,
    st_gs_grad,
    st_gs_samples,
    variance_report,
)
from gumbelkit.relax import relaxed_weights
from gumbelkit.rng import RngState
from gumbelkit.sampling import standard_gumbels


def _expected_payoff(logits, payoff, t=1.0):
    z = np.exp(np.asarray(logits) / t - np.max(np.asarray(logits) / t))
    return float(z @ payoff / z.sum())


def test_analytic_examples():
    c = CategoricalParams([0.3, -1.0, 0.5])
    assert np.allclose(analytic_grad(c, Objective([5, 5, 5])), 0.0, atol=1e-15)
    uniform = CategoricalParams([0.0, 0.0])
    assert np.allclose(analytic_grad(uniform, Objective([1, 0])), [0.25, -0.25], atol=1e-15)


@given(
    logits=st.lists(st.floats(-3, 3), min_size=2, max_size=6),
    t=st.floats(0.3, 3),
    data=st.data(),
)
def test_analytic_matches_finite_differences(logits, t, data):
    payoff = data.draw(st.lists(st.floats(-5, 5), min_size=len(logits), max_size=len(logits)))
    c = CategoricalParams(logits, t)
    fd = finite_difference_grad(lambda a: _expected_payoff(a, np.array(payoff), t), np.array(logits), 1e-5)
    assert np.allclose(analytic_grad(c, Objective(payoff)), fd, atol=1e-7)


def test_softmax_vjp_matches_jacobian():
    s = relaxed_weights(np.array([0.1, 0.4, -0.2]), np.array([0.3, -0.1, 0.9]), 0.7)
    d = np.array([1.0, -2.0, 0.5])
    jac = (np.diag(s) - np.outer(s, s)) / 0.7
    assert np.allclose(_softmax_vjp(s, d, 0.7, 1.0), d @ jac, atol=1e-15)


def test_reinforce_examples(three_class):
    rep, _ = reinforce_grad(three_class, Objective([7.0, 7.0, 7.0]), 20_000, RngState(1))
    assert np.all(rep.within(3.0))
    rep, _ = reinforce_grad(three_class, Objective([1.0, 2.0, 3.0]), 100_000, RngState(2))
    assert np.all(rep.within(3.0))
    rep, _ = reinforce_grad(CategoricalParams([0.4]), Objective([3.0]), 100, RngState(3))
    assert np.all(rep.grad_mean == 0.0)


def test_score_function_has_zero_mean(three_class):
    rep, _ = reinforce_grad(three_class, Objective([1.0, 1.0, 1.0]), 50_000, RngState(4))
    assert np.all(rep.within(3.0))


def test_gs_constant_payoff_is_exactly_zero(three_class):
    per_sample, _ = gs_samples(GumbelSoftmaxParams(three_class, 0.5), Objective([2.0, 2.0, 2.0]), 100, RngState(5))
    assert np.max(np.abs(per_sample)) < 1e-14
    rep, _ = st_gs_grad(GumbelSoftmaxParams(three_class, 0.5), Objective([2.0, 2.0, 2.0]), 100, RngState(5))
    assert np.max(np.abs(rep.grad_mean)) < 1e-14


@pytest.mark.parametrize("kind", ["linear", "quadratic"])
def test_gs_pathwise_matches_finite_differences(kind, three_class):
    g, _ = standard_gumbels(RngState(6), (512, 3))
    obj = Objective([1.0, 2.0, 3.0], kind)
    path, _ = gs_samples(GumbelSoftmaxParams(three_class, 0.5), obj, 512, None, noise=g)
    fd = finite_difference_grad(lambda a: relaxed_objective(a, g, obj, 0.5), three_class.logits, 1e-4)
    rel = np.max(np.abs(path.mean(axis=0) - fd)) / np.max(np.abs(fd))
    assert rel <= 1e-5


def test_gs_pathwise_with_temperature():
    c = CategoricalParams([0.2, -0.4, 1.0], 2.5)
    g, _ = standard_gumbels(RngState(7), (256, 3))
    obj = Objective([0.5, -1.0, 2.0], "quadratic")
    path, _ = gs_samples(GumbelSoftmaxParams(c, 0.3), obj, 256, None, noise=g)
    fd = finite_difference_grad(lambda a: relaxed_objective(a, g, obj, 0.3, 2.5), c.logits, 1e-4)
    assert np.max(np.abs(path.mean(axis=0) - fd)) / np.max(np.abs(fd)) <= 1e-5


def test_stgs_linear_equals_gs_and_quadratic_differs(three_class):
    p = GumbelSoftmaxParams(three_class, 0.5)
    g, _ = standard_gumbels(RngState(8), (200, 3))
    lin = Objective([1.0, 2.0, 3.0])
    assert np.array_equal(gs_samples(p, lin, 200, None, noise=g)[0], st_gs_samples(p, lin, 200, None, noise=g)[0])
    quad = Objective([1.0, 2.0, 3.0], "quadratic")
    diff = gs_samples(p, quad, 200, None, noise=g)[0] - st_gs_samples(p, quad, 200, None, noise=g)[0]
    assert np.max(np.abs(diff)) > 0


def test_gs_bias_shrinks_with_lambda(three_class):
    obj = Objective([1.0, 2.0, 3.0])
    small, _ = gs_grad(GumbelSoftmaxParams(three_class, 0.1), obj, 100_000, RngState(9))
    large, _ = gs_grad(GumbelSoftmaxParams(three_class, 2.0), obj, 100_000, RngState(9))
    assert small.max_abs_bias < large.max_abs_bias


def test_sample_count_validated(three_class):
    with pytest.raises(DomainError):
        reinforce_grad(three_class, Objective([1, 2, 3]), 0, RngState(0))


def test_objective_validation():
    with pytest.raises(ValueError):
        Objective([1.0, 2.0], "cubic")
    with pytest.raises(DomainError):
        Objective([1.0, np.inf])


def test_variance_report(three_class):
    cfg = VarianceConfig(three_class, Objective([1.0, 2.0, 3.0]), lambdas=(0.1, 1.0), n_samples=2000, n_reps=20, seed=3)
    rows = variance_report(cfg)
    assert rows == variance_report(cfg)
    assert len(rows) == 2 * 2 * 3
    for r in rows:
        if r["estimator"] == "reinforce":
            assert abs(r["bias"]) <= 3 * r["bias_se"]
    gs_var = {lam: sum(r["variance"] for r in rows if r["estimator"] == "gs" and r["lam"] == lam) for lam in (0.1, 1.0)}
    assert gs_var[0.1] > gs_var[1.0]


def test_report_serializes(three_class):
    rep, _ = reinforce_grad(three_class, Objective([1.0, 2.0, 3.0]), 100, RngState(0))
    d = rep.to_dict()
    assert d["n_samples"] == 100 and isinstance(d["grad_mean"], list)
    assert math.isfinite(d["max_abs_bias"])
