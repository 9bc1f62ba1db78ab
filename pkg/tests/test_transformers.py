import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import FunctionTransformer

from gumbelkit.distributions import CategoricalParams, DomainError
from gumbelkit.rng import RngState
from gumbelkit.sampling import gumbel_max, perturb
from gumbelkit.transformers import (
    GumbelMaxSampler,
    GumbelSoftmaxTransformer,
    GumbelTopKTransformer,
    check_logits,
)

X = np.array([[0.0, 1.0, -1.0], [2.0, 0.0, 0.0], [0.5, 0.5, -np.inf]])


def test_get_params_and_clone():
    est = GumbelSoftmaxTransformer(lam=0.3, seed=4)
    assert est.get_params() == {"lam": 0.3, "temperature": 1.0, "hard": False, "seed": 4}
    twin = clone(est).set_params(lam=0.7)
    assert twin.lam == 0.7 and est.lam == 0.3


def test_sampler_matches_functional_core():
    out = GumbelMaxSampler(output="index", seed=9).fit(X).transform(X)
    # row r uses uniforms r*N .. r*N+N-1 of the seed's stream
    rng = RngState(9)
    for r, row in enumerate(X):
        pl, rng = perturb(CategoricalParams(row), rng)
        assert out[r] == gumbel_max(pl).index
    onehot = GumbelMaxSampler(seed=9).fit_transform(X)
    assert np.array_equal(np.argmax(onehot, axis=1), out) and np.all(onehot.sum(axis=1) == 1)


def test_deterministic_and_seed_sensitive():
    big = np.tile(X[:2], (200, 1))
    a = GumbelSoftmaxTransformer(seed=1).fit_transform(big)
    b = GumbelSoftmaxTransformer(seed=1).fit_transform(big)
    c = GumbelSoftmaxTransformer(seed=2).fit_transform(big)
    assert np.array_equal(a, b) and not np.array_equal(a, c)
    assert np.allclose(a.sum(axis=1), 1.0)


def test_hard_relaxation_is_one_hot():
    out = GumbelSoftmaxTransformer(lam=0.5, hard=True).fit_transform(X)
    assert set(np.unique(out)) == {0.0, 1.0}
    assert out[2, 2] == 0.0


def test_topk_transformer():
    out = GumbelTopKTransformer(k=2, seed=3).fit_transform(X)
    assert out.shape == (3, 2)
    assert all(len(set(row)) == 2 for row in out.tolist())
    assert 2 not in out[2]
    with pytest.raises(ValueError):
        GumbelTopKTransformer(k=4).fit(X).transform(X)


def test_validation():
    with pytest.raises(NotFittedError):
        GumbelMaxSampler().transform(X)
    with pytest.raises(ValueError):
        GumbelMaxSampler().fit(X).transform(X[:, :2])
    with pytest.raises(DomainError):
        check_logits([[0.0, np.nan]])
    with pytest.raises(DomainError):
        check_logits([[-np.inf, -np.inf]])
    with pytest.raises(DomainError):
        GumbelMaxSampler(temperature=0.0).fit(X).transform(X)
    with pytest.raises(ValueError):
        GumbelMaxSampler(output="probs").fit(X).transform(X)


def test_in_pipeline():
    pipe = make_pipeline(FunctionTransformer(lambda z: 2.0 * z), GumbelMaxSampler(output="index", seed=0))
    out = pipe.fit_transform(X)
    assert out.shape == (3,) and out[2] != 2
