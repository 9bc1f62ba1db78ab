import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gumbelkit.distributions import CategoricalParams, DomainError
from gumbelkit.rng import RngState, fork_stream
from gumbelkit.sampling import PerturbedLogits, gumbel_max, perturb
from gumbelkit.wor import (
    MAX_ENUMERATED_SET,
    ProposalBudgetExceeded,
    gumbel_topk,
    plackett_luce_prob,
    rejection_wor,
    sequential_wor,
    unordered_set_prob,
)
from gumbelkit.stats import chi_square_gof


def test_topk_fixed_values():
    c = CategoricalParams(np.zeros(4))
    res = gumbel_topk(PerturbedLogits([1.2, -0.3, 2.5, 0.1], c), 2)
    assert tuple(res.indices) == (2, 0)
    assert tuple(res.perturbed_values) == (2.5, 1.2)


def test_topk_k1_is_gumbel_max(three_class):
    pl, _ = perturb(three_class, RngState(1), size=1000)
    assert np.array_equal(gumbel_topk(pl, 1).indices[:, 0], gumbel_max(pl).index)


def test_topk_uses_one_perturbation(three_class):
    rng = RngState(2)
    pl, after = perturb(three_class, rng)
    gumbel_topk(pl, 3)
    assert after == rng.advance(3)


def test_topk_errors():
    c = CategoricalParams([0.0, -np.inf, 1.0])
    pl, _ = perturb(c, RngState(0))
    with pytest.raises(DomainError):
        gumbel_topk(pl, 3)
    with pytest.raises(DomainError):
        gumbel_topk(pl, 0)


def test_plackett_luce_examples(three_class):
    assert plackett_luce_prob(three_class, (1,)) == pytest.approx(0.3)
    assert plackett_luce_prob(three_class, (0, 1, 2)) == pytest.approx(0.3, abs=1e-15)
    with pytest.raises(DomainError):
        plackett_luce_prob(three_class, (0, 0))


def _pl_oracle(theta, seq):
    # weights form, written independently of the probability form
    remaining = list(theta)
    total = 1.0
    for i in seq:
        total *= remaining[i] / sum(remaining)
        remaining[i] = 0.0
    return total


@given(
    theta=st.lists(st.floats(0.01, 10), min_size=2, max_size=6),
    data=st.data(),
)
def test_plackett_luce_matches_weight_form(theta, data):
    c = CategoricalParams(np.log(theta))
    k = data.draw(st.integers(1, len(theta)))
    seq = data.draw(st.permutations(range(len(theta))))[:k]
    assert plackett_luce_prob(c, seq) == pytest.approx(_pl_oracle(theta, seq), rel=1e-10)


@given(theta=st.lists(st.floats(0.01, 10), min_size=2, max_size=5), k=st.integers(1, 3))
def test_ordered_probabilities_sum_to_one(theta, k):
    k = min(k, len(theta))
    c = CategoricalParams(np.log(theta))
    total = math.fsum(plackett_luce_prob(c, s) for s in itertools.permutations(range(len(theta)), k))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_unordered_examples(three_class):
    assert unordered_set_prob(three_class, {1}) == pytest.approx(0.3)
    assert unordered_set_prob(three_class, {0, 1, 2}) == pytest.approx(1.0, abs=1e-15)
    # 0.5*(0.3/0.5) + 0.3*(0.5/0.7)
    assert unordered_set_prob(three_class, {0, 1}) == pytest.approx(0.5142857142857142, abs=1e-12)


def test_unordered_guard():
    c = CategoricalParams(np.zeros(MAX_ENUMERATED_SET + 1))
    with pytest.raises(DomainError, match="Monte Carlo"):
        unordered_set_prob(c, range(MAX_ENUMERATED_SET + 1))


def test_sequential_examples():
    c = CategoricalParams(np.log([0.1, 0.2, 0.3, 0.4]))
    seqs, _ = sequential_wor(c, 4, RngState(3), size=200)
    assert all(sorted(row) == [0, 1, 2, 3] for row in seqs.tolist())
    seq, _ = sequential_wor(CategoricalParams([0.0, -np.inf]), 1, RngState(0), size=50)
    assert np.all(seq == 0)
    with pytest.raises(DomainError):
        sequential_wor(CategoricalParams([0.0, -np.inf]), 2, RngState(0))


def test_sequential_batch_matches_single_rows():
    c = CategoricalParams([0.2, -1.0, 1.5, 0.0])
    batch, end = sequential_wor(c, 3, RngState(4), size=5)
    rng = RngState(4)
    for row in batch:
        one, rng = sequential_wor(c, 3, rng)
        assert np.array_equal(one, row)
    assert end == rng


def _sequence_counts(rows, n, k):
    seqs = list(itertools.permutations(range(n), k))
    index = {s: i for i, s in enumerate(seqs)}
    out = np.zeros(len(seqs))
    keys, cnt = np.unique(rows, axis=0, return_counts=True)
    for key, c in zip(map(tuple, keys.tolist()), cnt):
        out[index[key]] += c
    return seqs, out


def test_topk_and_sequential_small_instance():
    c = CategoricalParams(np.log([0.1, 0.2, 0.3, 0.25, 0.15]))
    k, n = 2, 200_000
    pl, _ = perturb(c, RngState(5), size=n)
    seqs, got = _sequence_counts(gumbel_topk(pl, k).indices, c.n, k)
    probs = [plackett_luce_prob(c, s) for s in seqs]
    assert chi_square_gof(got, probs).passed
    rows, _ = sequential_wor(c, k, RngState(6), size=n)
    _, got = _sequence_counts(rows, c.n, k)
    assert chi_square_gof(got, probs).passed


def test_rejection_examples(three_class):
    members, proposals, _ = rejection_wor(three_class, 1, RngState(7))
    assert proposals == 1 and len(members) == 1
    c = CategoricalParams(np.zeros(4))
    props = np.array([rejection_wor(c, 4, fork_stream(RngState(8), r + 1))[1] for r in range(4000)])
    expected = 4 * (1 + 1 / 2 + 1 / 3 + 1 / 4)
    assert expected == pytest.approx(8.333333333333332)
    assert abs(props.mean() - expected) <= 3 * props.std(ddof=1) / math.sqrt(props.size)


def test_rejection_budget():
    c = CategoricalParams(np.log([0.999, 0.001]))
    with pytest.raises(ProposalBudgetExceeded) as info:
        rejection_wor(c, 2, RngState(0), max_proposals=3)
    assert info.value.partial == (0,) and info.value.proposals == 3


def test_rejection_set_law(three_class):
    hits = {}
    rng = RngState(9)
    for _ in range(20_000):
        members, _, rng = rejection_wor(three_class, 2, rng)
        key = frozenset(members)
        hits[key] = hits.get(key, 0) + 1
    sets = [frozenset(s) for s in itertools.combinations(range(3), 2)]
    probs = [unordered_set_prob(three_class, s) for s in sets]
    assert chi_square_gof([hits.get(s, 0) for s in sets], probs).passed
