"""Sampling without replacement.

Gumbel-top-k reads k ordered classes off a single perturbation. Sequential
renormalized sampling and rejection of duplicates give the same laws by other
routes, and :func:`plackett_luce_prob` / :func:`unordered_set_prob` evaluate
those laws exactly for small instances.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .distributions import CategoricalParams, DomainError
from .rng import RngState, uniforms
from .sampling import PerturbedLogits, categorical_icdf

__all__ = [
    "TopKResult",
    "SequenceProb",
    "ProposalBudgetExceeded",
    "MAX_ENUMERATED_SET",
    "gumbel_topk",
    "sequential_wor",
    "plackett_luce_prob",
    "unordered_set_prob",
    "rejection_wor",
]

MAX_ENUMERATED_SET = 10


@dataclass(frozen=True, eq=False)
class TopKResult:
    """Ordered distinct indices with their perturbed values, largest first.

    For a batch both arrays have shape ``(n, k)``.
    """

    indices: np.ndarray
    perturbed_values: np.ndarray

    @property
    def k(self) -> int:
        return self.indices.shape[-1]


@dataclass(frozen=True)
class SequenceProb:
    sequence: tuple
    probability: float


class ProposalBudgetExceeded(RuntimeError):
    """Rejection sampling ran out of proposals; ``partial`` holds what was found."""

    def __init__(self, partial, proposals):
        super().__init__(
            f"only {len(partial)} unique classes after {proposals} proposals"
        )
        self.partial = partial
        self.proposals = proposals


def gumbel_topk(pl: PerturbedLogits, k: int) -> TopKResult:
    """Indices of the k largest perturbed logits, in decreasing order.

    Equal values keep the lower index first (stable sort on the negation).
    """
    values = pl.values
    n_finite = np.min(np.sum(values > -np.inf, axis=-1))
    if k < 1 or k > n_finite:
        raise DomainError(f"k={k} exceeds the {n_finite} classes with positive mass")
    order = np.argsort(-values, axis=-1, kind="stable")[..., :k]
    return TopKResult(order, np.take_along_axis(values, order, axis=-1))


def sequential_wor(c: CategoricalParams, k: int, rng: RngState, size=None):
    """Draw, remove, renormalize, repeat; one uniform per step.

    Returns ``(indices, state)`` with ``indices`` of shape ``(k,)`` or ``(size, k)``.
    """
    probs = c.probs
    support = int(np.sum(probs > 0))
    if k < 1 or k > support:
        raise DomainError(f"k={k} exceeds the support size {support}")
    n_rows = 1 if size is None else int(size)
    u, rng = uniforms(rng, (n_rows, k))
    remaining = np.broadcast_to(probs, (n_rows, c.n)).copy()
    out = np.empty((n_rows, k), dtype=np.int64)
    rows = np.arange(n_rows)
    for step in range(k):
        cdf = np.cumsum(remaining, axis=1)
        total = cdf[:, -1]
        target = u[:, step] * total
        idx = np.sum(cdf <= target[:, None], axis=1)
        # guard against rounding past the last bin with mass
        last = c.n - 1 - np.argmax(remaining[:, ::-1] > 0, axis=1)
        idx = np.minimum(idx, last)
        out[:, step] = idx
        remaining[rows, idx] = 0.0
    return (out[0] if size is None else out), rng


def _check_sequence(c: CategoricalParams, sequence) -> tuple:
    seq = tuple(int(i) for i in sequence)
    if len(set(seq)) != len(seq):
        raise DomainError(f"sequence {seq} repeats an index")
    if any(i < 0 or i >= c.n for i in seq):
        raise DomainError(f"sequence {seq} has an index outside 0..{c.n - 1}")
    return seq


def plackett_luce_prob(c: CategoricalParams, sequence) -> float:
    """Probability of drawing ``sequence`` in order without replacement."""
    seq = _check_sequence(c, sequence)
    probs = c.probs
    prob = 1.0
    used = 0.0
    for i in seq:
        remaining = 1.0 - used
        if probs[i] == 0:
            return 0.0
        prob *= probs[i] / remaining
        used += probs[i]
    return prob


def unordered_set_prob(c: CategoricalParams, members) -> float:
    """Probability of the set, summed over all of its orderings."""
    seq = _check_sequence(c, sorted(set(int(i) for i in members)))
    if len(seq) > MAX_ENUMERATED_SET:
        raise DomainError(
            f"|S| = {len(seq)} needs {math.factorial(len(seq))} terms; "
            f"estimate by Monte Carlo above {MAX_ENUMERATED_SET}"
        )
    return math.fsum(
        plackett_luce_prob(c, perm) for perm in itertools.permutations(seq)
    )


def rejection_wor(
    c: CategoricalParams, k: int, rng: RngState, max_proposals: int = 10_000
):
    """Draw with replacement, dropping repeats, until ``k`` classes are unique.

    Returns ``(members, proposal_count, state)``; ``members`` keeps first-seen order.
    """
    probs = c.probs
    support = int(np.sum(probs > 0))
    if k < 1 or k > support:
        raise DomainError(f"k={k} exceeds the support size {support}")
    seen: list[int] = []
    proposals = 0
    while len(seen) < k:
        if proposals >= max_proposals:
            raise ProposalBudgetExceeded(tuple(seen), proposals)
        u, rng = uniforms(rng)
        proposals += 1
        idx = int(categorical_icdf(probs, u))
        if idx not in seen:
            seen.append(idx)
    return tuple(seen), proposals, rng
