"""Top-down (inverted Gumbel-max) sampling.

Given the argmax and/or the max of a perturbation, generate perturbed logits
consistent with them: the remaining coordinates are right-truncated Gumbels.
Also here: the queue-based top-down construction, which fills in one
(argmax, max) pair per sub-domain, and a lazy best-first Gumbel-top-k over
the leaves of an explicit tree.
"""

from __future__ import annotations

import heapq
import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .distributions import (
    CategoricalParams,
    DomainError,
    GumbelParams,
    _trunc_icdf,
    gumbel_icdf,
)
from .rng import RngState, uniforms
from .sampling import PerturbedLogits, categorical_icdf
from .wor import TopKResult

__all__ = [
    "TopDownCondition",
    "TopDownNode",
    "complete_condition",
    "conditional_perturbed_logits",
    "transform_to_truncated",
    "TopDownConstruction",
    "top_down_construction",
    "assemble_perturbed_logits",
    "TreeNode",
    "tree_leaf_logits",
    "LazyTopKResult",
    "lazy_tree_topk",
]


@dataclass(frozen=True, eq=False)
class TopDownCondition:
    source: CategoricalParams
    index: Optional[int] = None
    max_value: Optional[float] = None

    def __post_init__(self):
        if self.index is None and self.max_value is None:
            raise DomainError("condition needs an index, a max value, or both")


@dataclass(frozen=True)
class TopDownNode:
    domain: tuple
    max_value: float
    index: int
    parent_max: float = math.inf

    def to_dict(self) -> dict:
        return {"domain": list(self.domain), "omega": self.index, "m": self.max_value}


def complete_condition(cond: TopDownCondition, rng: RngState, size=None):
    """Fill in whichever of (index, max) is missing.

    The index is drawn from Cat(pi) and the max from Gumbel(log Z); the two
    are independent so the given one is not used. Returns ``(omega, m, state)``.
    """
    c = cond.source
    omega, m = cond.index, cond.max_value
    if omega is None:
        u, rng = uniforms(rng, size)
        omega = categorical_icdf(c.probs, u)
    elif size is not None:
        omega = np.full(size, int(omega))
    if m is None:
        u, rng = uniforms(rng, size)
        m = gumbel_icdf(u, GumbelParams(c.log_z, 1.0))
    elif size is not None:
        m = np.full(size, float(m))
    return omega, m, rng


def _strictly_below(values, bound):
    return np.minimum(values, np.nextafter(bound, -np.inf))


def conditional_perturbed_logits(omega, m, c: CategoricalParams, rng: RngState):
    """Perturbed logits whose argmax is ``omega`` and whose max is ``m``.

    Coordinate ``omega`` is ``m``; each other coordinate is a draw from
    TruncGumbel(log theta_i, 1, m), i.e. ``-log(exp(-m) - log(u_i)/theta_i)``,
    pushed strictly below ``m`` if rounding would create a tie. One uniform
    is consumed per class (including ``omega``) to keep coordinates aligned.
    ``omega`` and ``m`` may be arrays of equal length for a batch.
    """
    omega_arr = np.asarray(omega, dtype=np.int64)
    m_arr = np.asarray(m, dtype=float)
    batched = omega_arr.ndim == 1
    if np.any(~np.isfinite(m_arr)):
        raise DomainError("conditioning max must be finite")
    if np.any((omega_arr < 0) | (omega_arr >= c.n)):
        raise DomainError("conditioning index out of range")
    log_theta = c.log_theta
    if np.any(log_theta[omega_arr] == -np.inf):
        raise DomainError("cannot condition on an index with zero mass")
    shape = (omega_arr.size, c.n) if batched else (c.n,)
    u, rng = uniforms(rng, shape)
    bound = m_arr[:, None] if batched else m_arr
    values = _strictly_below(_trunc_icdf(u, log_theta, 1.0, bound), bound)
    if batched:
        values[np.arange(omega_arr.size), omega_arr] = m_arr
    else:
        values[int(omega_arr)] = float(m_arr)
    return PerturbedLogits(values, c), rng


def transform_to_truncated(pl: PerturbedLogits, target_max) -> PerturbedLogits:
    """Map unconditional perturbed logits onto ones with maximum ``target_max``.

    Each coordinate goes through ``F_m^{-1}(F_q(x))`` where both are truncated
    Gumbel CDFs at ``log theta_i`` with bounds ``q = max`` and ``m``. The
    location cancels, leaving ``-log(exp(-m) - exp(-q) + exp(-x))``, which is
    evaluated in log space. The argmax keeps its position and becomes ``m``.
    """
    x = pl.values
    m = np.asarray(target_max, dtype=float)
    q = np.max(x, axis=-1, keepdims=True)
    if not np.all(np.isfinite(q)):
        raise DomainError("perturbed logits need a finite maximum")
    if x.ndim == 2 and m.ndim == 1:
        m = m[:, None]
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        # log(exp(-x) - exp(-q)) = -x + log(-expm1(x - q)), -inf at x == q
        log_gap = -x + np.log(-np.expm1(x - q))
        log_gap = np.where(x == -np.inf, np.inf, log_gap)
        y = -np.logaddexp(-m, log_gap)
    argmax = np.argmax(x, axis=-1)
    at_max = np.zeros(x.shape, dtype=bool)
    np.put_along_axis(at_max, np.expand_dims(argmax, -1), True, axis=-1)
    y = np.where(at_max, np.broadcast_to(m, x.shape), _strictly_below(y, m))
    return PerturbedLogits(y, pl.source)


class _UniformReader:
    """Sequential reader that fetches uniforms in chunks.

    ``state`` reports the position after the uniforms actually consumed, so
    chunking does not change results.
    """

    def __init__(self, rng: RngState, chunk: int = 64):
        self._start = rng
        self._chunk = chunk
        self._buf = np.empty(0)
        self._pos = 0
        self._used = 0

    def __call__(self) -> float:
        if self._pos == self._buf.size:
            self._buf, _ = uniforms(self._start.advance(self._used), self._chunk)
            self._pos = 0
        u = float(self._buf[self._pos])
        self._pos += 1
        self._used += 1
        return u

    @property
    def state(self) -> RngState:
        return self._start.advance(self._used)


def _logsumexp(values: Sequence[float]) -> float:
    top = max(values)
    if top == -math.inf:
        return -math.inf
    return top + math.log(math.fsum(math.exp(v - top) for v in values))


def _logaddexp(a: float, b: float) -> float:
    if a == -math.inf:
        return b
    if b == -math.inf:
        return a
    top = max(a, b)
    return top + math.log1p(math.exp(-abs(a - b)))


def _draw_index(domain, probs, u):
    """Inverse-transform draw over a short python list of probabilities."""
    total = math.fsum(probs)
    target = u * total
    acc = 0.0
    chosen = None
    for i, p in zip(domain, probs):
        if p > 0:
            chosen = i
            acc += p
            if target < acc:
                return i
    return chosen


class TopDownConstruction:
    """Iterator over the nodes of a top-down construction.

    The root gets ``m ~ Gumbel(log Z_D)`` and ``omega ~ Cat(pi)``. Nodes are
    processed first-in first-out; each splits its domain minus ``omega`` into
    two parts and every nonempty part becomes a child with
    ``m ~ TruncGumbel(log Z_part, 1, m_parent)`` and ``omega`` drawn from the
    part. The root is yielded too, so an exhausted run has N nodes.

    ``partition`` is ``"median"`` (split the sorted remainder at its middle)
    or ``"random"`` (each element joins the left part on a fair coin flip).
    ``state`` holds the generator position after the nodes produced so far.

    ``root_index`` and ``root_max`` fix the root's argmax and/or max. At the
    root the two are independent, so fixing one leaves the other's law alone.
    The root still consumes its two uniforms either way.
    """

    def __init__(
        self,
        c: CategoricalParams,
        rng: RngState,
        partition: str = "median",
        root_index: Optional[int] = None,
        root_max: Optional[float] = None,
    ):
        if partition not in ("median", "random"):
            raise ValueError(f"unknown partition {partition!r}")
        if root_index is not None:
            root_index = int(root_index)
            if not 0 <= root_index < c.n:
                raise DomainError(f"root index {root_index} out of range for N={c.n}")
            if c.log_theta[root_index] == -np.inf:
                raise DomainError("cannot condition on an index with zero mass")
        if root_max is not None and not math.isfinite(root_max):
            raise DomainError("root max must be finite")
        self._root_index = root_index
        self._root_max = None if root_max is None else float(root_max)
        self.source = c
        self.partition = partition
        self._log_theta = [float(v) for v in c.log_theta]
        self._read = _UniformReader(rng, chunk=2 * c.n + 2)
        self._queue: deque = deque()
        self._pending: deque = deque()
        self._started = False

    @property
    def state(self) -> RngState:
        return self._read.state

    def __iter__(self) -> Iterator[TopDownNode]:
        return self

    def _sample_node(self, domain: tuple, parent_max: float) -> TopDownNode:
        logs = [self._log_theta[i] for i in domain]
        log_z = _logsumexp(logs)
        u_m = self._read()
        u_w = self._read()
        if log_z == -math.inf:
            return TopDownNode(domain, -math.inf, domain[0], parent_max)
        # TruncGumbel(log Z, 1, parent_max); parent_max = inf gives a plain Gumbel
        m = log_z - _logaddexp(log_z - parent_max, math.log(-math.log(u_m)))
        m = min(m, math.nextafter(parent_max, -math.inf))
        omega = _draw_index(domain, [math.exp(v - log_z) for v in logs], u_w)
        return TopDownNode(domain, m, omega, parent_max)

    def _split(self, rest: list) -> tuple[tuple, tuple]:
        if self.partition == "median":
            half = len(rest) // 2
            return tuple(rest[:half]), tuple(rest[half:])
        left, right = [], []
        for i in rest:
            (left if self._read() < 0.5 else right).append(i)
        return tuple(left), tuple(right)

    def __next__(self) -> TopDownNode:
        if not self._started:
            self._started = True
            root = self._sample_node(tuple(range(self.source.n)), math.inf)
            if self._root_index is not None or self._root_max is not None:
                root = TopDownNode(
                    root.domain,
                    root.max_value if self._root_max is None else self._root_max,
                    root.index if self._root_index is None else self._root_index,
                )
            self._queue.append(root)
            return root
        while not self._pending:
            if not self._queue:
                raise StopIteration
            parent = self._queue.popleft()
            rest = [i for i in parent.domain if i != parent.index]
            for part in self._split(rest):
                if part:
                    self._pending.append((part, parent.max_value))
        part, parent_max = self._pending.popleft()
        node = self._sample_node(part, parent_max)
        self._queue.append(node)
        return node


def top_down_construction(
    c: CategoricalParams,
    rng: RngState,
    partition: str = "median",
    root_index: Optional[int] = None,
    root_max: Optional[float] = None,
) -> TopDownConstruction:
    return TopDownConstruction(c, rng, partition, root_index, root_max)


def assemble_perturbed_logits(nodes, c: CategoricalParams) -> PerturbedLogits:
    """Place each node's max at its argmax; the result is a full perturbation."""
    values = np.full(c.n, np.nan)
    for node in nodes:
        values[node.index] = node.max_value
    if np.any(np.isnan(values)):
        raise DomainError("nodes do not cover every class")
    return PerturbedLogits(values, c)


@dataclass
class TreeNode:
    """Rooted tree with a logit on every edge; a node without children is a leaf.

    A leaf's unnormalized log-probability is the sum of logits along its path.
    Leaves are numbered in depth-first order.
    """

    children: list = field(default_factory=list)

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @classmethod
    def full(cls, branching: int, depth: int, edge_logits) -> "TreeNode":
        """Complete tree; ``edge_logits`` is a callable ``(path) -> logit``."""

        def build(path):
            if len(path) == depth:
                return cls()
            return cls(
                [(float(edge_logits(path + (b,))), build(path + (b,))) for b in range(branching)]
            )

        return build(())


def tree_leaf_logits(tree: TreeNode) -> np.ndarray:
    """Path-sum log-probabilities of all leaves in depth-first order."""
    out = []

    def walk(node, acc):
        if node.is_leaf:
            out.append(acc)
            return
        for logit, child in node.children:
            walk(child, acc + logit)

    walk(tree, 0.0)
    return np.array(out)


@dataclass(frozen=True, eq=False)
class LazyTopKResult(TopKResult):
    expanded: int = 0


def _annotate(tree: TreeNode):
    """Subtree log-partitions keyed by node id, and depth-first leaf numbers."""
    log_z, leaf_id = {}, {}
    counter = itertools.count()

    def walk(node):
        if node.is_leaf:
            leaf_id[id(node)] = next(counter)
            log_z[id(node)] = 0.0
            return
        terms = []
        for logit, child in node.children:
            walk(child)
            terms.append(logit + log_z[id(child)])
        log_z[id(node)] = _logsumexp(terms)

    walk(tree)
    return log_z, leaf_id


def lazy_tree_topk(tree: TreeNode, k: int, rng: RngState):
    """Gumbel-top-k over the leaves of ``tree`` without perturbing every leaf.

    The root's perturbed value is Gumbel(log Z_root). Popping the largest
    entry of a priority queue either emits a leaf or expands an inner node:
    its children get Gumbel(path + log Z_child) draws shifted onto truncated
    ones whose maximum is the parent's value. Leaves come out in decreasing
    perturbed value, so the first k form a Gumbel-top-k sample of the leaf
    distribution. Returns ``(LazyTopKResult, state)``.
    """
    log_z, leaf_id = _annotate(tree)
    n_leaves = len(leaf_id)
    if k < 1 or k > n_leaves:
        raise DomainError(f"k={k} but the tree has {n_leaves} leaves")
    read = _UniformReader(rng)
    tiebreak = itertools.count()
    root_value = log_z[id(tree)] - math.log(-math.log(read()))
    heap = [(-root_value, next(tiebreak), tree, 0.0)]
    indices, values = [], []
    expanded = 0
    while len(indices) < k:
        neg_value, _, node, path_logit = heapq.heappop(heap)
        value = -neg_value
        if node.is_leaf:
            indices.append(leaf_id[id(node)])
            values.append(value)
            continue
        expanded += 1
        locs = [path_logit + logit + log_z[id(child)] for logit, child in node.children]
        raw = np.array([loc - math.log(-math.log(read())) for loc in locs])
        child_values = transform_to_truncated(
            PerturbedLogits(raw, CategoricalParams(np.zeros(raw.size))), value
        ).values
        for (logit, child), v in zip(node.children, child_values):
            if v > -math.inf:
                heapq.heappush(heap, (-float(v), next(tiebreak), child, path_logit + logit))
    result = LazyTopKResult(np.array(indices), np.array(values), expanded=expanded)
    return result, read.state
