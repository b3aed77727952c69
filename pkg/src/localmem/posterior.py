"""Closed-form Bayesian engine for partition-based information borrowing.

Every quantity here has an explicit Beta-Binomial form, so no sampling is
involved. The flow is: score every partition of the baskets by its posterior
probability, pick the top partition, then let each basket borrow from the
other baskets in its block, scaled by the top partition's posterior weight.

Partition weights are computed from the marginal likelihood of the observed
per-basket counts. The per-basket binomial coefficients in that marginal are
identical under every partition, so they cancel after normalization and are
omitted; only the Beta-function block factors are evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, ShapeError
from .numerics import log_beta, log_choose, log_sum_exp, reg_inc_beta
from .partitions import Partition, PartitionSet, block_aggregates  # noqa: F401 (Partition is public API)

# Two partition weights closer than this are treated as tied when picking the
# top partition.
TOP_TIE_TOL = 1e-12

_DEFAULT_IDS = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"


@dataclass(frozen=True)
class BetaParams:
    """Shape parameters of a Beta distribution."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0.0 and self.beta > 0.0):
            raise DomainError(f"Beta parameters must be positive, got {self}")

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)


DEFAULT_PRIOR = BetaParams(1.0, 1.0)
JEFFREYS_PRIOR = BetaParams(0.5, 0.5)


@dataclass(frozen=True)
class BasketData:
    """Observed counts at one analysis point: x responses out of n per basket."""

    x: tuple[int, ...]
    n: tuple[int, ...]
    basket_ids: tuple[str, ...]

    @classmethod
    def create(
        cls,
        x: Sequence[int],
        n: Sequence[int],
        basket_ids: Sequence[str] | None = None,
    ) -> "BasketData":
        xs = tuple(int(v) for v in x)
        ns = tuple(int(v) for v in n)
        if len(xs) != len(ns) or not xs:
            raise ShapeError(f"x and n must be equal-length and non-empty, got {len(xs)} and {len(ns)}")
        for b, (xv, nv) in enumerate(zip(xs, ns)):
            if nv < 0 or not (0 <= xv <= nv):
                raise DomainError(f"basket {b}: need 0 <= x <= n, got x={xv}, n={nv}")
        if basket_ids is None:
            ids = tuple(
                _DEFAULT_IDS[i] if i < len(_DEFAULT_IDS) else f"B{i + 1}" for i in range(len(xs))
            )
        else:
            ids = tuple(str(s) for s in basket_ids)
            if len(ids) != len(xs):
                raise ShapeError("basket_ids length must match x and n")
        return cls(x=xs, n=ns, basket_ids=ids)

    @property
    def num_baskets(self) -> int:
        return len(self.x)

    @property
    def y(self) -> tuple[int, ...]:
        """Non-responses per basket."""
        return tuple(n - x for x, n in zip(self.x, self.n))


@dataclass(frozen=True)
class PartitionPosterior:
    """Normalized weights over a PartitionSet plus the selected top partition."""

    weights: np.ndarray = field(repr=False)
    top_index: int
    top_prob: float


@dataclass(frozen=True)
class SimilarityMatrix:
    """Posterior co-membership probabilities between basket pairs."""

    psi: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.psi, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ShapeError(f"similarity matrix must be square, got shape {m.shape}")


def log_block_marginal(responses: int, size: int, prior: BetaParams = DEFAULT_PRIOR) -> float:
    """Log marginal probability of observing ``responses`` successes in a block
    of ``size`` patients under a common Beta-distributed response rate.

    This is the pmf of the block total:
    ln C(N, S) + ln B(a0 + S, b0 + N - S) - ln B(a0, b0).
    """
    if responses < 0 or size < 0 or responses > size:
        raise DomainError(f"need 0 <= responses <= size, got {responses}, {size}")
    if size == 0:
        return 0.0
    return (
        log_choose(size, responses)
        + log_beta(prior.alpha + responses, prior.beta + size - responses)
        - log_beta(prior.alpha, prior.beta)
    )


def _log_block_factor(s: int, n: int, prior: BetaParams) -> float:
    # Beta factor of one block's counts; basket-level binomial coefficients
    # are constant across partitions and dropped.
    if n == 0:
        return 0.0
    return log_beta(prior.alpha + s, prior.beta + n - s) - log_beta(prior.alpha, prior.beta)


def _tiebreak_ranks(pset: PartitionSet) -> np.ndarray:
    # Preference order among tied weights: most blocks first (least borrowing),
    # then lexicographically smallest membership, i.e. enumeration order.
    blocks = np.array([p.num_blocks for p in pset.partitions])
    order = np.lexsort((np.arange(len(pset)), -blocks))
    ranks = np.empty(len(pset), dtype=int)
    ranks[order] = np.arange(len(pset))
    return ranks


def _select_top(weights: np.ndarray, ranks: np.ndarray) -> int:
    candidates = weights >= weights.max() - TOP_TIE_TOL
    masked = np.where(candidates, ranks, len(weights) + 1)
    return int(masked.argmin())


def partition_posterior(
    data: BasketData,
    pset: PartitionSet,
    prior: BetaParams = DEFAULT_PRIOR,
) -> PartitionPosterior:
    """Posterior probability of every partition given the observed counts.

    Weight of a partition is proportional to its prior times the product of
    its block marginal factors, normalized through log-sum-exp. Among weights
    tied within TOP_TIE_TOL, the top partition is the one with the most
    blocks, then the lexicographically smallest membership.
    """
    if data.num_baskets != pset.num_baskets:
        raise ShapeError(
            f"data covers {data.num_baskets} baskets, partition set expects {pset.num_baskets}"
        )
    with np.errstate(divide="ignore"):
        log_w = np.log(pset.prior)
    for j, part in enumerate(pset.partitions):
        if not np.isfinite(log_w[j]):
            continue
        for s, n in block_aggregates(part, data):
            log_w[j] += _log_block_factor(s, n, prior)
    weights = np.exp(log_w - log_sum_exp(log_w))
    weights /= weights.sum()
    top = _select_top(weights, _tiebreak_ranks(pset))
    weights.setflags(write=False)
    return PartitionPosterior(weights=weights, top_index=top, top_prob=float(weights[top]))


def similarity_matrix(pp: PartitionPosterior, pset: PartitionSet) -> SimilarityMatrix:
    """Pairwise co-membership probability: the summed weight of partitions
    placing the two baskets in one block. Diagonal is 1 by convention."""
    if len(pp.weights) != len(pset):
        raise ShapeError("posterior weights and partition set sizes differ")
    size = pset.num_baskets
    psi = np.zeros((size, size))
    for w, part in zip(pp.weights, pset.partitions):
        m = np.asarray(part.membership)
        psi += w * (m[:, None] == m[None, :])
    np.fill_diagonal(psi, 1.0)
    psi.setflags(write=False)
    return SimilarityMatrix(psi=psi)


def _borrow_sums(
    basket: int, data: BasketData, top: Partition
) -> tuple[int, int, int]:
    label = top.membership[basket]
    bx = by = bn = 0
    for t in range(data.num_baskets):
        if t != basket and top.membership[t] == label:
            bx += data.x[t]
            by += data.n[t] - data.x[t]
            bn += data.n[t]
    return bx, by, bn


def _check_basket(basket: int, data: BasketData) -> None:
    if not (0 <= basket < data.num_baskets):
        raise DomainError(f"basket index {basket} out of range for {data.num_baskets} baskets")


def local_posterior(
    basket: int,
    data: BasketData,
    pp: PartitionPosterior,
    pset: PartitionSet,
    prior: BetaParams = DEFAULT_PRIOR,
) -> BetaParams:
    """Borrowing posterior for one basket.

    Counts from baskets sharing the top partition's block are added after
    scaling by the top partition's posterior weight; baskets outside the
    block contribute nothing.
    """
    _check_basket(basket, data)
    top = pset.partitions[pp.top_index]
    bx, by, _ = _borrow_sums(basket, data, top)
    x = data.x[basket]
    y = data.n[basket] - x
    return BetaParams(
        alpha=prior.alpha + x + pp.top_prob * bx,
        beta=prior.beta + y + pp.top_prob * by,
    )


def global_posterior(
    basket: int,
    data: BasketData,
    psi: SimilarityMatrix,
    prior: BetaParams = DEFAULT_PRIOR,
) -> BetaParams:
    """Similarity-weighted pooling across every basket pair (the comparator
    that borrows from all baskets in proportion to pairwise similarity)."""
    _check_basket(basket, data)
    m = np.asarray(psi.psi, dtype=float)
    if m.shape != (data.num_baskets, data.num_baskets):
        raise ShapeError("similarity matrix does not match the number of baskets")
    xs = np.asarray(data.x, dtype=float)
    ys = np.asarray(data.y, dtype=float)
    return BetaParams(
        alpha=prior.alpha + float(m[basket] @ xs),
        beta=prior.beta + float(m[basket] @ ys),
    )


def effective_sample_size(
    basket: int,
    data: BasketData,
    pp: PartitionPosterior,
    pset: PartitionSet,
    prior: BetaParams = DEFAULT_PRIOR,
) -> float:
    """Prior mass plus own and borrowed patients; equals alpha + beta of the
    borrowing posterior."""
    _check_basket(basket, data)
    top = pset.partitions[pp.top_index]
    _, _, bn = _borrow_sums(basket, data, top)
    return prior.alpha + prior.beta + data.n[basket] + pp.top_prob * bn


def prob_exceeds(post: BetaParams, theta0: float) -> float:
    """Posterior probability that the response rate exceeds theta0."""
    if not (0.0 < theta0 < 1.0):
        raise DomainError(f"theta0 must lie in (0, 1), got {theta0}")
    return 1.0 - reg_inc_beta(theta0, post.alpha, post.beta)


@dataclass(frozen=True)
class AnalysisResult:
    """Everything a one-shot analysis of observed data produces."""

    data: BasketData
    pset: PartitionSet
    partition_posterior: PartitionPosterior
    similarity: SimilarityMatrix
    posteriors: tuple[BetaParams, ...]
    ess: tuple[float, ...]
    prob_exceeds: tuple[float, ...]

    @property
    def top_partition(self) -> Partition:
        return self.pset.partitions[self.partition_posterior.top_index]


def analyze(
    data: BasketData,
    delta: float = 0.0,
    prior: BetaParams = DEFAULT_PRIOR,
    theta0: float | Sequence[float] = 0.5,
    pset: PartitionSet | None = None,
) -> AnalysisResult:
    """Full posterior analysis: partition table, similarity, per-basket
    borrowing posteriors with their effective sample sizes and exceedance
    probabilities."""
    if pset is None:
        pset = PartitionSet.build(data.num_baskets, delta)
    t0 = (
        tuple(float(theta0) for _ in range(data.num_baskets))
        if np.isscalar(theta0)
        else tuple(float(v) for v in theta0)
    )
    if len(t0) != data.num_baskets:
        raise ShapeError(f"theta0 must have {data.num_baskets} entries, got {len(t0)}")
    pp = partition_posterior(data, pset, prior)
    posteriors = tuple(local_posterior(b, data, pp, pset, prior) for b in range(data.num_baskets))
    return AnalysisResult(
        data=data,
        pset=pset,
        partition_posterior=pp,
        similarity=similarity_matrix(pp, pset),
        posteriors=posteriors,
        ess=tuple(
            effective_sample_size(b, data, pp, pset, prior) for b in range(data.num_baskets)
        ),
        prob_exceeds=tuple(prob_exceeds(post, t) for post, t in zip(posteriors, t0)),
    )


class BatchPosterior:
    """Vectorized partition-posterior evaluation for many trials at once.

    Bound to a fixed sample-size vector, partition set and prior; the data
    matrix varies across rows. Used by the simulation and calibration loops,
    and checked against the scalar operations in the test suite.
    """

    def __init__(self, n: Sequence[int], pset: PartitionSet, prior: BetaParams = DEFAULT_PRIOR):
        n = tuple(int(v) for v in n)
        if len(n) != pset.num_baskets:
            raise ShapeError("sample-size vector does not match the partition set")
        if any(v < 0 for v in n):
            raise DomainError("sample sizes must be non-negative")
        self.n = np.asarray(n, dtype=int)
        self.pset = pset
        self.prior = prior
        num_baskets = pset.num_baskets

        # Distinct blocks across all partitions, as basket-index tuples.
        subset_index: dict[tuple[int, ...], int] = {}
        partition_blocks: list[tuple[int, ...]] = []
        for part in pset.partitions:
            ids = []
            for block in part.blocks():
                if block not in subset_index:
                    subset_index[block] = len(subset_index)
                ids.append(subset_index[block])
            partition_blocks.append(tuple(ids))
        subsets = list(subset_index)
        num_subsets = len(subsets)

        self._member = np.zeros((num_baskets, num_subsets))
        for j, block in enumerate(subsets):
            for b in block:
                self._member[b, j] = 1.0
        self._subset_n = (self.n @ self._member).astype(int)

        self._block_matrix = np.zeros((num_subsets, len(pset)))
        for j, ids in enumerate(partition_blocks):
            for s in ids:
                self._block_matrix[s, j] = 1.0

        self._block_of = np.zeros((len(pset), num_baskets), dtype=int)
        for j, part in enumerate(pset.partitions):
            for b, label in enumerate(part.membership):
                self._block_of[j, b] = partition_blocks[j][label - 1]

        # Log Beta factors tabulated over (block size, block responses).
        total = int(self.n.sum())
        table = np.zeros((total + 1, total + 1))
        log_b0 = log_beta(prior.alpha, prior.beta)
        for size in sorted(set(int(v) for v in self._subset_n)):
            if size == 0:
                continue
            s_vals = np.arange(size + 1, dtype=float)
            table[size, : size + 1] = (
                log_beta(prior.alpha + s_vals, prior.beta + size - s_vals) - log_b0
            )
        self._factor_table = table

        with np.errstate(divide="ignore"):
            self._log_prior = np.log(pset.prior)
        self._ranks = _tiebreak_ranks(pset)

    def _as_matrix(self, x) -> np.ndarray:
        mat = np.asarray(x, dtype=int)
        if mat.ndim == 1:
            mat = mat[None, :]
        if mat.shape[1] != self.pset.num_baskets:
            raise ShapeError(
                f"data matrix has {mat.shape[1]} baskets, expected {self.pset.num_baskets}"
            )
        if np.any(mat < 0) or np.any(mat > self.n[None, :]):
            raise DomainError("response counts must satisfy 0 <= x <= n per basket")
        return mat

    def posterior(self, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Weights (T, J), top partition index (T,), top weight (T,)."""
        mat = self._as_matrix(x)
        subset_x = mat @ self._member
        factors = self._factor_table[self._subset_n[None, :], subset_x.astype(int)]
        log_w = factors @ self._block_matrix + self._log_prior[None, :]
        log_w -= log_w.max(axis=1, keepdims=True)
        weights = np.exp(log_w)
        weights /= weights.sum(axis=1, keepdims=True)
        candidates = weights >= weights.max(axis=1, keepdims=True) - TOP_TIE_TOL
        masked = np.where(candidates, self._ranks[None, :], len(self.pset) + 1)
        top = masked.argmin(axis=1)
        top_prob = weights[np.arange(len(mat)), top]
        return weights, top, top_prob

    def borrow_params(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Borrowing-posterior (alpha, beta) arrays of shape (T, B)."""
        mat = self._as_matrix(x)
        subset_x = mat @ self._member
        _, top, top_prob = self.posterior(mat)
        rows = np.arange(len(mat))[:, None]
        block_ids = self._block_of[top]
        block_x = subset_x[rows, block_ids]
        block_n = self._subset_n[block_ids].astype(float)
        xs = mat.astype(float)
        ns = self.n[None, :].astype(float)
        scale = top_prob[:, None]
        alpha = self.prior.alpha + xs + scale * (block_x - xs)
        beta = self.prior.beta + (ns - xs) + scale * ((block_n - ns) - (block_x - xs))
        return alpha, beta

    def exceed_probs(self, x, theta0) -> np.ndarray:
        """Per-basket posterior exceedance probabilities, shape (T, B)."""
        alpha, beta = self.borrow_params(x)
        t0 = np.broadcast_to(np.asarray(theta0, dtype=float), alpha.shape)
        return 1.0 - reg_inc_beta(t0, alpha, beta)
