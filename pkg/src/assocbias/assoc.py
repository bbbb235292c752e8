"""The association-test engine.

Given two equal-size target sets X, Y and two attribute sets A, B of
embeddings, computes the differential-association statistic, its effect
size, and a one-sided permutation p-value over equal-size re-partitions
of X ∪ Y — exactly when the partition space is small enough, by
counter-based Monte Carlo sampling otherwise.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import rng
from .core import AssociationResult, TestSpecification, TextItem, Vector, cosine
from .errors import (
    DegenerateDistribution,
    EmptyInput,
    MissingEmbedding,
    TooLargeForExact,
    UnequalTargetSizes,
)

DEFAULT_SEED = 12345

#: Samples per work unit when Monte Carlo sampling is split across workers.
#: Results are independent of this value; it only bounds per-chunk memory.
SAMPLE_CHUNK = 1 << 15


@dataclass(frozen=True)
class PermutationConfig:
    """Knobs for the permutation test and significance call.

    ``exact_limit`` is the largest combined target size 2n that is
    enumerated exhaustively; larger instances fall back to ``n_samples``
    random partitions. ``std_mode`` selects the denominator convention
    of the effect size (population std by default, sample std as an
    alternative).
    """

    exact_limit: int = 24
    n_samples: int = 100_000
    seed: int = DEFAULT_SEED
    alpha: float = 0.01
    std_mode: str = "population"

    def __post_init__(self) -> None:
        if self.exact_limit < 2 or self.exact_limit % 2 != 0:
            raise ValueError("exact_limit must be an even integer >= 2")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if not (0.0 < self.alpha < 1.0):
            raise ValueError("alpha must lie in (0, 1)")
        if self.std_mode not in ("population", "sample"):
            raise ValueError("std_mode must be 'population' or 'sample'")
        if not (0 <= self.seed <= rng.MASK64):
            raise ValueError("seed must fit in an unsigned 64-bit integer")


def association_diff(w: Vector, A: Sequence[Vector], B: Sequence[Vector]) -> float:
    """Mean cosine of w against A minus mean cosine against B; in [-2, 2]."""
    if len(A) == 0 or len(B) == 0:
        raise EmptyInput("attribute sets must be non-empty")
    return float(np.mean([cosine(w, a) for a in A]) - np.mean([cosine(w, b) for b in B]))


def _target_scores(X, Y, A, B) -> np.ndarray:
    """Per-target association scores for X then Y, as one float64 array."""
    if len(X) != len(Y):
        raise UnequalTargetSizes(f"|X| = {len(X)} but |Y| = {len(Y)}")
    if len(X) == 0:
        raise EmptyInput("target sets must be non-empty")
    return np.array([association_diff(w, A, B) for w in list(X) + list(Y)], dtype=np.float64)


def test_statistic(X, Y, A, B) -> float:
    """Sum of per-target scores over X minus the sum over Y."""
    scores = _target_scores(X, Y, A, B)
    n = len(X)
    return float(np.sum(scores[:n]) - np.sum(scores[n:]))


def effect_size(X, Y, A, B, std_mode: str = "population") -> float:
    """Standardized mean difference of per-target scores.

    The denominator is the std of scores over X ∪ Y; population (ddof 0)
    by default, sample (ddof 1) when requested. All-equal scores (e.g.
    A = B) make the measure undefined and raise DegenerateDistribution.
    """
    if std_mode not in ("population", "sample"):
        raise ValueError("std_mode must be 'population' or 'sample'")
    scores = _target_scores(X, Y, A, B)
    n = len(X)
    ddof = 0 if std_mode == "population" else 1
    if len(scores) - ddof <= 0:
        raise DegenerateDistribution("sample std needs at least two scores")
    std = float(np.std(scores, ddof=ddof))
    if std == 0.0:
        raise DegenerateDistribution("all association scores are identical")
    return float((np.mean(scores[:n]) - np.mean(scores[n:])) / std)


# --- permutation p-values ---------------------------------------------------
#
# For an equal-size partition (X_i, Y_i) of X ∪ Y the statistic equals
# 2 * sum(scores over X_i) - sum(all scores), which is strictly increasing
# in the selected-half sum. Both the exact and the sampled path therefore
# compare selected-half sums, and compute the observed value through the
# same summation code as the enumerated/sampled values so the observed
# partition is bit-equal to its own entry and never counted under the
# strict inequality.


def _subset_sums(values: np.ndarray) -> np.ndarray:
    """Sums of every subset of `values`, indexed by bitmask.

    Built by adding elements in increasing index order, so equal masks
    always reproduce identical floats.
    """
    m = len(values)
    sums = np.zeros(1 << m, dtype=np.float64)
    for i in range(m):
        bit = 1 << i
        sums[bit : 2 * bit] = sums[:bit] + values[i]
    return sums


def _half_sums_for_partitions(scores: np.ndarray, n: int) -> tuple[np.ndarray, float]:
    """Selected-half sums for all C(2n, n) partitions, plus the observed one.

    Splits the 2n scores into two halves and combines k-subsets of the
    first with (n-k)-subsets of the second; the observed partition is the
    full first half (k = n).
    """
    lo_sums = _subset_sums(scores[:n])
    hi_sums = _subset_sums(scores[n:])
    sizes = np.bitwise_count(np.arange(1 << n, dtype=np.uint32))
    lo_by_k = [lo_sums[sizes == k] for k in range(n + 1)]
    hi_by_k = [hi_sums[sizes == k] for k in range(n + 1)]
    parts = [
        (lo_by_k[k][:, None] + hi_by_k[n - k][None, :]).ravel() for k in range(n + 1)
    ]
    observed = lo_sums[(1 << n) - 1] + hi_sums[0]
    return np.concatenate(parts), float(observed)


def p_value_exact(X, Y, A, B, exact_limit: int = 24) -> tuple[float, int]:
    """One-sided p over the full space of equal-size partitions.

    Returns (p, number of partitions). p is the fraction of partitions
    whose statistic strictly exceeds the observed one; the observed
    partition is part of the space, so p <= 1 - 1/C(2n, n).
    """
    scores = _target_scores(X, Y, A, B)
    n = len(X)
    if 2 * n > exact_limit:
        raise TooLargeForExact(
            f"2n = {2 * n} exceeds exact_limit = {exact_limit}; use sampling"
        )
    half_sums, observed = _half_sums_for_partitions(scores, n)
    count = int(np.count_nonzero(half_sums > observed))
    total = math.comb(2 * n, n)
    return count / total, total


def _count_exceeding(scores: np.ndarray, n: int, observed: float,
                     seed: int, start: int, count: int) -> int:
    """How many of the samples [start, start+count) beat the observed sum.

    Each sample selects n of the 2n indices by a partial Fisher-Yates
    shuffle whose swaps are driven by counter-based draws, so the result
    depends only on (seed, sample index).
    """
    m = 2 * n
    draws = rng.u64_draws(seed, start, count, n)
    idx = np.tile(np.arange(m, dtype=np.int64), (count, 1))
    rows = np.arange(count)
    for t in range(n):
        span = np.uint64(m - t)
        j = (draws[:, t] % span).astype(np.int64) + t
        tmp = idx[rows, j].copy()
        idx[rows, j] = idx[:, t]
        idx[:, t] = tmp
    chosen = np.sort(idx[:, :n], axis=1)
    return int(np.count_nonzero(scores[chosen].sum(axis=1) > observed))


def p_value_sampled(X, Y, A, B, n_samples: int = 100_000,
                    seed: int = DEFAULT_SEED, workers: int = 1) -> tuple[float, int]:
    """Monte Carlo p over partitions drawn uniformly with replacement.

    Uses add-one smoothing, (1 + #exceeding) / (n_samples + 1), so a
    finite sample never reports an impossible p of exactly 0. For a fixed
    seed the result is bit-identical for any worker count.
    """
    scores = _target_scores(X, Y, A, B)
    n = len(X)
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    observed = float(scores[None, :n].sum(axis=1)[0])
    chunks = [
        (start, min(start + SAMPLE_CHUNK, n_samples) - start)
        for start in range(0, n_samples, SAMPLE_CHUNK)
    ]
    if workers <= 1 or len(chunks) == 1:
        exceeding = sum(
            _count_exceeding(scores, n, observed, seed, s, c) for s, c in chunks
        )
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            exceeding = sum(
                pool.map(lambda sc: _count_exceeding(scores, n, observed, seed, *sc), chunks)
            )
    return (1 + exceeding) / (n_samples + 1), n_samples


def run_test(
    spec: TestSpecification,
    resolve: Mapping[TextItem, Vector],
    config: PermutationConfig = PermutationConfig(),
    model_id: str = "",
    workers: int = 1,
) -> AssociationResult:
    """Resolve a specification's items and run the full test.

    Target-size balance is checked before any vector work; unresolved
    items are collected across all four sets and reported together.
    """
    if len(spec.targ1) != len(spec.targ2):
        raise UnequalTargetSizes(
            f"{spec.id or 'spec'}: |targ1| = {len(spec.targ1)} but |targ2| = {len(spec.targ2)}"
        )
    missing = [item for item in spec.all_items() if item not in resolve]
    if missing:
        raise MissingEmbedding(missing)
    X = [resolve[i] for i in spec.targ1.items]
    Y = [resolve[i] for i in spec.targ2.items]
    A = [resolve[i] for i in spec.attr1.items]
    B = [resolve[i] for i in spec.attr2.items]

    statistic = test_statistic(X, Y, A, B)
    d = effect_size(X, Y, A, B, std_mode=config.std_mode)
    if 2 * len(X) <= config.exact_limit:
        p, _ = p_value_exact(X, Y, A, B, exact_limit=config.exact_limit)
        method, n_samples, seed = "exact", 0, None
    else:
        p, n_samples = p_value_sampled(
            X, Y, A, B, n_samples=config.n_samples, seed=config.seed, workers=workers
        )
        method, seed = "sampled", config.seed
    return AssociationResult(
        test_id=spec.id,
        model_id=model_id,
        level=spec.level,
        statistic=statistic,
        effect_size=d,
        p_value=p,
        method=method,
        n_samples=n_samples,
        seed=seed,
        significant=(p < config.alpha and d > 0),
    )
