"""Reference-ranking aggregation and correlation checks.

Dataset benchmark results arrive as one score vector per model scale.
Scales that separate datasets strongly carry more signal, so per-scale
rankings are combined with weights proportional to the cross-dataset
standard deviation at that scale. The correlation helpers validate a
computed quality score against the aggregated reference ranking.
"""

from __future__ import annotations

import math
import statistics
from typing import Mapping, Sequence

__all__ = [
    "average_ranks",
    "competition_ranks",
    "pearson",
    "sample_std",
    "spearman",
    "srank",
]


def competition_ranks(scores: Sequence[float]) -> list[int]:
    """Rank scores with higher-is-better competition semantics.

    Tied values share the smallest rank of their block and the next
    distinct value skips by the tie count ("1224" style).
    """
    if not scores:
        raise ValueError("cannot rank an empty score vector")
    return [1 + sum(other > s for other in scores) for s in scores]


def average_ranks(values: Sequence[float]) -> list[float]:
    """Ascending fractional ranks; ties get the mean of their positions."""
    n = len(values)
    order = sorted(range(n), key=lambda i: values[i])
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and values[order[j + 1]] == values[order[i]]:
            j += 1
        mean_pos = (i + j) / 2 + 1
        for t in range(i, j + 1):
            ranks[order[t]] = mean_pos
        i = j + 1
    return ranks


def sample_std(values: Sequence[float]) -> float:
    """Sample (n-1) standard deviation."""
    if len(values) < 2:
        raise ValueError("sample std needs at least 2 values")
    return statistics.stdev(values)


def srank(
    rank_matrix: Mapping[str, Sequence[float]],
    sigmas: Mapping[str, float],
) -> list[float]:
    """Std-weighted aggregation of per-scale ranks (lower is better).

    Weights are sigma_m / sum(sigma); with a single scale the ranks pass
    through verbatim. If every sigma is zero the scales are weighted
    equally, mirroring the degenerate-cohort convention elsewhere.
    """
    if not rank_matrix:
        raise ValueError("need at least one scale")
    if set(rank_matrix) != set(sigmas):
        raise ValueError("rank matrix and sigmas must cover the same scales")
    lengths = {len(v) for v in rank_matrix.values()}
    if len(lengths) != 1:
        raise ValueError("every scale must rank the same dataset set")
    n = lengths.pop()
    if n == 0:
        raise ValueError("empty dataset set")

    scales = sorted(rank_matrix)
    total_sigma = sum(sigmas[s] for s in scales)
    if total_sigma > 0:
        weights = {s: sigmas[s] / total_sigma for s in scales}
    else:
        weights = {s: 1.0 / len(scales) for s in scales}
    return [
        sum(weights[s] * rank_matrix[s][i] for s in scales) for i in range(n)
    ]


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Product-moment correlation."""
    if len(x) != len(y):
        raise ValueError("vectors must have equal length")
    n = len(x)
    if n < 2:
        raise ValueError("correlation needs at least 2 points")
    # Exact-constant input is zero variance even when the float mean
    # rounds and leaves tiny nonzero squared deviations.
    if all(a == x[0] for a in x) or all(b == y[0] for b in y):
        raise ValueError("correlation undefined for zero-variance input")
    mx = sum(x) / n
    my = sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    if sxx == 0.0 or syy == 0.0:
        raise ValueError("correlation undefined for zero-variance input")
    r = sxy / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Rank correlation: Pearson over average-ranked values.

    On tie-free data this equals 1 - 6*sum(d^2)/(n(n^2-1)).
    """
    return pearson(average_ranks(x), average_ranks(y))
