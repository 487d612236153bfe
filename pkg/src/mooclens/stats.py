"""Rating distributions, correlations, and group tests on topic distributions."""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _io
from ._special import f_sf
from ._validation import check_positive_int, check_seed

logger = logging.getLogger(__name__)

DEFAULT_MEAN_BINS = (1.0, 2.0, 3.0, 4.0, 4.5, 5.0)
SENTIMENT_LABELS = ("Positive", "Neutral", "Negative")


class UndefinedCorrelationError(ValueError):
    """A correlation was requested on a constant (or too short) series."""


@dataclass(frozen=True)
class RatingHistogram:
    buckets: dict
    total: int

    def percentages(self) -> dict:
        return {k: 100.0 * v / self.total for k, v in self.buckets.items()}

    def share(self, low: float, high: float | None = None) -> float:
        """Percentage of ratings in ``[low, high]`` (``high`` defaults to ``low``)."""
        high = low if high is None else high
        return 100.0 * sum(v for k, v in self.buckets.items() if low <= k <= high) / self.total

    def plot_rows(self):
        return [(f"{k:.1f}", v) for k, v in sorted(self.buckets.items())]


def rating_histogram(corpus) -> RatingHistogram:
    """Count of reviews per half-star value (only values that occur)."""
    if not len(corpus):
        raise ValueError("cannot build a histogram of an empty corpus")
    counts = Counter(r.rating for r in corpus.reviews)
    buckets = {k: counts[k] for k in sorted(counts, reverse=True)}
    return RatingHistogram(buckets, sum(buckets.values()))


@dataclass(frozen=True)
class BinnedCounts:
    edges: tuple[float, ...]
    counts: tuple[int, ...]
    values: dict = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.counts)

    def percentages(self) -> list[float]:
        return [100.0 * c / self.total for c in self.counts] if self.total else [0.0] * len(self.counts)

    def labels(self) -> list[str]:
        n = len(self.counts)
        return [
            f"[{self.edges[i]:g},{self.edges[i + 1]:g}{']' if i == n - 1 else ')'}" for i in range(n)
        ]

    def plot_rows(self):
        return list(zip(self.labels(), self.counts))


def bin_values(values: Sequence[float], edges: Sequence[float]) -> list[int]:
    """Counts over ``[e_i, e_{i+1})`` intervals with the last interval closed."""
    edges = [float(e) for e in edges]
    if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
        raise ValueError("bin edges must be strictly increasing with at least two entries")
    counts = [0] * (len(edges) - 1)
    for v in values:
        if not edges[0] <= v <= edges[-1]:
            raise ValueError(f"value {v} outside the bin range [{edges[0]}, {edges[-1]}]")
        for i in range(len(counts)):
            if edges[i] <= v < edges[i + 1] or (i == len(counts) - 1 and v == edges[-1]):
                counts[i] += 1
                break
    return counts


def course_means(corpus) -> dict[str, float]:
    out = {}
    for cid in corpus.courses:
        ratings = [r.rating for r in corpus.reviews_for(cid)]
        if not ratings:
            raise ValueError(f"course {cid!r} has no rated review")
        out[cid] = math.fsum(ratings) / len(ratings)
    return out


def course_mean_distribution(corpus, bin_edges: Sequence[float] = DEFAULT_MEAN_BINS) -> BinnedCounts:
    means = course_means(corpus)
    return BinnedCounts(tuple(float(e) for e in bin_edges), tuple(bin_values(means.values(), bin_edges)), means)


def _pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape:
        raise ValueError("x and y must be 1-d sequences of equal length")
    if x.size < 2:
        raise UndefinedCorrelationError("need at least two observations")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValueError("x and y must be finite")
    return x, y


def pearson(x, y) -> float:
    """Product-moment correlation; constant input raises :class:`UndefinedCorrelationError`."""
    x, y = _pair(x, y)
    mx, my = math.fsum(x) / x.size, math.fsum(y) / y.size
    dx, dy = x - mx, y - my
    sxx, syy = math.fsum(dx * dx), math.fsum(dy * dy)
    if sxx == 0 or syy == 0:
        raise UndefinedCorrelationError("correlation is undefined for a constant series")
    r = math.fsum(dx * dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def average_ranks(values) -> np.ndarray:
    """1-based ranks; tied values share the mean of the ranks they span."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(values.size)
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    x, y = _pair(x, y)
    return pearson(average_ranks(x), average_ranks(y))


@dataclass(frozen=True)
class GroupedTopicMatrix:
    """Per-course topic percentage rows with a group label per row."""

    rows: np.ndarray
    groups: tuple[str, ...]

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[0] != len(self.groups):
            raise ValueError("rows must be a 2-d array with one group label per row")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "groups", tuple(self.groups))

    def group_names(self) -> list[str]:
        return sorted(set(self.groups))


@dataclass(frozen=True)
class PillaiResult:
    pillai: float
    f: float
    df1: float
    df2: float
    p: float
    method: str = "F"
    note: str = ""


def _reduce(matrix: GroupedTopicMatrix, drop_last: bool) -> np.ndarray:
    # topic percentages sum to 100, so the last column is determined by the rest
    return matrix.rows[:, :-1] if drop_last else matrix.rows


def _scatter(x: np.ndarray, groups: Sequence[str]):
    labels = np.asarray(groups, dtype=object)
    grand = x.mean(axis=0)
    p = x.shape[1]
    h = np.zeros((p, p))
    e = np.zeros((p, p))
    for g in sorted(set(groups)):
        xg = x[labels == g]
        mg = xg.mean(axis=0)
        diff = (mg - grand)[:, None]
        h += xg.shape[0] * diff @ diff.T
        centred = xg - mg
        e += centred.T @ centred
    return h, e


def pillai_trace(x: np.ndarray, groups: Sequence[str]) -> float:
    """``trace(H (H + E)^+)``; the pseudo-inverse keeps it defined for singular scatter."""
    h, e = _scatter(x, groups)
    return float(np.trace(h @ np.linalg.pinv(h + e)))


def manova_pillai(matrix: GroupedTopicMatrix, drop_last: bool = True, n_perm: int = 999, seed: int = 0) -> PillaiResult:
    """One-way MANOVA with Pillai's trace and its F approximation.

    When ``H + E`` is singular after the reduction the F test is replaced by
    :func:`permutation_test` (``method == "permutation"``).
    """
    x = _reduce(matrix, drop_last)
    names = matrix.group_names()
    g, (n_obs, p) = len(names), x.shape
    if g < 2:
        raise ValueError("MANOVA needs at least two groups")
    sizes = Counter(matrix.groups)
    small = [name for name in names if sizes[name] < p + 1]
    if small:
        raise ValueError(f"groups {small} have fewer than {p + 1} rows (dimension + 1)")
    h, e = _scatter(x, matrix.groups)
    total = h + e
    if np.linalg.matrix_rank(total) < p:
        v = pillai_trace(x, matrix.groups)
        p_perm = permutation_test(matrix, n_perm=n_perm, seed=seed, drop_last=drop_last)
        note = "H + E is singular; p-value from a permutation test"
        logger.warning(note)
        return PillaiResult(v, float("nan"), float("nan"), float("nan"), p_perm, "permutation", note)
    v = float(np.trace(h @ np.linalg.inv(total)))
    s = min(p, g - 1)
    m = (abs(p - (g - 1)) - 1) / 2.0
    n = (n_obs - g - p - 1) / 2.0
    df1 = s * (2 * m + s + 1)
    df2 = s * (2 * n + s + 1)
    if df2 <= 0:
        raise ValueError("not enough rows for the F approximation")
    f = math.inf if v >= s else (2 * n + s + 1) / (2 * m + s + 1) * v / (s - v)
    return PillaiResult(v, f, df1, df2, f_sf(f, df1, df2))


def permutation_test(matrix: GroupedTopicMatrix, statistic: str = "pillai", n_perm: int = 999, seed: int = 0,
                     drop_last: bool = True) -> float:
    """``(1 + #{permuted >= observed}) / (1 + n_perm)`` over shuffled group labels."""
    if statistic != "pillai":
        raise ValueError(f"unsupported statistic {statistic!r}")
    n_perm = check_positive_int(n_perm, "n_perm", minimum=100)
    seed = check_seed(seed, "seed")
    x = _reduce(matrix, drop_last)
    observed = pillai_trace(x, matrix.groups)
    tol = 1e-10 * max(1.0, abs(observed))
    rng = np.random.Generator(np.random.PCG64(seed))
    labels = np.asarray(matrix.groups, dtype=object)
    hits = 0
    for _ in range(n_perm):
        if pillai_trace(x, labels[rng.permutation(labels.size)]) >= observed - tol:
            hits += 1
    return (1 + hits) / (1 + n_perm)


def grouped_matrix(profiles, which: str = "qual", labels: Sequence[str] = ("Positive", "Negative")) -> GroupedTopicMatrix:
    """Rows of the chosen topic vector for courses whose majority label is in ``labels``."""
    attr = f"{which}_topics"
    keep = [p for p in profiles if p.sentiment is not None and p.sentiment.majority_label in labels]
    rows = np.array([getattr(p, attr) for p in keep], dtype=float).reshape(len(keep), -1)
    return GroupedTopicMatrix(rows, tuple(p.sentiment.majority_label for p in keep))


def topic_distribution_by_sentiment(profiles, which: str = "qual") -> dict[str, np.ndarray]:
    """Mean topic percentages per majority sentiment label, renormalized to 100."""
    attr = f"{which}_topics"
    grouped: dict[str, list] = {}
    for prof in profiles:
        if prof.sentiment is None:
            continue
        grouped.setdefault(prof.sentiment.majority_label, []).append(np.asarray(getattr(prof, attr), dtype=float))
    out = {}
    for label in SENTIMENT_LABELS:
        rows = grouped.get(label)
        if not rows:
            logger.info("no course with majority label %s; omitted", label)
            continue
        mean = np.mean(rows, axis=0)
        out[label] = mean / mean.sum() * 100.0
    return out


def write_histogram(path, hist: RatingHistogram) -> None:
    pct = hist.percentages()
    _io.write_csv(path, ["rating", "count", "percent"], [(k, v, pct[k]) for k, v in sorted(hist.buckets.items())])


def write_binned(path, binned: BinnedCounts) -> None:
    _io.write_csv(path, ["bin", "count", "percent"],
                  [(lab, c, pc) for lab, c, pc in zip(binned.labels(), binned.counts, binned.percentages())])

