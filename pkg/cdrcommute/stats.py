"""Statistics used by the timing and distance analyses."""

from __future__ import annotations

import functools
import itertools
import math
from collections.abc import Sequence

import numpy as np
from scipy import special, stats

from cdrcommute.constants import EXACT_SPEARMAN_MAX_N, MIN_GAUSSIAN_FIT_POINTS
from cdrcommute.exceptions import ConstantInputError, InsufficientDataError
from cdrcommute.objects import (
    EmpiricalCdf,
    GaussianFit,
    Histogram,
    KsResult,
    SpearmanResult,
    TimeWindow,
)
from cdrcommute.utils import minutes_of_day

# Permutations scored per numpy batch during exact enumeration
PERMUTATION_BATCH = 50_000

# Smallest reported p-value
MIN_P_VALUE = float(np.finfo(float).tiny)


def _window_minutes(window: TimeWindow | tuple[float, float]) -> tuple[float, float]:
    if isinstance(window, TimeWindow):
        return minutes_of_day(window.start), minutes_of_day(window.end)
    return float(window[0]), float(window[1])


def gaussian_fit_window(
    sample: Sequence[float], window: TimeWindow | tuple[float, float]
) -> GaussianFit:
    """Fit a Gaussian to the part of a time-of-day sample inside a window.

    The fit is the sample mean and (n - 1) standard deviation of the points
    within ``[lo, hi]``.

    :param sample: Times of day in minutes since midnight
    :param window: (:class:`cdrcommute.objects.TimeWindow` or minutes) - Fit
        window
    :return: :class:`cdrcommute.objects.GaussianFit`
    :raises InsufficientDataError: with fewer than 10 points in the window, or
        when they have no spread
    """
    lo, hi = _window_minutes(window)
    values = np.asarray(sample, dtype=float)
    inside = values[(values >= lo) & (values <= hi)]

    if len(inside) < MIN_GAUSSIAN_FIT_POINTS:
        raise InsufficientDataError(
            f"Gaussian fit needs {MIN_GAUSSIAN_FIT_POINTS} points in window, "
            f"found {len(inside)}"
        )

    sigma = float(np.std(inside, ddof=1))
    if sigma <= 0:
        raise InsufficientDataError("Gaussian fit window holds a single value")

    return GaussianFit(float(np.mean(inside)), sigma, (lo, hi), len(inside))


def qq_points(sample: Sequence[float], fit: GaussianFit) -> list[tuple[float, float]]:
    """Pair each order statistic with the fitted Gaussian's quantile.

    :return: ``(theoretical, empirical)`` pairs in ascending order
    """
    ordered = np.sort(np.asarray(sample, dtype=float))
    n = len(ordered)
    probs = (np.arange(1, n + 1) - 0.5) / n
    theoretical = special.ndtri(probs) * fit.sigma + fit.mu
    return [(float(t), float(e)) for t, e in zip(theoretical, ordered)]


def median_peak(sample: Sequence[float]) -> float:
    """Lower median: the ``ceil(n / 2)``-th order statistic."""
    if not len(sample):
        raise InsufficientDataError("median of an empty sample")
    ordered = sorted(sample)
    return float(ordered[math.ceil(len(ordered) / 2) - 1])


def _scaled_ranks(values: Sequence[float]) -> np.ndarray:
    # Midranks are multiples of 0.5, so doubling them keeps integer arithmetic
    return (2 * stats.rankdata(values)).astype(np.int64)


@functools.lru_cache(maxsize=32)
def _rank_product_null(
    rx: tuple[int, ...], ry: tuple[int, ...]
) -> tuple[np.ndarray, np.ndarray]:
    """Distinct values of ``rx @ perm(ry)`` over all permutations, with counts.

    Both rank tuples are sorted, so every tie-free sample of one size shares
    an entry.
    """
    x = np.asarray(rx, dtype=np.int64)
    tally: dict[int, int] = {}
    permutations = itertools.permutations(ry)

    while batch := list(itertools.islice(permutations, PERMUTATION_BATCH)):
        sums, counts = np.unique(
            np.asarray(batch, dtype=np.int64) @ x, return_counts=True
        )
        for value, count in zip(sums.tolist(), counts.tolist()):
            tally[value] = tally.get(value, 0) + count

    values = np.array(sorted(tally), dtype=np.int64)
    return values, np.array([tally[v] for v in values.tolist()], dtype=np.int64)


def exact_spearman_p(x: Sequence[float], y: Sequence[float]) -> float:
    """Two-sided permutation p-value of Spearman's rho over all ``n!`` orders.

    :return: Share of permutations of ``y`` whose |rho| is at least the
        observed one
    """
    rx = _scaled_ranks(x)
    ry = _scaled_ranks(y)
    n = len(rx)
    offset = int(rx.sum()) * int(ry.sum())
    observed = abs(n * int(rx @ ry) - offset)

    values, counts = _rank_product_null(
        tuple(sorted(rx.tolist())), tuple(sorted(ry.tolist()))
    )
    hits = int(counts[np.abs(n * values - offset) >= observed].sum())

    return hits / int(counts.sum())


def spearman(x: Sequence[float], y: Sequence[float]) -> SpearmanResult:
    """Spearman rank correlation with a two-sided p-value.

    Ties get midranks.  Up to ``CDRCOMMUTE_EXACT_SPEARMAN_MAX_N`` points the
    p-value enumerates every permutation, above that it comes from Student's t.

    :param x: Ordinal positions (for example distance bin indices)
    :param y: Values to correlate with ``x``
    :return: :class:`cdrcommute.objects.SpearmanResult`
    :raises InsufficientDataError: with fewer than 3 points
    :raises ConstantInputError: if either input is constant
    """
    if len(x) != len(y):
        raise ValueError("x and y must have the same length")

    n = len(x)
    if n < 3:
        raise InsufficientDataError(f"Spearman needs at least 3 points, got {n}")
    if len(set(x)) == 1 or len(set(y)) == 1:
        raise ConstantInputError()

    rx = stats.rankdata(x)
    ry = stats.rankdata(y)
    rho = float(np.clip(np.corrcoef(rx, ry)[0, 1], -1.0, 1.0))

    if n <= EXACT_SPEARMAN_MAX_N:
        p_value = exact_spearman_p(x, y)
        method = "exact"
    else:
        if abs(rho) >= 1.0:
            p_value = 0.0
        else:
            t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
            p_value = float(2 * stats.t.sf(abs(t), n - 2))
        method = "approximate"

    return SpearmanResult(rho, min(1.0, max(MIN_P_VALUE, p_value)), n, method)


def ks_two_sample(a: Sequence[float], b: Sequence[float]) -> KsResult:
    """Two-sided two-sample Kolmogorov-Smirnov test.

    The p-value is the asymptotic Kolmogorov tail at
    ``sqrt(n1 * n2 / (n1 + n2)) * D``.

    :return: :class:`cdrcommute.objects.KsResult`
    """
    first = np.sort(np.asarray(a, dtype=float))
    second = np.sort(np.asarray(b, dtype=float))
    n1, n2 = len(first), len(second)
    if not n1 or not n2:
        raise InsufficientDataError("KS test needs two non-empty samples")

    pooled = np.concatenate((first, second))
    cdf1 = np.searchsorted(first, pooled, side="right") / n1
    cdf2 = np.searchsorted(second, pooled, side="right") / n2
    d = float(np.max(np.abs(cdf1 - cdf2)))

    effective = math.sqrt(n1 * n2 / (n1 + n2))
    p_value = float(special.kolmogorov(effective * d))

    return KsResult(d, min(1.0, max(MIN_P_VALUE, p_value)), n1, n2)


def density_histogram(values: Sequence[float], edges: Sequence[float]) -> Histogram:
    """Histogram over fixed edges, normalized to unit area when non-empty."""
    values = np.asarray(values, dtype=float)
    edges = tuple(float(e) for e in edges)

    if not len(values):
        return Histogram(edges, tuple(0.0 for _ in edges[1:]), 0)

    density, _ = np.histogram(values, bins=edges, density=True)
    return Histogram(edges, tuple(float(d) for d in density), len(values))


def empirical_cdf(values: Sequence[float]) -> EmpiricalCdf:
    """Exact empirical CDF over the distinct values of a sample."""
    if not len(values):
        return EmpiricalCdf()

    distinct, counts = np.unique(np.asarray(values, dtype=float), return_counts=True)
    probs = np.cumsum(counts) / len(values)
    return EmpiricalCdf(
        tuple(float(v) for v in distinct), tuple(float(p) for p in probs)
    )


def mean_stderr(values: Sequence[float]) -> tuple[float | None, float | None]:
    """Mean and standard error (``sd / sqrt(n)``, needs two values)."""
    if not len(values):
        return None, None

    data = np.asarray(values, dtype=float)
    mean = float(np.mean(data))
    if len(data) < 2:
        return mean, None

    return mean, float(np.std(data, ddof=1) / math.sqrt(len(data)))
