import itertools
import math
from datetime import time

import numpy as np
import pytest
from scipy import stats as scipy_stats

from cdrcommute.exceptions import ConstantInputError, InsufficientDataError
from cdrcommute.objects import GaussianFit, TimeWindow
from cdrcommute.stats import (
    _rank_product_null,
    density_histogram,
    empirical_cdf,
    exact_spearman_p,
    gaussian_fit_window,
    ks_two_sample,
    mean_stderr,
    median_peak,
    qq_points,
    spearman,
)


def brute_force_p(x, y) -> float:
    """Share of all orderings of ``y`` correlating at least as strongly."""
    cx = scipy_stats.rankdata(x)
    cx = cx - cx.mean()
    ry = scipy_stats.rankdata(y)
    orders = np.array(list(itertools.permutations(ry))) - ry.mean()
    scale = np.linalg.norm(cx) * np.linalg.norm(ry - ry.mean())
    rhos = orders @ cx / scale
    observed = abs(float((ry - ry.mean()) @ cx / scale))
    return float(np.mean(np.abs(rhos) >= observed - 1e-9))


def test_exact_spearman_matches_brute_force():
    rng = np.random.default_rng(4)
    checked = 0
    while checked < 200:
        n = int(rng.integers(3, 8))
        x = list(range(n))
        # Small integer range so ties show up regularly
        y = rng.integers(0, 5, n).tolist()
        if len(set(y)) == 1:
            continue
        assert exact_spearman_p(x, y) == pytest.approx(brute_force_p(x, y))
        checked += 1


def test_exact_spearman_reuses_null_distribution():
    """Test tie-free samples of one size share a single enumeration"""
    _rank_product_null.cache_clear()
    x = list(range(8))
    first = [3.0, 1.0, 4.0, 1.5, 5.0, 9.0, 2.0, 6.0]
    second = [2.0, 7.0, 1.0, 8.0, 2.5, 8.5, 0.5, 3.0]

    assert exact_spearman_p(x, first) == pytest.approx(brute_force_p(x, first))
    assert exact_spearman_p(x[::-1], second) == pytest.approx(
        brute_force_p(x[::-1], second)
    )
    info = _rank_product_null.cache_info()
    assert (info.misses, info.hits) == (1, 1)


def test_spearman_worked_example():
    result = spearman([1, 2, 3, 4, 5], [1.0, 2.0, 3.0, 5.0, 4.0])
    assert result.rho == pytest.approx(0.9)
    expected = brute_force_p([1, 2, 3, 4, 5], [1, 2, 3, 5, 4])
    assert result.p_value == pytest.approx(expected)


def test_spearman_ignores_monotone_transforms():
    rng = np.random.default_rng(8)
    for n in (4, 6, 9, 25):
        x = list(range(n))
        y = rng.normal(0, 1, n)
        base = spearman(x, y.tolist())
        for transformed in (np.exp(y), y**3, 2.5 * y - 7.0):
            result = spearman(x, transformed.tolist())
            assert result.rho == pytest.approx(base.rho, abs=1e-12)
            assert result.p_value == pytest.approx(base.p_value, abs=1e-12)

        order = rng.permutation(n)
        shuffled = spearman([x[i] for i in order], [float(y[i]) for i in order])
        assert shuffled.rho == pytest.approx(base.rho, abs=1e-12)


def test_exact_and_approximate_spearman_agree():
    rng = np.random.default_rng(12)
    x = list(range(10))
    for _ in range(25):
        y = (np.arange(10) * rng.uniform(-0.5, 0.5) + rng.normal(0, 1, 10)).tolist()
        result = spearman(x, y)
        assert result.method == "exact"
        approximate = scipy_stats.spearmanr(x, y).pvalue
        assert result.p_value == pytest.approx(approximate, abs=0.02)


def test_spearman_perfect_ranks():
    """Test five strictly increasing bins give the smallest exact p"""
    result = spearman([0, 1, 2, 3, 4], [10.0, 11.0, 15.0, 16.0, 30.0])
    assert result.rho == pytest.approx(1.0)
    assert result.p_value == pytest.approx(2 / 120)
    assert result.n == 5
    assert result.method == "exact"

    reverse = spearman([0, 1, 2, 3], [4.0, 3.0, 2.0, 1.0])
    assert reverse.rho == pytest.approx(-1.0)
    assert reverse.p_value == pytest.approx(2 / 24)


def test_spearman_approximate():
    rng = np.random.default_rng(9)
    x = list(range(40))
    y = (np.arange(40) * 0.1 + rng.normal(0, 1, 40)).tolist()

    result = spearman(x, y)
    expected = scipy_stats.spearmanr(x, y)
    assert result.method == "approximate"
    assert result.rho == pytest.approx(expected.statistic)
    assert result.p_value == pytest.approx(expected.pvalue)


def test_spearman_errors():
    with pytest.raises(InsufficientDataError):
        spearman([0, 1], [1.0, 2.0])
    with pytest.raises(ConstantInputError):
        spearman([0, 1, 2], [5.0, 5.0, 5.0])
    with pytest.raises(ValueError):
        spearman([0, 1, 2], [1.0, 2.0])


def test_ks_two_sample():
    same = ks_two_sample([1.0, 2.0, 3.0], [3.0, 2.0, 1.0])
    assert same.d_statistic == 0.0
    assert same.p_value == 1.0

    apart = ks_two_sample([1.0, 2.0, 3.0], [10.0, 11.0])
    assert apart.d_statistic == 1.0
    assert (apart.n1, apart.n2) == (3, 2)

    with pytest.raises(InsufficientDataError):
        ks_two_sample([], [1.0])


def pooled_cdf_distance(a, b) -> float:
    """Largest ECDF gap, checking every pooled point by counting."""
    return max(
        abs(sum(v <= t for v in a) / len(a) - sum(v <= t for v in b) / len(b))
        for t in list(a) + list(b)
    )


def test_ks_worked_example():
    result = ks_two_sample([1.0, 2.0, 3.0], [2.0, 3.0, 4.0])
    assert result.d_statistic == pytest.approx(1 / 3, abs=1e-12)


def test_ks_properties():
    rng = np.random.default_rng(31)
    for _ in range(40):
        a = rng.normal(0, 1, int(rng.integers(1, 40))).round(1)
        b = rng.normal(0.4, 1.5, int(rng.integers(1, 40))).round(1)

        result = ks_two_sample(a, b)
        assert result.d_statistic == pytest.approx(pooled_cdf_distance(a, b), abs=1e-12)
        assert ks_two_sample(b, a).d_statistic == result.d_statistic
        assert ks_two_sample(np.exp(a), np.exp(b)).d_statistic == result.d_statistic
        assert ks_two_sample(a[::-1], b).d_statistic == result.d_statistic
        assert 0.0 < result.p_value <= 1.0


def test_ks_statistic_matches_scipy():
    rng = np.random.default_rng(6)
    a = rng.normal(0, 1, 300)
    b = rng.normal(0.3, 1, 200)

    result = ks_two_sample(a, b)
    assert result.d_statistic == pytest.approx(scipy_stats.ks_2samp(a, b).statistic)
    effective = math.sqrt(300 * 200 / 500)
    assert result.p_value == pytest.approx(
        scipy_stats.kstwobign.sf(effective * result.d_statistic)
    )


def test_gaussian_fit_window():
    """Test the windowed fit recovers the generating moments"""
    rng = np.random.default_rng(2)
    sample = rng.normal(480.0, 30.0, 100_000)
    noise = rng.uniform(900.0, 1200.0, 5_000)

    fit = gaussian_fit_window(np.concatenate((sample, noise)), (300.0, 660.0))
    assert fit.mu == pytest.approx(480.0, rel=0.02)
    assert fit.sigma == pytest.approx(30.0, rel=0.02)
    assert fit.fit_window == (300.0, 660.0)
    assert 99_990 <= fit.n <= 100_000

    by_window = gaussian_fit_window(sample, TimeWindow(time(5), time(11)))
    assert by_window.fit_window == (300.0, 660.0)


def test_gaussian_fit_window_inclusive_and_sample_sd():
    sample = [10.0, 20.0] * 5 + [30.0]
    fit = gaussian_fit_window(sample, (10.0, 20.0))
    assert fit.n == 10
    assert fit.mu == 15.0
    assert fit.sigma == pytest.approx(np.std([10.0, 20.0] * 5, ddof=1))


def test_gaussian_fit_window_needs_points():
    with pytest.raises(InsufficientDataError):
        gaussian_fit_window([1.0, 2.0, 3.0] * 3, (0.0, 10.0))
    with pytest.raises(InsufficientDataError):
        gaussian_fit_window([5.0] * 20, (0.0, 10.0))


def test_qq_points():
    fit = GaussianFit(100.0, 10.0, (0.0, 200.0), 5)
    points = qq_points([104.0, 90.0, 100.0, 120.0, 95.0], fit)

    assert [e for _, e in points] == [90.0, 95.0, 100.0, 104.0, 120.0]
    theoretical = [t for t, _ in points]
    assert theoretical == sorted(theoretical)
    assert theoretical[2] == pytest.approx(100.0)
    assert theoretical[0] == pytest.approx(100.0 - theoretical[4] + 100.0)


@pytest.mark.parametrize(
    "sample,expected",
    [([3.0], 3.0), ([4.0, 1.0, 3.0, 2.0], 2.0), ([5.0, 1.0, 3.0], 3.0)],
)
def test_median_peak(sample, expected):
    assert median_peak(sample) == expected


def test_median_peak_empty():
    with pytest.raises(InsufficientDataError):
        median_peak([])


def test_density_histogram():
    hist = density_histogram([1.0, 1.5, 7.0, 9.0], (0.0, 5.0, 10.0))
    assert hist.density == pytest.approx((0.1, 0.1))
    assert hist.integral() == pytest.approx(1.0)
    assert hist.n == 4

    empty = density_histogram([], (0.0, 5.0, 10.0))
    assert empty.density == (0.0, 0.0)
    assert empty.n == 0


def test_empirical_cdf():
    cdf = empirical_cdf([2.0, 1.0, 2.0, 4.0])
    assert cdf.values == (1.0, 2.0, 4.0)
    assert cdf.probs == (0.25, 0.75, 1.0)
    assert cdf(0.5) == 0.0
    assert cdf(2.0) == 0.75
    assert cdf(100.0) == 1.0


def test_mean_stderr():
    assert mean_stderr([]) == (None, None)
    assert mean_stderr([4.0]) == (4.0, None)
    mean, stderr = mean_stderr([1.0, 2.0, 3.0, 4.0])
    assert mean == 2.5
    assert stderr == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)
