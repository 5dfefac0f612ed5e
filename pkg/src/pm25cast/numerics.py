"""Shared numerical routines: sign-fixed QR, F quantiles, rank and ECDF tests.

The statistical tests return asymptotic p-values from fixed closed forms
(t approximation for the correlation tests, Kolmogorov limit law for the
ECDF tests) so that results are reproducible across library versions.
"""

from typing import NamedTuple

import numpy as np
from scipy import special, stats

from .errors import RankDeficiencyError


class TestResult(NamedTuple):
    statistic: float
    pvalue: float


def qr_full(a, rank_tol=1e-10):
    """Complete QR factorisation with a positive R1 diagonal.

    Parameters
    ----------
    a : ndarray, shape (n, q)
        Matrix with n >= q and full column rank.
    rank_tol : float
        Relative tolerance on the R1 diagonal; entries below
        ``rank_tol * max|diag|`` flag rank deficiency.

    Returns
    -------
    q_mat : ndarray, shape (n, n)
        Orthogonal factor, including the residual-space columns.
    r1 : ndarray, shape (q, q)
        Upper-triangular factor with a strictly positive diagonal.

    Raises
    ------
    RankDeficiencyError
        If any diagonal entry of R1 falls below tolerance.

    Notes
    -----
    LAPACK leaves the signs of the factors unspecified. Flipping rows of
    R1 and the matching columns of Q so that diag(R1) > 0 makes every
    downstream quantity that depends on Q itself (rotated second-derivative
    arrays, bias vectors) reproducible bit-for-bit across BLAS builds.
    """
    a = np.asarray(a, dtype=float)
    n, ncols = a.shape
    if n < ncols:
        raise ValueError(f"need n >= q, got shape {a.shape}")
    q_mat, r_mat = np.linalg.qr(a, mode="complete")
    r1 = r_mat[:ncols, :]
    for j in range(ncols):
        if r1[j, j] < 0.0:
            r1[j, :] = -r1[j, :]
            q_mat[:, j] = -q_mat[:, j]
    diag = np.abs(np.diag(r1))
    if diag.size and (diag.max() == 0.0 or diag.min() <= rank_tol * diag.max()):
        raise RankDeficiencyError(
            f"columns numerically dependent (min |R1 diag| = {diag.min():.3e})"
        )
    return q_mat, r1


def f_quantile(p, dfn, dfd):
    """Quantile of the F(dfn, dfd) distribution at probability p."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly between 0 and 1")
    return float(stats.f.ppf(p, dfn, dfd))


def _t_two_sided_p(t_stat, df):
    return float(2.0 * stats.t.sf(abs(t_stat), df))


def pearson_test(x, y):
    """Pearson correlation with the two-sided t approximation p-value.

    p = 2 * P(T_{n-2} > |r| * sqrt((n-2) / (1-r^2))). A correlation of
    exactly +-1 gives p = 0.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d arrays of equal length")
    n = x.size
    if n < 3:
        raise ValueError("need at least 3 observations")
    xd = x - x.mean()
    yd = y - y.mean()
    denom = np.sqrt((xd * xd).sum() * (yd * yd).sum())
    if denom == 0.0:
        raise ValueError("zero variance input")
    r = float(np.clip((xd * yd).sum() / denom, -1.0, 1.0))
    if abs(r) == 1.0:
        return TestResult(r, 0.0)
    t_stat = r * np.sqrt((n - 2) / (1.0 - r * r))
    return TestResult(r, _t_two_sided_p(t_stat, n - 2))


def spearman_test(x, y):
    """Spearman rank correlation using mid-ranks for ties.

    The statistic is the Pearson correlation of the rank vectors; the
    p-value reuses the same two-sided t approximation on n-2 degrees of
    freedom. Invariant under strictly increasing transforms of either
    argument.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d arrays of equal length")
    rx = stats.rankdata(x)
    ry = stats.rankdata(y)
    return pearson_test(rx, ry)


def _ecdf_distance(a_sorted, b_sorted):
    pooled = np.concatenate([a_sorted, b_sorted])
    cdf_a = np.searchsorted(a_sorted, pooled, side="right") / a_sorted.size
    cdf_b = np.searchsorted(b_sorted, pooled, side="right") / b_sorted.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def ks_two_sample(a, b):
    """Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.

    D is the sup-distance between the two empirical CDFs evaluated over
    the pooled sample; p = K(sqrt(na*nb/(na+nb)) * D) where K is the
    Kolmogorov survival function. Identical samples give (0, 1).
    """
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be non-empty")
    d = _ecdf_distance(a, b)
    en = np.sqrt(a.size * b.size / (a.size + b.size))
    return TestResult(d, float(special.kolmogorov(en * d)))


def ks_normal(x):
    """One-sample KS test against a normal fitted by mean and sd (ddof=1).

    D compares the empirical CDF with the fitted normal CDF at the sample
    points (both one-sided gaps); p = K(sqrt(n) * D). The estimated
    parameters make the p-value approximate, which is acceptable for a
    screening diagnostic.
    """
    x = np.sort(np.asarray(x, dtype=float))
    n = x.size
    if n < 3:
        raise ValueError("need at least 3 observations")
    sd = x.std(ddof=1)
    if sd == 0.0:
        raise ValueError("zero variance input")
    cdf = stats.norm.cdf(x, loc=x.mean(), scale=sd)
    grid = np.arange(1, n + 1) / n
    d = float(np.max(np.maximum(np.abs(cdf - grid), np.abs(cdf - (grid - 1.0 / n)))))
    return TestResult(d, float(special.kolmogorov(np.sqrt(n) * d)))
