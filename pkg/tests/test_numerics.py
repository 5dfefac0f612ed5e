import math

import numpy as np
import pytest
import scipy.stats

from pm25cast import RankDeficiencyError
from pm25cast.numerics import (
    f_quantile,
    ks_normal,
    ks_two_sample,
    pearson_test,
    qr_full,
    spearman_test,
)


# ---------------------------------------------------------------- qr_full


def test_qr_identity():
    q, r1 = qr_full(np.eye(4))
    assert np.allclose(q, np.eye(4))
    assert np.allclose(r1, np.eye(4))


def test_qr_single_column():
    # [[3],[4]] has norm 5; positive-diagonal convention fixes the sign.
    q, r1 = qr_full(np.array([[3.0], [4.0]]))
    assert r1.shape == (1, 1)
    assert abs(r1[0, 0] - 5.0) < 1e-12
    assert np.allclose(q[:, 0], [0.6, 0.8])
    assert np.allclose(q @ q.T, np.eye(2), atol=1e-12)


@pytest.mark.parametrize("n,p,seed", [(10, 3, 0), (50, 6, 1), (200, 8, 2), (1000, 10, 3)])
def test_qr_reconstruction_and_orthogonality(n, p, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, p))
    q, r1 = qr_full(a)
    assert q.shape == (n, n)
    assert r1.shape == (p, p)
    assert np.allclose(q[:, :p] @ r1, a, atol=1e-10)
    assert np.allclose(q.T @ q, np.eye(n), atol=1e-10)
    assert np.all(np.diag(r1) > 0)
    # R1 upper triangular
    assert np.allclose(np.tril(r1, -1), 0.0, atol=1e-12)


def test_qr_rank_deficient_raises():
    rng = np.random.default_rng(4)
    col = rng.standard_normal(20)
    a = np.column_stack([col, 2.0 * col, rng.standard_normal(20)])
    with pytest.raises(RankDeficiencyError):
        qr_full(a)


def test_qr_zero_matrix_raises():
    with pytest.raises(RankDeficiencyError):
        qr_full(np.zeros((5, 2)))


# ---------------------------------------------------------------- f_quantile


def test_f_quantile_median_symmetric():
    # F(d, d) has median exactly 1.
    for d in (3, 7, 20):
        assert abs(f_quantile(0.5, d, d) - 1.0) < 1e-8


def test_f_quantile_vs_t_squared():
    # F(1, m) upper quantile equals the squared two-sided t(m) quantile.
    t975 = scipy.stats.t.ppf(0.975, 10)
    assert abs(f_quantile(0.95, 1, 10) - t975 ** 2) < 1e-8


def test_f_quantile_cdf_roundtrip():
    for p in (0.01, 0.25, 0.5, 0.9, 0.99):
        x = f_quantile(p, 7, 524)
        assert abs(scipy.stats.f.cdf(x, 7, 524) - p) < 1e-6


@pytest.mark.parametrize("p", [0.0, 1.0, -0.2, 1.5])
def test_f_quantile_domain(p):
    with pytest.raises(ValueError):
        f_quantile(p, 7, 100)


# ---------------------------------------------------------------- pearson


def test_pearson_exact_line():
    x = np.arange(10.0)
    r, p = pearson_test(x, 2.0 * x + 1.0)
    assert r == 1.0
    assert p == 0.0
    r, p = pearson_test(x, -0.5 * x + 3.0)
    assert r == -1.0
    assert p == 0.0


def test_pearson_p_formula():
    """p must equal the two-sided t-tail at r*sqrt((n-2)/(1-r^2))."""
    rng = np.random.default_rng(8)
    x = rng.standard_normal(40)
    y = 0.3 * x + rng.standard_normal(40)
    r, p = pearson_test(x, y)
    tstat = r * math.sqrt((40 - 2) / (1.0 - r * r))
    expect = 2.0 * scipy.stats.t.sf(abs(tstat), 38)
    assert abs(p - expect) < 1e-12


def test_pearson_independent_noise():
    rng = np.random.default_rng(12)
    x = rng.standard_normal(2000)
    y = rng.standard_normal(2000)
    r, p = pearson_test(x, y)
    assert abs(r) < 0.1
    assert p > 0.01


def test_pearson_degenerate_inputs():
    with pytest.raises(ValueError):
        pearson_test(np.array([1.0, 2.0]), np.array([3.0, 4.0]))
    with pytest.raises(ValueError):
        pearson_test(np.ones(10), np.arange(10.0))


# ---------------------------------------------------------------- spearman


def test_spearman_monotone_endpoints():
    x = np.arange(20.0)
    rho, p = spearman_test(x, np.exp(x / 5.0))
    assert rho == 1.0 and p == 0.0
    rho, p = spearman_test(x, -(x ** 3))
    assert rho == -1.0 and p == 0.0


def test_spearman_tied_values_use_midranks():
    # x = [1, 2, 2, 3] has mid-ranks [1, 2.5, 2.5, 4].
    x = np.array([1.0, 2.0, 2.0, 3.0])
    y = np.array([4.0, 1.0, 3.0, 2.0])
    rx = np.array([1.0, 2.5, 2.5, 4.0])
    ry = np.array([4.0, 1.0, 3.0, 2.0])
    expect, _ = pearson_test(rx, ry)
    rho, _ = spearman_test(x, y)
    assert abs(rho - expect) < 1e-12


def test_spearman_monotone_transform_invariance():
    rng = np.random.default_rng(3)
    x = rng.standard_normal(50)
    y = rng.standard_normal(50)
    base, _ = spearman_test(x, y)
    for k in range(20):
        a = rng.uniform(0.5, 3.0)
        b = rng.uniform(-2.0, 2.0)
        for g in (a * x + b, np.exp(a * x), x ** 3, np.arctan(x) * a):
            rho, _ = spearman_test(g, y)
            assert rho == pytest.approx(base, abs=1e-12)


# ---------------------------------------------------------------- KS


def test_ks_identical_samples():
    rng = np.random.default_rng(9)
    a = rng.standard_normal(100)
    d, p = ks_two_sample(a, a.copy())
    assert d == 0.0
    assert p == 1.0


def test_ks_disjoint_supports():
    a = np.arange(50.0)
    b = np.arange(50.0) + 1000.0
    d, p = ks_two_sample(a, b)
    assert d == 1.0
    assert p < 1e-10


def test_ks_symmetry():
    rng = np.random.default_rng(10)
    a = rng.standard_normal(80)
    b = rng.standard_normal(120) + 0.3
    da, pa = ks_two_sample(a, b)
    db, pb = ks_two_sample(b, a)
    assert da == db and pa == pb


def test_ks_hand_case():
    """D for two tiny interleaved samples, worked by hand."""
    a = np.array([1.0, 2.0, 3.0])
    b = np.array([1.5, 2.5, 3.5])
    d, p = ks_two_sample(a, b)
    assert abs(d - 1.0 / 3.0) < 1e-12
    en = math.sqrt(9.0 / 6.0)
    assert abs(p - scipy.stats.kstwobign.sf(en * d)) < 1e-12


def test_ks_normal_gaussian_sample():
    rng = np.random.default_rng(11)
    x = rng.standard_normal(2000)
    d, p = ks_normal(x)
    assert p > 0.05


def test_ks_normal_bimodal_rejected():
    rng = np.random.default_rng(13)
    x = np.concatenate([rng.normal(-2.0, 0.2, 500), rng.normal(2.0, 0.2, 500)])
    d, p = ks_normal(x)
    assert p < 1e-6


def test_ks_normal_degenerate():
    with pytest.raises(ValueError):
        ks_normal(np.ones(50))
    with pytest.raises(ValueError):
        ks_normal(np.array([1.0, 2.0]))
