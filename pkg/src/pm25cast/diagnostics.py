"""Nonlinearity diagnostics: mean-square curvatures, bias, residual screens.

The curvature computation follows the QR route: factor the Jacobian,
transform each second-derivative face by L = R1^-1, rotate the stack of
faces by Q' across the face index, then split the rotated stack into the
first q faces (parameter-effects part) and the remaining n-q faces
(intrinsic part). Mean-square curvatures come from the closed-form sphere
integral; reports carry them premultiplied by rho = sigma_hat*sqrt(q) so
they compare directly against 1/sqrt(F(q, n-q, alpha)).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from . import model
from .numerics import f_quantile, ks_normal, pearson_test, qr_full, spearman_test


@dataclass(frozen=True)
class CurvatureReport:
    rho_k_n: float
    rho_k_p: float
    critical: float
    thresholds: tuple
    planar_ok: bool
    uniform_ok: bool
    alpha: float


@dataclass(frozen=True)
class BiasReport:
    bias: np.ndarray
    percent_bias: np.ndarray  # nan marks entries where theta_hat is 0


@dataclass(frozen=True)
class ResidualDiagnostics:
    spearman: dict
    lag1: tuple
    ks_normality: tuple
    heteroscedastic: bool
    autocorrelated: bool
    alpha: float


def _transformed_faces(v1, v2):
    """Q plus the faces M = L' V2_face L, with L = R1^-1."""
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    n, q = v1.shape
    if n <= q:
        raise ValueError(f"need n > q faces (n={n}, q={q})")
    if v2.shape != (n, q, q):
        raise ValueError(f"second-derivative array must be ({n}, {q}, {q})")
    q_mat, r1 = qr_full(v1)
    ell = solve_triangular(r1, np.eye(q))
    faces = np.einsum("ki,skl,lj->sij", ell, v2, ell)
    return q_mat, ell, faces


def rotated_faces(v1, v2):
    """Rotated face stacks (parameter-effects part, intrinsic part).

    The rotation applies Q' along the face index: A[t] = sum_s Q[s,t]*M[s].
    The first q rotated faces span the tangent directions, the remaining
    n-q the residual directions.
    """
    q_mat, _, faces = _transformed_faces(v1, v2)
    q = faces.shape[1]
    rotated = np.einsum("st,sij->tij", q_mat, faces)
    return rotated[:q], rotated[q:]


def mean_square_curvature(faces, q):
    """Closed form of the sphere-averaged squared curvature of a face stack.

    For each symmetric face A the direction average of (d'Ad)^2 over the
    unit sphere is (2*tr(A^2) + tr(A)^2) / (q*(q+2)); summing over faces
    and taking the square root gives the mean-square curvature.
    """
    if faces.shape[0] == 0:
        return 0.0
    frob = np.einsum("tij,tij->", faces, faces)
    traces = np.einsum("tii->t", faces)
    return math.sqrt((2.0 * frob + float(traces @ traces)) / (q * (q + 2)))


def bates_curvature(v1, v2, sigma_hat, alpha=0.05):
    """Scaled mean-square curvatures with their critical value.

    Returns a CurvatureReport carrying rho*K for the intrinsic and
    parameter-effects parts (rho = sigma_hat*sqrt(q)), the critical value
    1/sqrt(F(q, n-q, 1-alpha quantile)), advisory thresholds at 1x, 0.5x
    and 0.2x critical, and pass flags against the 1x threshold: planar_ok
    for the intrinsic measure, uniform_ok for the parameter-effects one.
    """
    a_param, a_intrinsic = rotated_faces(v1, v2)
    n, q = np.asarray(v1).shape
    rho = float(sigma_hat) * math.sqrt(q)
    rho_k_p = rho * mean_square_curvature(a_param, q)
    rho_k_n = rho * mean_square_curvature(a_intrinsic, q)
    critical = 1.0 / math.sqrt(f_quantile(1.0 - alpha, q, n - q))
    return CurvatureReport(
        rho_k_n=rho_k_n,
        rho_k_p=rho_k_p,
        critical=critical,
        thresholds=(critical, 0.5 * critical, 0.2 * critical),
        planar_ok=rho_k_n < critical,
        uniform_ok=rho_k_p < critical,
        alpha=alpha,
    )


def box_bias(v1, v2, sigma_hat, theta_hat):
    """Leading-order estimation bias of theta_hat and its percentage form.

    bias = -(sigma_hat^2 / 2) * L L' * sum_i V1_i' * tr(M_i) with
    M_i = L' V2_i L. Entries of percent_bias where theta_hat is exactly 0
    are reported as nan.
    """
    theta_hat = np.asarray(theta_hat, dtype=float)
    _, ell, faces = _transformed_faces(v1, v2)
    face_traces = np.einsum("sii->s", faces)
    bias = -0.5 * float(sigma_hat) ** 2 * (ell @ ell.T) @ (np.asarray(v1).T @ face_traces)
    percent = np.full_like(bias, np.nan)
    nonzero = theta_hat != 0.0
    percent[nonzero] = 100.0 * bias[nonzero] / theta_hat[nonzero]
    return BiasReport(bias=bias, percent_bias=percent)


def residual_screen(fit, frame, alpha=0.05):
    """Heteroscedasticity, autocorrelation and normality screens.

    Spearman tests relate |standardized residual| to the fitted values and
    to each raw regressor on the used rows (constant columns are skipped);
    the lag test is a Pearson correlation over consecutive-day residual
    pairs; normality is a KS test on the raw residuals. Flags compare
    p-values against `alpha`.
    """
    if fit.residuals.size < 3:
        raise ValueError("need at least 3 residuals")
    idx = model.rows_used(fit.spec, frame)
    abs_sr = np.abs(fit.std_residuals)

    spearman = {"fitted": spearman_test(abs_sr, fit.fitted)}
    for name, col in model.regressor_columns(fit.spec, frame).items():
        if np.ptp(col) == 0.0:
            continue
        spearman[name] = spearman_test(abs_sr, col)

    dates = frame.dates[idx]
    step = np.diff(dates) == np.timedelta64(1, "D")
    lag1 = pearson_test(fit.std_residuals[:-1][step], fit.std_residuals[1:][step])
    ks = ks_normal(fit.residuals)
    return ResidualDiagnostics(
        spearman=spearman,
        lag1=lag1,
        ks_normality=ks,
        heteroscedastic=any(res.pvalue < alpha for res in spearman.values()),
        autocorrelated=lag1.pvalue < alpha,
        alpha=alpha,
    )


def _clean(value):
    value = float(value)
    return value if math.isfinite(value) else None


def diagnostics_report(curvature, bias, residuals):
    """JSON-ready dict combining the three diagnostic blocks.

    Curvature and bias values appear raw and rounded to 5 decimals; nan
    percent-bias markers become null.
    """
    return {
        "curvature": {
            "rho_k_n": curvature.rho_k_n,
            "rho_k_p": curvature.rho_k_p,
            "rho_k_n_rounded": round(curvature.rho_k_n, 5),
            "rho_k_p_rounded": round(curvature.rho_k_p, 5),
            "critical": curvature.critical,
            "thresholds": list(curvature.thresholds),
            "planar_ok": curvature.planar_ok,
            "uniform_ok": curvature.uniform_ok,
            "alpha": curvature.alpha,
        },
        "box_bias": {
            "bias": [float(v) for v in bias.bias],
            "bias_rounded": [round(float(v), 5) for v in bias.bias],
            "percent_bias": [_clean(v) for v in bias.percent_bias],
        },
        "residuals": {
            "spearman": {
                name: {"rho": res.statistic, "p": res.pvalue}
                for name, res in residuals.spearman.items()
            },
            "lag1": {"r": residuals.lag1.statistic, "p": residuals.lag1.pvalue},
            "ks_normality": {
                "D": residuals.ks_normality.statistic,
                "p": residuals.ks_normality.pvalue,
            },
            "heteroscedastic": residuals.heteroscedastic,
            "autocorrelated": residuals.autocorrelated,
            "alpha": residuals.alpha,
        },
    }
