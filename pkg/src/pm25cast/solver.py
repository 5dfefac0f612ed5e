"""Gauss-Newton least squares over the model families."""

import csv
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import solve_triangular

from . import model
from .numerics import qr_full


class TraceStep(NamedTuple):
    theta: np.ndarray
    rss: float


@dataclass(frozen=True)
class FitResult:
    """Converged or best-effort fit state.

    `trace` holds one TraceStep per accepted step, starting with the
    initial point, so rss values along it are non-increasing. `rss`
    and residuals are on the model scale (lpm units for the built-in
    families).
    """

    spec: model.ModelSpec
    theta: np.ndarray
    rss: float
    sigma_hat: float
    fitted: np.ndarray
    residuals: np.ndarray
    std_residuals: np.ndarray
    trace: tuple
    converged: bool
    steps: int


def gauss_newton(spec, frame, theta0=None, max_steps=50, rel_tol=1e-8, max_halvings=10):
    """Fit `spec` on `frame` by Gauss-Newton with step halving.

    Each iteration solves R1*delta = Q1'*r from a QR factorisation of the
    Jacobian (the normal matrix is never formed). A full step that fails
    to decrease the RSS is halved up to `max_halvings` times; exhausting
    the halving budget ends the fit unconverged. Convergence is declared
    when an accepted step changes the RSS by less than `rel_tol` relative.

    Returns a FitResult; non-convergence is reported through the
    `converged` flag, not an exception. Rank deficiency of the Jacobian
    raises RankDeficiencyError.
    """
    y = model.response(spec, frame)
    n, q = y.size, spec.q
    if n <= q:
        raise ValueError(f"need more observations than parameters (n={n}, q={q})")
    theta = np.array(model.default_start(spec) if theta0 is None else theta0, dtype=float)
    if theta.shape != (q,):
        raise ValueError(f"theta0 must have length {q}")

    fitted = model.eval_f(spec, theta, frame)
    resid = y - fitted
    rss = float(resid @ resid)
    trace = [TraceStep(theta.copy(), rss)]
    converged = False

    for _ in range(max_steps):
        v1 = model.jacobian(spec, theta, frame)
        q_mat, r1 = qr_full(v1)
        delta = solve_triangular(r1, q_mat[:, :q].T @ resid)

        scale = 1.0
        accepted = False
        for _ in range(max_halvings + 1):
            theta_try = theta + scale * delta
            fitted_try = model.eval_f(spec, theta_try, frame)
            resid_try = y - fitted_try
            rss_try = float(resid_try @ resid_try)
            if np.isfinite(rss_try) and rss_try <= rss:
                accepted = True
                break
            scale *= 0.5
        if not accepted:
            break

        rss_prev = rss
        theta, fitted, resid, rss = theta_try, fitted_try, resid_try, rss_try
        trace.append(TraceStep(theta.copy(), rss))
        if rss_prev - rss <= rel_tol * rss_prev:
            converged = True
            break

    sigma_hat = float(np.sqrt(rss / (n - q)))
    std_resid = resid / sigma_hat if sigma_hat > 0 else np.zeros_like(resid)
    return FitResult(
        spec=spec,
        theta=theta,
        rss=rss,
        sigma_hat=sigma_hat,
        fitted=fitted,
        residuals=resid,
        std_residuals=std_resid,
        trace=tuple(trace),
        converged=converged,
        steps=len(trace) - 1,
    )


def standardize_residuals(fit):
    """Residuals scaled by sigma_hat (no leverage correction)."""
    n, q = fit.residuals.size, fit.spec.q
    if n <= q:
        raise ValueError(f"no residual degrees of freedom (n={n}, q={q})")
    if fit.sigma_hat == 0.0:
        return np.zeros_like(fit.residuals)
    return fit.residuals / fit.sigma_hat


def write_trace_csv(fit, path):
    """Iteration trace as `step,theta1..thetaq,rss`."""
    q = fit.spec.q
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step"] + [f"theta{j + 1}" for j in range(q)] + ["rss"])
        for step, (theta, rss) in enumerate(fit.trace):
            writer.writerow([step] + [repr(float(v)) for v in theta] + [repr(float(rss))])
