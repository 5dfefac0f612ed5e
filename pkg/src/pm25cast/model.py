"""Expectation-function families: f, analytic Jacobian and Hessian faces.

Families
--------
initial            f = th1*exp(-th2/trg) + th3*w + th4*t + th5*pc + th6*ep
with-id            initial + th7*id
iterated           response lpm_t - rho*lpm_{t-1}; every regressor (incl.
                   the exponential term) differenced by a fixed rho
iterated-free-rho  rho promoted to parameter th8; the rho*lpm_{t-1} term
                   moves into f so the response stays lpm_t
linear             f = th1 + th2*t, a two-parameter test family whose
                   second-derivative array is identically zero

Iterated families are evaluated on lag pairs: consecutive frame rows whose
dates are exactly one day apart.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DataError

FAMILIES = ("initial", "with-id", "iterated", "iterated-free-rho", "linear")

_Q = {"initial": 6, "with-id": 7, "iterated": 7, "iterated-free-rho": 8, "linear": 2}


@dataclass(frozen=True)
class ModelSpec:
    """Family selector; `rho` is required by (and only by) `iterated`."""

    family: str
    rho: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.family == "iterated":
            if self.rho is None or not np.isfinite(self.rho):
                raise ValueError("iterated family needs a finite rho")
        elif self.rho is not None:
            raise ValueError(f"family {self.family!r} takes no rho")

    @property
    def q(self):
        return _Q[self.family]


def default_start(spec):
    """Conventional starting vector: th1=40, th2=1, linear terms 0, id 1."""
    starts = {
        "initial": (40.0, 1.0, 0.0, 0.0, 0.0, 0.0),
        "with-id": (40.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0),
        "iterated": (40.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0),
        "iterated-free-rho": (40.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.5),
        "linear": (0.0, 0.0),
    }
    return np.array(starts[spec.family])


def _check_theta(spec, theta):
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (spec.q,):
        raise ValueError(f"theta must have length {spec.q}, got {theta.shape}")
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta must be finite")
    return theta


def _pairs(frame):
    prev, curr = frame.lag_pairs()
    if prev.size == 0:
        raise DataError("no valid lag pairs (need consecutive-day rows)")
    return prev, curr


def _check_trg(frame, idx):
    bad = idx[frame.trg[idx] == 0.0]
    if bad.size:
        raise DataError(f"trg = 0 on {frame.dates[bad[0]]}")


def rows_used(spec, frame):
    """Frame row indices the model's observations correspond to."""
    if spec.family in ("iterated", "iterated-free-rho"):
        return _pairs(frame)[1]
    return np.arange(frame.n)


def response(spec, frame):
    """Observation vector the residuals are taken against."""
    if spec.family == "iterated":
        prev, curr = _pairs(frame)
        return frame.lpm[curr] - spec.rho * frame.lpm[prev]
    if spec.family == "iterated-free-rho":
        return frame.lpm[_pairs(frame)[1]]
    return frame.lpm.copy()


def regressor_columns(spec, frame):
    """Raw (undifferenced) regressor columns on the used rows, for screens."""
    idx = rows_used(spec, frame)
    if spec.family == "linear":
        return {"t": frame.t[idx]}
    cols = {name: getattr(frame, name)[idx] for name in ("trg", "t", "w", "pc", "ep")}
    if spec.family != "initial":
        cols["id"] = frame.id[idx]
    return cols


def _linear_matrix(spec, frame, idx):
    # regressor columns paired with th3..; id only for 7+-parameter families
    names = ["w", "t", "pc", "ep"]
    if spec.family != "initial":
        names.append("id")
    return np.column_stack([getattr(frame, name)[idx] for name in names])


def eval_f(spec, theta, frame):
    """Expectation function at theta, one value per used observation."""
    theta = _check_theta(spec, theta)
    if spec.family == "linear":
        return theta[0] + theta[1] * frame.t

    if spec.family in ("initial", "with-id"):
        idx = np.arange(frame.n)
        _check_trg(frame, idx)
        expo = np.exp(-theta[1] / frame.trg)
        return theta[0] * expo + _linear_matrix(spec, frame, idx) @ theta[2:]

    prev, curr = _pairs(frame)
    _check_trg(frame, prev)
    _check_trg(frame, curr)
    rho = spec.rho if spec.family == "iterated" else theta[7]
    e_prev = np.exp(-theta[1] / frame.trg[prev])
    e_curr = np.exp(-theta[1] / frame.trg[curr])
    lin = _linear_matrix(spec, frame, curr) - rho * _linear_matrix(spec, frame, prev)
    f = theta[0] * (e_curr - rho * e_prev) + lin @ theta[2:7]
    if spec.family == "iterated-free-rho":
        f = f + rho * frame.lpm[prev]
    return f


def jacobian(spec, theta, frame):
    """Analytic first-derivative matrix, one row per used observation."""
    theta = _check_theta(spec, theta)
    if spec.family == "linear":
        return np.column_stack([np.ones(frame.n), frame.t])

    if spec.family in ("initial", "with-id"):
        idx = np.arange(frame.n)
        _check_trg(frame, idx)
        expo = np.exp(-theta[1] / frame.trg)
        return np.column_stack(
            [expo, -theta[0] * expo / frame.trg, _linear_matrix(spec, frame, idx)]
        )

    prev, curr = _pairs(frame)
    _check_trg(frame, prev)
    _check_trg(frame, curr)
    rho = spec.rho if spec.family == "iterated" else theta[7]
    e_prev = np.exp(-theta[1] / frame.trg[prev])
    e_curr = np.exp(-theta[1] / frame.trg[curr])
    d1 = e_curr - rho * e_prev
    d2 = -theta[0] * (e_curr / frame.trg[curr] - rho * e_prev / frame.trg[prev])
    lin = _linear_matrix(spec, frame, curr) - rho * _linear_matrix(spec, frame, prev)
    cols = [d1, d2, lin]
    if spec.family == "iterated-free-rho":
        prev_terms = (
            theta[0] * e_prev + _linear_matrix(spec, frame, prev) @ theta[2:7]
        )
        cols.append(frame.lpm[prev] - prev_terms)
    return np.column_stack(cols)


def structural_rss(theta, frame):
    """Residual sum of squares of the undifferenced equation over all rows.

    Iterated-family estimates keep the structural meaning of the with-id
    equation, so plugging them (first 7 entries for the free-rho family)
    into that equation on the observation scale gives a comparable RSS
    across families.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.size == 8:
        theta = theta[:7]
    if theta.size == 7:
        spec = ModelSpec("with-id")
    elif theta.size == 6:
        spec = ModelSpec("initial")
    else:
        raise ValueError(f"no structural form for a {theta.size}-parameter vector")
    resid = frame.lpm - eval_f(spec, theta, frame)
    return float(resid @ resid)


def hessian_cube(spec, theta, frame):
    """Per-observation symmetric second-derivative faces, shape (n, q, q).

    Only the (th1, th2), (th2, th2) and, for the free-rho family, the rho
    row/column entries are ever nonzero.
    """
    theta = _check_theta(spec, theta)
    q = spec.q
    if spec.family == "linear":
        return np.zeros((frame.n, q, q))

    if spec.family in ("initial", "with-id"):
        idx = np.arange(frame.n)
        _check_trg(frame, idx)
        expo = np.exp(-theta[1] / frame.trg)
        cube = np.zeros((frame.n, q, q))
        h12 = -expo / frame.trg
        cube[:, 0, 1] = h12
        cube[:, 1, 0] = h12
        cube[:, 1, 1] = theta[0] * expo / frame.trg**2
        return cube

    prev, curr = _pairs(frame)
    _check_trg(frame, prev)
    _check_trg(frame, curr)
    rho = spec.rho if spec.family == "iterated" else theta[7]
    e_prev = np.exp(-theta[1] / frame.trg[prev])
    e_curr = np.exp(-theta[1] / frame.trg[curr])
    cube = np.zeros((prev.size, q, q))
    h12 = -(e_curr / frame.trg[curr] - rho * e_prev / frame.trg[prev])
    cube[:, 0, 1] = h12
    cube[:, 1, 0] = h12
    cube[:, 1, 1] = theta[0] * (
        e_curr / frame.trg[curr] ** 2 - rho * e_prev / frame.trg[prev] ** 2
    )
    if spec.family == "iterated-free-rho":
        cube[:, 0, 7] = -e_prev
        cube[:, 7, 0] = -e_prev
        h28 = theta[0] * e_prev / frame.trg[prev]
        cube[:, 1, 7] = h28
        cube[:, 7, 1] = h28
        lin_prev = _linear_matrix(spec, frame, prev)
        for j in range(5):
            cube[:, 2 + j, 7] = -lin_prev[:, j]
            cube[:, 7, 2 + j] = -lin_prev[:, j]
    return cube
