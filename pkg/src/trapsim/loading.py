"""Error-function model of loading probability versus beam power.

    eta(P) = eta0 * (erf(alpha (P - P_half)) + 1) / 2

eta0 is the saturation probability (typically near 0.5 under collision
blockade), P_half the power at which eta reaches eta0/2, and alpha sets the
transition width (roughly 1/alpha in power units).

Fitting uses a coarse (P_half, alpha) grid with the optimal eta0 solved in
closed form at each node, then damped Gauss-Newton refinement of all three
parameters. Note that alpha is only identifiable when data points actually
land inside the ~1/alpha-wide transition window; sampling that straddles the
transition without resolving it pins P_half but leaves alpha degenerate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erf

_SQRT_PI = float(np.sqrt(np.pi))


class TransitionNotIdentifiableError(ArithmeticError):
    """The data contain no usable transition (e.g. all equal probabilities)."""


@dataclass(frozen=True)
class LoadingModelParams:
    eta0: float
    alpha_per_mw: float
    p_half_mw: float

    def __post_init__(self):
        if not 0.0 <= self.eta0 <= 1.0:
            raise ValueError(f"eta0 must be in [0, 1], got {self.eta0}")
        if self.alpha_per_mw <= 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha_per_mw}")
        if self.p_half_mw <= 0:
            raise ValueError(f"P_half must be > 0, got {self.p_half_mw}")


@dataclass(frozen=True)
class LoadingCurvePoint:
    power_mw: float
    probability: float
    stderr: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError(f"probability must be in [0, 1], got {self.probability}")


@dataclass(frozen=True)
class LoadingFitResult:
    params: LoadingModelParams
    rms_residual: float


def loading_probability(power_mw, params: LoadingModelParams):
    """Loading probability at the given power(s); in [0, eta0], increasing."""
    p = np.asarray(power_mw, dtype=float)
    eta = params.eta0 * (erf(params.alpha_per_mw * (p - params.p_half_mw)) + 1.0) / 2.0
    return eta if eta.ndim else float(eta)


def _model(powers, eta0, alpha, p_half):
    return eta0 * (erf(alpha * (powers - p_half)) + 1.0) / 2.0


def _best_eta0(b, y, w):
    denom = float(w @ (b * b))
    if denom <= 0.0:
        return 0.0
    return float(np.clip((w @ (b * y)) / denom, 0.0, 1.0))


def fit_loading_curve(points) -> LoadingFitResult:
    """Weighted least-squares fit of (eta0, alpha, P_half) to curve data.

    Weights are 1/stderr^2 when every point carries a positive standard
    error, uniform otherwise. Raises TransitionNotIdentifiableError when all
    probabilities are equal; poor (e.g. non-monotone) data still fit but
    show up as a large rms residual.
    """
    points = list(points)
    if len(points) < 4:
        raise ValueError(f"need at least 4 points, got {len(points)}")
    order = np.argsort([p.power_mw for p in points])
    powers = np.array([points[i].power_mw for i in order], dtype=float)
    y = np.array([points[i].probability for i in order], dtype=float)
    errs = [points[i].stderr for i in order]
    if all(e is not None and e > 0 for e in errs):
        w = 1.0 / np.array(errs, dtype=float) ** 2
    else:
        w = np.ones_like(y)
    if np.ptp(y) == 0.0:
        raise TransitionNotIdentifiableError(
            "all probabilities are equal; the transition power is not identifiable"
        )

    # coarse grid: P_half at midpoints of consecutive distinct powers,
    # alpha on a log grid spanning very soft to very sharp transitions
    distinct = np.unique(powers)
    if len(distinct) > 1:
        p_half_grid = (distinct[:-1] + distinct[1:]) / 2.0
    else:
        p_half_grid = distinct
    alpha_grid = np.geomspace(1e-2, 1e5, 57)
    best = None
    for p_half in p_half_grid:
        for alpha in alpha_grid:
            b = (erf(alpha * (powers - p_half)) + 1.0) / 2.0
            eta0 = _best_eta0(b, y, w)
            sse = float(w @ (y - eta0 * b) ** 2)
            if best is None or sse < best[0]:
                best = (sse, eta0, alpha, p_half)
    sse, eta0, alpha, p_half = best

    # damped Gauss-Newton refinement
    sw = np.sqrt(w)
    damping = 1e-12
    for _ in range(200):
        b = (erf(alpha * (powers - p_half)) + 1.0) / 2.0
        resid = sw * (y - eta0 * b)
        sse = float(resid @ resid)
        gauss = np.exp(-((alpha * (powers - p_half)) ** 2)) / _SQRT_PI
        jac = np.column_stack(
            [
                -sw * b,
                -sw * eta0 * (powers - p_half) * gauss,
                sw * eta0 * alpha * gauss,
            ]
        )
        jtj = jac.T @ jac
        jtr = jac.T @ resid
        step_ok = False
        for _ in range(25):
            try:
                delta = np.linalg.solve(jtj + damping * np.eye(3), -jtr)
            except np.linalg.LinAlgError:
                damping *= 10.0
                continue
            eta0_new = float(np.clip(eta0 + delta[0], 0.0, 1.0))
            alpha_new = max(alpha + delta[1], 1e-12)
            p_half_new = max(p_half + delta[2], 1e-12)
            b_new = (erf(alpha_new * (powers - p_half_new)) + 1.0) / 2.0
            sse_new = float(w @ (y - eta0_new * b_new) ** 2)
            if sse_new <= sse:
                step_ok = True
                break
            damping *= 10.0
        if not step_ok:
            break
        moved = abs(sse - sse_new)
        eta0, alpha, p_half = eta0_new, alpha_new, p_half_new
        damping = max(damping / 10.0, 1e-12)
        if moved < 1e-16 * max(sse, 1e-30):
            break

    params = LoadingModelParams(
        eta0=eta0, alpha_per_mw=float(alpha), p_half_mw=float(p_half)
    )
    resid = y - loading_probability(powers, params)
    return LoadingFitResult(
        params=params, rms_residual=float(np.sqrt(np.mean(resid**2)))
    )
