"""Damped least-squares fitting of the named model families.

A small Levenberg-style fitter dimensioned for the handful of low-parameter
models in :func:`strobosqueeze.analytic.fit_models`: Jacobians by central
finite differences (relative step 1e-6), damping ``lambda I`` started at
``1e-3 max diag(J^T J)`` and scaled by 10 on reject/accept, bounds honored
by projection.  Sums over data points (J^T J, J^T r, and the residual sum
of squares) are accumulated with exact compensated summation so the result
does not depend on the ordering of the data points.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .analytic import fit_models

__all__ = [
    "FitProblem",
    "FitResult",
    "SingularJacobianError",
    "fit",
]

_JACOBIAN_REL_STEP = 1e-6
_LAMBDA_UP = 10.0
_LAMBDA_DOWN = 10.0
_LAMBDA_MAX = 1e15
_GRAD_TOL = 1e-14  # gradient scale below which the fit is declared stationary


class SingularJacobianError(RuntimeError):
    """Jacobian contains non-finite entries; the model cannot be linearized."""


@dataclass(frozen=True)
class FitProblem:
    """Data, model choice, and starting point for one fit.

    ``weights`` are inverse-variance weights (all ones when omitted);
    ``bounds`` is an optional per-parameter sequence of ``(lo, hi)`` pairs
    (``None`` entries leave a side open).  ``sideband`` is forwarded to
    the model evaluation (only the sideband_ab family uses it).
    """

    model_id: str
    abscissa: np.ndarray
    ordinate: np.ndarray
    initial_guess: tuple
    weights: np.ndarray | None = None
    bounds: tuple | None = None
    sideband: int = 0

    def __post_init__(self):
        x = np.asarray(self.abscissa, dtype=float)
        y = np.asarray(self.ordinate, dtype=float)
        object.__setattr__(self, "abscissa", x)
        object.__setattr__(self, "ordinate", y)
        if x.shape != y.shape or x.ndim != 1:
            raise ValueError("abscissa and ordinate must be 1-d arrays of equal length")
        p = len(self.initial_guess)
        if len(x) < p + 1:
            raise ValueError(f"need at least {p + 1} points to fit {p} parameters")
        if not np.all(np.isfinite(self.initial_guess)):
            raise ValueError("initial guess must be finite")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            object.__setattr__(self, "weights", w)
            if w.shape != x.shape:
                raise ValueError("weights must match the data length")
            if np.any(w < 0.0):
                raise ValueError("weights must be >= 0")
        if self.bounds is not None and len(self.bounds) != p:
            raise ValueError("bounds must give one (lo, hi) pair per parameter")


@dataclass(frozen=True)
class FitResult:
    """Fitted parameters with a covariance estimate and bookkeeping."""

    parameters: tuple
    covariance: np.ndarray
    rss: float
    converged: bool
    iterations: int


def _fsum_dot(a, b):
    """Exactly rounded dot product; invariant under data permutations."""
    return math.fsum(map(float, a * b))


def _normal_equations(jac, res, weights):
    """Weighted ``J^T J``, ``J^T r`` and RSS with order-independent sums."""
    m, p = jac.shape
    jtj = np.empty((p, p))
    jtr = np.empty(p)
    wj = jac * weights[:, None]
    for i in range(p):
        jtr[i] = _fsum_dot(wj[:, i], res)
        for j in range(i, p):
            jtj[i, j] = jtj[j, i] = _fsum_dot(wj[:, i], jac[:, j])
    rss = math.fsum(float(w * r * r) for w, r in zip(weights, res))
    return jtj, jtr, rss


def _project(p, bounds):
    if bounds is None:
        return p
    out = np.array(p, dtype=float)
    for i, pair in enumerate(bounds):
        if pair is None:
            continue
        lo, hi = pair
        if lo is not None:
            out[i] = max(out[i], lo)
        if hi is not None:
            out[i] = min(out[i], hi)
    return out


def fit(problem: FitProblem, tol=1e-10, max_iter=200) -> FitResult:
    """Levenberg-damped least squares over one model family.

    Iterates ``(J^T W J + lambda I) step = -J^T W r`` with the damping
    divided by 10 on accepted steps and multiplied by 10 on rejections;
    trial parameters are projected onto the bounds before evaluation.
    Convergence is declared when an accepted step reduces the RSS by less
    than ``tol`` relative, when the RSS hits zero, or when the gradient
    vanishes (already at a stationary point).  Exceeding ``max_iter``
    returns the best parameters found with ``converged = False``.

    Raises
    ------
    SingularJacobianError
        If the Jacobian evaluates to non-finite values at the current
        point (the model cannot be linearized there).
    """
    if tol <= 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    x = problem.abscissa
    y = problem.ordinate
    weights = (
        np.ones_like(x) if problem.weights is None else problem.weights
    )

    def model(p):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return np.asarray(
                fit_models(problem.model_id, p, x, sideband=problem.sideband), dtype=float
            )

    def residual(p):
        return model(p) - y

    def jacobian(p):
        p = np.asarray(p, dtype=float)
        cols = []
        for i in range(len(p)):
            h = _JACOBIAN_REL_STEP * max(abs(p[i]), 1.0)
            forward = p.copy()
            backward = p.copy()
            forward[i] += h
            backward[i] -= h
            cols.append((model(forward) - model(backward)) / (2.0 * h))
        jac = np.stack(cols, axis=1)
        if not np.all(np.isfinite(jac)):
            raise SingularJacobianError(
                f"non-finite Jacobian for model {problem.model_id} at {tuple(p)}"
            )
        return jac

    params = _project(np.asarray(problem.initial_guess, dtype=float), problem.bounds)
    res = residual(params)
    if not np.all(np.isfinite(res)):
        raise ValueError("initial guess gives a non-finite residual")
    rss = math.fsum(float(w * r * r) for w, r in zip(weights, res))

    lam = None
    converged = False
    iterations = 0
    jtj = jtr = None
    for iterations in range(1, max_iter + 1):
        jac = jacobian(params)
        jtj, jtr, rss = _normal_equations(jac, res, weights)
        grad_scale = float(np.max(np.abs(jtr)))
        if grad_scale <= _GRAD_TOL * max(1.0, rss):
            converged = True
            break
        if lam is None:
            lam = 1e-3 * float(np.max(np.diag(jtj)))
            if lam <= 0.0:
                lam = 1e-3
        accepted = False
        while lam <= _LAMBDA_MAX:
            try:
                step = np.linalg.solve(jtj + lam * np.eye(len(params)), -jtr)
            except np.linalg.LinAlgError:
                lam *= _LAMBDA_UP
                continue
            trial = _project(params + step, problem.bounds)
            trial_res = residual(trial)
            if np.all(np.isfinite(trial_res)):
                trial_rss = math.fsum(float(w * r * r) for w, r in zip(weights, trial_res))
            else:
                trial_rss = math.inf
            if math.isfinite(trial_rss) and trial_rss < rss:
                accepted = True
                lam = max(lam / _LAMBDA_DOWN, 1e-300)
                improvement = (rss - trial_rss) / max(rss, 1e-300)
                params, res = trial, trial_res
                if improvement < tol or trial_rss == 0.0:
                    converged = True
                    rss = trial_rss
                break
            lam *= _LAMBDA_UP
        if not accepted:
            # no downhill step exists at any damping: stationary point
            converged = True
            break
        if converged:
            break

    jac = jacobian(params)
    jtj, jtr, rss = _normal_equations(jac, res, weights)
    covariance = _parameter_covariance(jtj, rss, len(x), len(params))
    return FitResult(
        parameters=tuple(float(v) for v in params),
        covariance=covariance,
        rss=rss,
        converged=converged,
        iterations=iterations,
    )


def _parameter_covariance(jtj, rss, n_points, n_params):
    dof = n_points - n_params
    scale = rss / dof if dof > 0 else float("nan")
    try:
        inv = np.linalg.pinv(jtj)
    except np.linalg.LinAlgError:
        inv = np.full_like(jtj, float("nan"))
    cov = scale * inv
    return 0.5 * (cov + cov.T)
