"""Levenberg-Marquardt for small dense least-squares problems.

Used both for superquadric recovery (numerical Jacobian, box bounds) and for
training the chain regressors (analytic Jacobian).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass
class LMResult:
    x: np.ndarray
    cost: float  # 0.5 * sum(r**2)
    initial_cost: float
    n_iter: int
    converged: bool
    message: str


def numerical_jacobian(fun: Callable, x: np.ndarray, r0: np.ndarray | None = None,
                       rel_step: float = 1e-7) -> np.ndarray:
    """Forward-difference Jacobian of a residual function."""
    r0 = fun(x) if r0 is None else r0
    J = np.empty((r0.size, x.size))
    for j in range(x.size):
        h = rel_step * max(1.0, abs(x[j]))
        xp = x.copy()
        xp[j] += h
        J[:, j] = (fun(xp) - r0) / h
    return J


def levenberg_marquardt(
    fun: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    jac: Callable[[np.ndarray], np.ndarray] | None = None,
    lower: np.ndarray | None = None,
    upper: np.ndarray | None = None,
    max_iter: int = 200,
    mu0: float = 1e-3,
    mu_max: float = 1e10,
    ftol: float = 1e-12,
    xtol: float = 1e-12,
    callback: Callable[[int, np.ndarray, float], bool | None] | None = None,
) -> LMResult:
    """Minimise ``0.5 * ||fun(x)||^2``.

    Steps solve ``(J^T J + mu * diag(J^T J)) dx = -J^T r``; rejected steps
    raise the damping, accepted ones lower it. Bounds are enforced by
    projection. If the damping exceeds ``mu_max`` the best point so far is
    returned with ``converged=False``. A callback returning True ends the
    run early (reported as converged).
    """
    x = np.asarray(x0, dtype=float).copy()
    lo = None if lower is None else np.asarray(lower, dtype=float)
    hi = None if upper is None else np.asarray(upper, dtype=float)

    def project(v):
        if lo is not None:
            v = np.maximum(v, lo)
        if hi is not None:
            v = np.minimum(v, hi)
        return v

    x = project(x)
    r = fun(x)
    cost = 0.5 * float(r @ r)
    initial_cost = cost
    mu = mu0
    nu = 2.0
    message = "max iterations reached"
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        J = jac(x) if jac is not None else numerical_jacobian(fun, x, r)
        g = J.T @ r
        A = J.T @ J
        diag = np.maximum(np.diag(A), 1e-12)
        accepted = False
        while mu <= mu_max:
            try:
                dx = np.linalg.solve(A + mu * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                mu *= nu
                nu *= 2.0
                continue
            x_new = project(x + dx)
            r_new = fun(x_new)
            cost_new = 0.5 * float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new < cost:
                step = np.linalg.norm(x_new - x)
                rel_drop = (cost - cost_new) / max(cost, 1e-300)
                x, r, cost = x_new, r_new, cost_new
                mu = max(mu / 3.0, 1e-15)
                nu = 2.0
                accepted = True
                break
            mu *= nu
            nu *= 2.0
        stop = callback is not None and bool(callback(it, x, cost))
        if not accepted:
            message = "damping ceiling reached"
            converged = cost < initial_cost or cost == 0.0
            break
        if cost == 0.0 or rel_drop < ftol or step < xtol * (np.linalg.norm(x) + xtol):
            message = "converged"
            converged = True
            break
        if stop:
            message = "stopped by callback"
            converged = True
            break
    return LMResult(x, cost, initial_cost, it, converged, message)
