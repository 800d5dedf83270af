"""Vectorised fixed-step rollouts of straight-line DMPs with avoidance coupling.

Many systems (one per parameter triple) share a start, goal and set of
ellipsoidal obstacles and are integrated in lock-step with explicit Euler.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..coupling import batch_oa
from ..dmp import ALPHA_K, ALPHA_X, BETA_X, DEFAULT_DT
from ..geometry.ellipsoid import Ellipsoid

PHASE_END = 0.01
SETTLE = 0.5


def episode_steps(tau: float, dt: float = DEFAULT_DT, alpha_k: float = ALPHA_K,
                  phase_end: float = PHASE_END, settle: float = SETTLE) -> tuple[int, int]:
    """Steps until the Euler phase drops below ``phase_end``, plus the settling steps."""
    decay = 1.0 - alpha_k * dt / tau
    if not 0.0 < decay < 1.0:
        raise ValueError("dt too large for the canonical system")
    n_phase = int(np.floor(np.log(phase_end) / np.log(decay))) + 1
    # guard against floating point round-off in the closed form
    k = decay ** n_phase
    while k >= phase_end:
        n_phase += 1
        k *= decay
    return n_phase, int(round(settle * tau / dt))


@dataclass
class BatchResult:
    clearance: np.ndarray  # min signed distance to any obstacle surface
    collided: np.ndarray
    final: np.ndarray
    convergence: np.ndarray
    path: np.ndarray | None = None


def rollout_batch_reference(start, goal, obstacles: list[Ellipsoid], alpha, psi, kappa,
                  tau: float = 1.0, dt: float = DEFAULT_DT, keep_path: bool = False,
                  alpha_x: float = ALPHA_X, beta_x: float = BETA_X,
                  alpha_k: float = ALPHA_K) -> BatchResult:
    """Pure numpy version of ``rollout_batch`` (slow; kept as a cross-check)."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    psi = np.atleast_1d(np.asarray(psi, dtype=float))
    kappa = np.atleast_1d(np.asarray(kappa, dtype=float))
    B = np.broadcast(alpha, psi, kappa).shape[0]
    alpha, psi, kappa = (np.broadcast_to(a, (B,)) for a in (alpha, psi, kappa))
    g = np.asarray(goal, dtype=float)
    x = np.tile(np.asarray(start, dtype=float), (B, 1))
    z = np.zeros_like(x)
    n_phase, n_settle = episode_steps(tau, dt, alpha_k)
    n = n_phase + n_settle
    clearance = np.full(B, np.inf)
    collided = np.zeros(B, dtype=bool)
    path = np.empty((n + 1, B, 3)) if keep_path else None

    def record(i, x):
        nonlocal clearance, collided
        for ob in obstacles:
            clearance = np.minimum(clearance, ob.signed_distance(x))
            collided |= ob.inside_value(x) <= 1.0
        if keep_path:
            path[i] = x

    record(0, x)
    h = dt / tau
    for i in range(n):
        v = z / tau
        c = np.zeros_like(x)
        for ob in obstacles:
            d = np.maximum(ob.signed_distance(x), 0.0)
            c += batch_oa(ob.center - x, v, d, alpha, psi, kappa)
        zdot = alpha_x * (beta_x * (g - x) - z) + c
        x = x + h * z
        z = z + h * zdot
        if not np.all(np.isfinite(x)):
            bad = ~np.all(np.isfinite(x), axis=1)
            x[bad] = np.nan
            z[bad] = np.nan
        record(i + 1, x)
    conv = np.linalg.norm(x - g, axis=1)
    nan = ~np.isfinite(conv)
    collided |= nan
    clearance[nan] = -np.inf
    return BatchResult(clearance, collided, x, conv, path)


def _pack(obstacles: list[Ellipsoid]):
    centers = np.array([ob.center for ob in obstacles], dtype=float).reshape(-1, 3)
    axes = np.array([ob.semi_axes for ob in obstacles], dtype=float).reshape(-1, 3)
    rots = np.array([ob.rotation for ob in obstacles], dtype=float).reshape(-1, 3, 3)
    return centers, axes, rots


def rollout_batch(start, goal, obstacles: list[Ellipsoid], alpha, psi, kappa,
                  tau: float = 1.0, dt: float = DEFAULT_DT, keep_path: bool = False,
                  alpha_x: float = ALPHA_X, beta_x: float = BETA_X,
                  alpha_k: float = ALPHA_K, settle: float = SETTLE) -> BatchResult:
    """Integrate one unforced DMP per parameter triple, with the same coupling
    parameters applied to every obstacle. Coordinates are local-frame.

    Each run lasts until the phase falls below 0.01 plus a ``settle * tau``
    margin (0.5 tau by default). Clearance is the minimum signed surface distance over all
    visited states; a state with ``F <= 1`` marks a collision.
    """
    from ._kernel import rollout_kernel

    params = np.column_stack(np.broadcast_arrays(
        np.atleast_1d(np.asarray(alpha, dtype=float)),
        np.atleast_1d(np.asarray(psi, dtype=float)),
        np.atleast_1d(np.asarray(kappa, dtype=float)),
    ))
    n_phase, n_settle = episode_steps(tau, dt, alpha_k, settle=settle)
    n = n_phase + n_settle
    B = params.shape[0]
    path = np.empty((n + 1, B, 3)) if keep_path else np.empty((0, 0, 3))
    centers, axes, rots = _pack(obstacles)
    g = np.asarray(goal, dtype=float)
    clearance, collided, final = rollout_kernel(
        np.asarray(start, dtype=float), g, centers, axes, rots, params,
        float(tau), float(dt), n, float(alpha_x), float(beta_x), path)
    conv = np.linalg.norm(final - g, axis=1)
    return BatchResult(clearance, collided, final, conv, path if keep_path else None)
