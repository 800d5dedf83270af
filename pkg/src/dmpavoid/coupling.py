"""Obstacle-avoidance and heading-guidance coupling terms.

Every term rotates the current velocity by pi/2 inside the plane spanned by
the velocity and a reference direction, so the resulting force is always
orthogonal to the velocity. Functions prefixed with ``batch_`` operate on
stacked ``(..., 3)`` arrays and are used by the simulators; the remaining
functions are the scalar API with input validation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

EPS_AXIS = 1e-9
Z_AXIS = np.array([0.0, 0.0, 1.0])
Y_AXIS = np.array([0.0, 1.0, 0.0])

ORIGINAL_GAMMA = 1000.0
ORIGINAL_BETA = 20.0 / math.pi


class DegenerateGeometryError(ValueError):
    """Zero velocity or coincident system/obstacle positions."""


@dataclass(frozen=True)
class AvoidanceParams:
    alpha: float
    psi: float
    kappa: float
    gamma: float = ORIGINAL_GAMMA
    beta: float = ORIGINAL_BETA

    def __post_init__(self):
        for name in ("alpha", "psi", "kappa", "gamma", "beta"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class SystemKinematics:
    x: np.ndarray
    xdot: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        v = np.asarray(self.xdot, dtype=float)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
            raise ValueError("kinematics must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xdot", v)


@dataclass(frozen=True)
class GuidanceTarget:
    xdot_d: np.ndarray
    active: bool = True

    def __post_init__(self):
        v = np.asarray(self.xdot_d, dtype=float)
        if self.active and abs(np.linalg.norm(v) - 1.0) > 1e-9:
            raise ValueError("desired heading must be a unit vector")
        object.__setattr__(self, "xdot_d", v)


def _norm(a: np.ndarray) -> np.ndarray:
    return np.sqrt(np.einsum("...i,...i->...", a, a))


def batch_angle(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Angle in [0, pi] between stacked vectors, robust near 0 and pi."""
    cross = _norm(np.cross(a, b))
    dot = np.einsum("...i,...i->...", a, b)
    return np.arctan2(cross, dot)


def batch_axis(a: np.ndarray, b: np.ndarray, v: np.ndarray,
               z_axis: np.ndarray = Z_AXIS, y_axis: np.ndarray = Y_AXIS) -> np.ndarray:
    """Unit vector along ``a x b`` with a deterministic fallback.

    When ``a x b`` vanishes the axis ``v x z_axis`` is used, then
    ``v x y_axis``; both are orthogonal to ``v``.
    """
    r = np.cross(a, b)
    n = _norm(r)
    bad = n < EPS_AXIS * np.maximum(_norm(a) * _norm(b), 1e-300)
    if np.any(bad):
        fb = np.cross(v, z_axis)
        fn = _norm(fb)
        worse = fn < EPS_AXIS * np.maximum(_norm(v), 1e-300)
        if np.any(worse):
            fb = np.where(worse[..., None], np.cross(v, y_axis), fb)
            fn = _norm(fb)
        r = np.where(bad[..., None], fb, r)
        n = np.where(bad, fn, n)
    return r / np.maximum(n, 1e-300)[..., None]


def batch_quarter_turn(axis: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rodrigues rotation of ``v`` by pi/2 about the unit ``axis``."""
    return np.cross(axis, v) + axis * np.einsum("...i,...i->...", axis, v)[..., None]


def batch_oa(rel: np.ndarray, v: np.ndarray, d, alpha, psi, kappa,
             z_axis: np.ndarray = Z_AXIS, y_axis: np.ndarray = Y_AXIS) -> np.ndarray:
    """Dead-zone free avoidance force for obstacle offsets ``rel = x_obs - x``."""
    theta = batch_angle(v, rel)
    axis = batch_axis(rel, v, v, z_axis, y_axis)
    # sign(theta) with sign(0) = +1; theta is non-negative here
    mag = alpha * np.exp(-(theta / psi) ** 2) * np.exp(-kappa * np.asarray(d) ** 2)
    return batch_quarter_turn(axis, v) * np.asarray(mag)[..., None]


def batch_original(rel: np.ndarray, v: np.ndarray, gamma=ORIGINAL_GAMMA, beta=ORIGINAL_BETA,
                   z_axis: np.ndarray = Z_AXIS, y_axis: np.ndarray = Y_AXIS) -> np.ndarray:
    theta = batch_angle(v, rel)
    axis = batch_axis(rel, v, v, z_axis, y_axis)
    theta_dot = gamma * theta * np.exp(-beta * np.abs(theta))
    return batch_quarter_turn(axis, v) * theta_dot[..., None]


def batch_hg(v: np.ndarray, v_d: np.ndarray, d, alpha, kappa,
             z_axis: np.ndarray = Z_AXIS, y_axis: np.ndarray = Y_AXIS) -> np.ndarray:
    """Heading-guidance force turning ``v`` towards ``v_d``."""
    theta_hat = batch_angle(v, v_d)
    axis = batch_axis(v, v_d, v, z_axis, y_axis)
    mag = alpha * theta_hat * np.exp(1.0 + kappa * np.asarray(d) ** 2)
    return batch_quarter_turn(axis, v) * np.asarray(mag)[..., None]


def _checked(sys: SystemKinematics, point) -> np.ndarray:
    rel = np.asarray(point, dtype=float) - sys.x
    if np.linalg.norm(sys.xdot) <= 1e-9:
        raise DegenerateGeometryError("system velocity is zero")
    if np.linalg.norm(rel) <= 1e-12:
        raise DegenerateGeometryError("obstacle point coincides with the system")
    return rel


def heading_angle(sys: SystemKinematics, obstacle_point) -> float:
    """Angle between the velocity and the direction to the obstacle."""
    rel = _checked(sys, obstacle_point)
    return float(batch_angle(sys.xdot, rel))


def steering_rotation(sys: SystemKinematics, obstacle_point,
                      z_axis=Z_AXIS, y_axis=Y_AXIS) -> np.ndarray:
    """Quarter-turn rotation matrix about ``(x_obs - x) x xdot``."""
    rel = _checked(sys, obstacle_point)
    r = batch_axis(rel, sys.xdot, sys.xdot, z_axis, y_axis)
    K = np.array([[0.0, -r[2], r[1]], [r[2], 0.0, -r[0]], [-r[1], r[0], 0.0]])
    return np.eye(3) + K + K @ K


def coupling_original(sys: SystemKinematics, obstacle_point, gamma=ORIGINAL_GAMMA,
                      beta=ORIGINAL_BETA, return_flag: bool = False):
    """Analytic baseline term ``R xdot gamma theta exp(-beta |theta|)``.

    Degenerate geometry yields a zero force; ``return_flag`` exposes it.
    """
    try:
        rel = _checked(sys, obstacle_point)
    except DegenerateGeometryError:
        out = np.zeros(3)
        return (out, True) if return_flag else out
    out = batch_original(rel, sys.xdot, gamma, beta)
    return (out, False) if return_flag else out


def coupling_oa(sys: SystemKinematics, obstacle_point, d: float, p: AvoidanceParams,
                z_axis=Z_AXIS, y_axis=Y_AXIS, return_flag: bool = False):
    if d < 0:
        raise ValueError("distance must be non-negative")
    try:
        rel = _checked(sys, obstacle_point)
    except DegenerateGeometryError:
        out = np.zeros(3)
        return (out, True) if return_flag else out
    out = batch_oa(rel, sys.xdot, d, p.alpha, p.psi, p.kappa, z_axis, y_axis)
    return (out, False) if return_flag else out


def coupling_hg(sys: SystemKinematics, target: GuidanceTarget, d: float, p: AvoidanceParams,
                z_axis=Z_AXIS, y_axis=Y_AXIS) -> np.ndarray:
    if not target.active:
        return np.zeros(3)
    if np.linalg.norm(sys.xdot) <= 1e-9:
        raise DegenerateGeometryError("system velocity is zero")
    return batch_hg(sys.xdot, target.xdot_d, d, p.alpha, p.kappa, z_axis, y_axis)


def compose(sys: SystemKinematics,
            obstacles: Sequence[tuple[np.ndarray, float, AvoidanceParams]],
            guidance: tuple[GuidanceTarget, AvoidanceParams] | None = None,
            z_axis=Z_AXIS, y_axis=Y_AXIS) -> np.ndarray:
    """Sum of per-obstacle avoidance terms plus per-obstacle guidance terms."""
    total = np.zeros(3)
    for point, d, p in obstacles:
        total = total + coupling_oa(sys, point, d, p, z_axis, y_axis)
        if guidance is not None and guidance[0].active:
            total = total + coupling_hg(sys, guidance[0], d, guidance[1], z_axis, y_axis)
    return total
