"""Superquadric inside-outside function and recovery from point clouds."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

from ..lm import levenberg_marquardt

EXPONENT_RANGE = (0.1, 2.0)
MIN_SEMI_AXIS = 1e-3


class FitWarning(RuntimeWarning):
    pass


class DegenerateCloudError(ValueError):
    pass


@dataclass(frozen=True)
class Superquadric:
    """Semi-axes ``lam[:3]`` (m), shape exponents ``lam[3:]``, centre and
    orientation (columns are the body axes in world coordinates)."""

    lam: np.ndarray
    center: np.ndarray = field(default_factory=lambda: np.zeros(3))
    orientation: np.ndarray = field(default_factory=lambda: np.eye(3))
    residual: float = 0.0
    converged: bool = True

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=float)
        if lam.shape == (3,):
            lam = np.concatenate([lam, [1.0, 1.0]])
        if lam.shape != (5,) or np.any(lam[:3] <= 0):
            raise ValueError("need 3 positive semi-axes and 2 shape exponents")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "orientation", np.asarray(self.orientation, dtype=float))

    @property
    def semi_axes(self) -> np.ndarray:
        return self.lam[:3]

    @property
    def exponents(self) -> np.ndarray:
        return self.lam[3:]

    @property
    def is_ellipsoid(self) -> bool:
        return bool(np.allclose(self.lam[3:], 1.0))

    def to_body(self, p) -> np.ndarray:
        return (np.asarray(p, dtype=float) - self.center) @ self.orientation

    def __call__(self, p) -> np.ndarray:
        return eval_F(self, p)

    def shape_matrix(self) -> np.ndarray:
        """``A`` with ``(p - c)^T A (p - c) = F`` for ellipsoids."""
        R = self.orientation
        return R @ np.diag(1.0 / self.semi_axes**2) @ R.T


def _F_body(q: np.ndarray, lam: np.ndarray) -> np.ndarray:
    l1, l2, l3, e4, e5 = lam
    ax = np.abs(q[..., 0]) / l1
    ay = np.abs(q[..., 1]) / l2
    az = np.abs(q[..., 2]) / l3
    if e4 == 1.0 and e5 == 1.0:
        return ax * ax + ay * ay + az * az
    return (ax ** (2.0 / e5) + ay ** (2.0 / e5)) ** (e5 / e4) + az ** (2.0 / e4)


def eval_F(sq: Superquadric, p) -> np.ndarray:
    """Inside-outside value: < 1 inside, 1 on the surface, > 1 outside."""
    return _F_body(sq.to_body(p), sq.lam)


def _proper(R: np.ndarray) -> np.ndarray:
    if np.linalg.det(R) < 0:
        R = R.copy()
        R[:, 2] *= -1
    return R


def initial_guess(points: np.ndarray) -> Superquadric:
    """Centroid, principal axes and 1.5 std-dev semi-axes."""
    c = points.mean(axis=0)
    cov = np.cov((points - c).T)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    R = _proper(evecs[:, order])
    std = np.sqrt(np.maximum(evals[order], 0.0))
    axes = np.maximum(1.5 * std, MIN_SEMI_AXIS)
    return Superquadric(np.concatenate([axes, [1.0, 1.0]]), c, R)


def fit_residuals(sq: Superquadric, points: np.ndarray) -> np.ndarray:
    l1, l2, l3 = sq.semi_axes
    return np.sqrt(l1 * l2 * l3) * (eval_F(sq, points) - 1.0)


def _check_cloud(points: np.ndarray) -> None:
    if points.ndim != 2 or points.shape[1] != 3 or points.shape[0] < 4:
        raise DegenerateCloudError("need at least 4 points in 3D")
    if not np.all(np.isfinite(points)):
        raise DegenerateCloudError("cloud contains non-finite coordinates")
    centred = points - points.mean(axis=0)
    sv = np.linalg.svd(centred, compute_uv=False)
    if sv[-1] <= 1e-9 * max(sv[0], 1e-300):
        raise DegenerateCloudError("cloud is coplanar (or collinear)")


def fit_superquadric(cloud, fix_ellipsoid: bool = False, max_iter: int = 200) -> Superquadric:
    """Recover a superquadric by damped least squares.

    Minimises ``sum((sqrt(l1 l2 l3) (F(p_i) - 1))^2)`` over semi-axes,
    exponents (unless ``fix_ellipsoid``), centre and orientation. The
    orientation is parametrised as a rotation vector applied on top of the
    principal-axes initial frame. The returned ``residual`` is the final sum
    of squared residuals; ``converged=False`` flags a best-so-far result.
    """
    points = np.asarray(getattr(cloud, "points", cloud), dtype=float)
    _check_cloud(points)
    init = initial_guess(points)
    R0 = init.orientation
    n_shape = 3 if fix_ellipsoid else 5

    def unpack(theta):
        lam = np.ones(5)
        lam[:n_shape] = theta[:n_shape]
        c = theta[n_shape:n_shape + 3]
        R = R0 @ Rotation.from_rotvec(theta[n_shape + 3:]).as_matrix()
        return lam, c, R

    def residuals(theta):
        lam, c, R = unpack(theta)
        q = (points - c) @ R
        return np.sqrt(lam[0] * lam[1] * lam[2]) * (_F_body(q, lam) - 1.0)

    x0 = np.concatenate([init.lam[:n_shape], init.center, np.zeros(3)])
    lower = np.full(x0.size, -np.inf)
    upper = np.full(x0.size, np.inf)
    lower[:3] = MIN_SEMI_AXIS
    if not fix_ellipsoid:
        lower[3:5], upper[3:5] = EXPONENT_RANGE
    res = levenberg_marquardt(residuals, x0, lower=lower, upper=upper, max_iter=max_iter)
    if not res.converged:
        warnings.warn(f"superquadric fit did not converge: {res.message}", FitWarning, stacklevel=2)
    lam, c, R = unpack(res.x)
    return Superquadric(lam, c, R, residual=2.0 * res.cost, converged=res.converged)


def sample_surface(semi_axes, n: int, rng: np.random.Generator, center=None, orientation=None,
                   exponents=(1.0, 1.0)) -> np.ndarray:
    """Sample ``n`` points on a superquadric surface (parametric, not area-uniform
    unless the shape is a sphere)."""
    a = np.asarray(semi_axes, dtype=float)
    e4, e5 = exponents
    u = rng.normal(size=(n, 3))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    eta = np.arcsin(np.clip(u[:, 2], -1, 1))
    omega = np.arctan2(u[:, 1], u[:, 0])

    def spow(v, e):
        return np.sign(v) * np.abs(v) ** e

    pts = np.column_stack([
        a[0] * spow(np.cos(eta), e4) * spow(np.cos(omega), e5),
        a[1] * spow(np.cos(eta), e4) * spow(np.sin(omega), e5),
        a[2] * spow(np.sin(eta), e4),
    ])
    if orientation is not None:
        pts = pts @ np.asarray(orientation).T
    if center is not None:
        pts = pts + np.asarray(center)
    return pts
