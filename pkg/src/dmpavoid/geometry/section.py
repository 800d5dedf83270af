"""Planar sections of ellipsoids and path-length estimates through them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .superquadric import Superquadric


@dataclass(frozen=True)
class EllipseSection:
    """Ellipse lying in a plane.

    ``lambda_p`` holds the semi-axes (major first), ``axes`` the matching
    unit directions in world coordinates. ``shifted`` marks sections taken
    on a plane translated through the ellipsoid centre because the requested
    plane missed the body.
    """

    lambda_p: np.ndarray
    center: np.ndarray
    axes: np.ndarray  # (2, 3)
    plane_origin: np.ndarray
    plane_normal: np.ndarray
    shifted: bool = False

    def boundary(self, phi) -> np.ndarray:
        phi = np.asarray(phi, dtype=float)
        l1, l2 = self.lambda_p
        return (self.center + np.multiply.outer(l1 * np.cos(phi), self.axes[0])
                + np.multiply.outer(l2 * np.sin(phi), self.axes[1]))

    def support_point(self, direction) -> np.ndarray:
        """Boundary point furthest along ``direction`` (projected into the plane)."""
        u = np.asarray(direction, dtype=float)
        l1, l2 = self.lambda_p
        cu = l1 * (u @ self.axes[0])
        su = l2 * (u @ self.axes[1])
        n = np.hypot(cu, su)
        if n < 1e-15:
            return self.center.copy()
        return self.center + (l1 * cu / n) * self.axes[0] + (l2 * su / n) * self.axes[1]

    def half_width(self, direction) -> float:
        """Support value of the ellipse along ``direction`` (projected into the plane)."""
        u = np.asarray(direction, dtype=float)
        l1, l2 = self.lambda_p
        return float(np.hypot(l1 * (u @ self.axes[0]), l2 * (u @ self.axes[1])))

    def extents(self, along) -> np.ndarray:
        """Half-widths (along, across) relative to an in-plane reference direction.

        ``along`` is projected into the plane and normalised; ``across`` is
        its in-plane perpendicular. For an ellipse whose axes line up with
        the reference these are just the two semi-axes in that order.
        """
        u = np.asarray(along, dtype=float)
        u = u - (u @ self.plane_normal) * self.plane_normal
        nu = np.linalg.norm(u)
        if nu < 1e-12:
            u = self.axes[0]
        else:
            u = u / nu
        w = np.cross(self.plane_normal, u)
        return np.array([self.half_width(u), self.half_width(w)])

    @property
    def area(self) -> float:
        return float(np.pi * self.lambda_p[0] * self.lambda_p[1])


def plane_basis(normal) -> np.ndarray:
    """Two orthonormal in-plane vectors for a plane with the given normal."""
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    trial = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = trial - (trial @ n) * n
    u /= np.linalg.norm(u)
    return np.stack([u, np.cross(n, u)])


def section_pplane(ell: Superquadric, plane_origin, plane_normal) -> EllipseSection:
    """Exact conic section of an ellipsoid by a plane.

    Writing in-plane points as ``o + B^T w`` turns the ellipsoid quadric into
    a 2D quadratic in ``w``; its centre and eigen-decomposition give the
    section ellipse. Planes that miss the ellipsoid are moved along their
    normal through the ellipsoid centre and the result is flagged.
    """
    if not ell.is_ellipsoid:
        raise ValueError("section_pplane needs an ellipsoid (unit shape exponents)")
    n = np.asarray(plane_normal, dtype=float)
    n = n / np.linalg.norm(n)
    o = np.asarray(plane_origin, dtype=float)
    A = ell.shape_matrix()
    B = plane_basis(n)

    def conic(origin):
        m = origin - ell.center
        M = B @ A @ B.T
        b = B @ A @ m
        e = m @ A @ m
        w0 = -np.linalg.solve(M, b)
        rho = 1.0 - e - b @ w0
        return M, w0, rho

    shifted = False
    M, w0, rho = conic(o)
    if rho <= 0.0:
        o = o + ((ell.center - o) @ n) * n
        M, w0, rho = conic(o)
        shifted = True
    evals, evecs = np.linalg.eigh(M)  # ascending: smallest eigenvalue = major axis
    semi = np.sqrt(rho / evals)
    axes = evecs.T @ B  # rows: in-plane directions in world coords
    return EllipseSection(
        lambda_p=semi,
        center=o + w0 @ B,
        axes=axes,
        plane_origin=o,
        plane_normal=n,
        shifted=shifted,
    )


def avoidance_side(start, goal, center, default_up=(0.0, 0.0, 1.0)) -> np.ndarray:
    """Unit direction perpendicular to the chord pointing away from ``center``.

    Centres on the chord fall back to the chord-orthogonal part of
    ``default_up``.
    """
    s = np.asarray(start, dtype=float)
    g = np.asarray(goal, dtype=float)
    ex = (g - s) / np.linalg.norm(g - s)
    off = np.asarray(center, dtype=float) - s
    perp = off - (off @ ex) * ex
    if np.linalg.norm(perp) > 1e-9:
        return -perp / np.linalg.norm(perp)
    up = np.asarray(default_up, dtype=float)
    up = up - (up @ ex) * ex
    return up / np.linalg.norm(up)


def extreme_point(section: EllipseSection, start, goal, side=None) -> np.ndarray:
    """Section boundary point furthest from the chord on the avoidance side."""
    if side is None:
        side = avoidance_side(start, goal, section.center)
    return section.support_point(side)


def polyline_length(points) -> float:
    p = np.asarray(points, dtype=float)
    return float(np.linalg.norm(np.diff(p, axis=0), axis=1).sum())


def estimate_path_length(start, goal, obstacles=(), sides=None) -> float:
    """Length of the polyline start -> extreme points -> goal.

    ``obstacles`` are ``EllipseSection`` objects (or precomputed 3D extreme
    points); extreme points are visited in order of their projection onto
    the start-goal axis.
    """
    s = np.asarray(start, dtype=float)
    g = np.asarray(goal, dtype=float)
    axis = g - s
    if np.linalg.norm(axis) < 1e-12:
        raise ValueError("start and goal coincide")
    pts = []
    for i, ob in enumerate(obstacles):
        if isinstance(ob, EllipseSection):
            side = None if sides is None else sides[i]
            pts.append(extreme_point(ob, s, g, side))
        else:
            pts.append(np.asarray(ob, dtype=float))
    pts.sort(key=lambda p: float((p - s) @ axis))
    return polyline_length([s, *pts, g])
