"""Signed Euclidean distance from points to ellipsoid surfaces."""

from __future__ import annotations

import numpy as np


def _body_distance(q: np.ndarray, a: np.ndarray, tol: float = 1e-15, max_iter: int = 200):
    """Signed distance for body-frame points ``q`` (..., 3) to the ellipsoid with
    semi-axes ``a``; negative inside.

    Exterior points solve ``sum((a_i y_i / (t + a_i^2))^2) = 1`` for ``t >= 0``
    by Newton's method started left of the root (the function is convex and
    decreasing, so the iterates increase monotonically). Interior points
    bisect on ``t in (-min(a)^2, 0]``.
    """
    y = np.abs(q)
    a2 = a * a
    inside_val = np.einsum("...i,i->...", y * y, 1.0 / a2)
    out = inside_val > 1.0
    dist = np.zeros(y.shape[:-1])

    if np.any(out):
        yo = y[out]
        rad = np.linalg.norm(yo, axis=-1)
        t = np.maximum(0.0, a.min() * rad - a2.max())
        ay = a * yo
        for _ in range(max_iter):
            den = t[:, None] + a2
            s = ay / den
            g = np.einsum("ij,ij->i", s, s) - 1.0
            dg = -2.0 * np.einsum("ij,ij->i", s * s, 1.0 / den)
            step = g / dg
            t = t - step
            if np.all(np.abs(step) <= tol * np.maximum(t, a2.min())):
                break
        x = a2 * yo / (t[:, None] + a2)
        dist[out] = np.linalg.norm(yo - x, axis=-1)

    ins = ~out
    if np.any(ins):
        # a vanishing coordinate along the minor axis leaves no interior root;
        # nudging it off zero selects the correct branch
        yi = np.maximum(y[ins], 1e-8 * a)
        lo = np.full(yi.shape[0], -a2.min())
        hi = np.zeros(yi.shape[0])
        ay = a * yi
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            s = ay / np.maximum(mid[:, None] + a2, 1e-300)
            g = np.einsum("ij,ij->i", s, s) - 1.0
            # g decreasing in t: root lies right of mid when g > 0
            lo = np.where(g > 0, mid, lo)
            hi = np.where(g > 0, hi, mid)
        t = 0.5 * (lo + hi)
        x = a2 * yi / np.maximum(t[:, None] + a2, 1e-300)
        dist[ins] = -np.linalg.norm(yi - x, axis=-1)
    return dist


def signed_distance(points, center, semi_axes, orientation=None) -> np.ndarray:
    """Signed distance of world points to an ellipsoid surface (negative inside)."""
    p = np.asarray(points, dtype=float)
    q = p - np.asarray(center, dtype=float)
    if orientation is not None:
        q = q @ np.asarray(orientation, dtype=float)
    return _body_distance(q, np.asarray(semi_axes, dtype=float))


def surface_distance(points, center, semi_axes, orientation=None) -> np.ndarray:
    """Distance to the surface, clamped at zero inside."""
    return np.maximum(signed_distance(points, center, semi_axes, orientation), 0.0)
