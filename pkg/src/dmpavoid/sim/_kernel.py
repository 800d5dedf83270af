"""Compiled per-system rollout loop for parameter-space exploration.

Mirrors ``engine.rollout_batch_reference`` step for step: explicit Euler,
dead-zone free avoidance for every obstacle, surface distance by Newton
iteration. Obstacles are passed as centre/semi-axes/rotation arrays.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

EPS_AXIS = 1e-9


@njit(cache=True, fastmath=False)
def _body_coords(px, py, pz, c, R):
    dx = px - c[0]
    dy = py - c[1]
    dz = pz - c[2]
    return (dx * R[0, 0] + dy * R[1, 0] + dz * R[2, 0],
            dx * R[0, 1] + dy * R[1, 1] + dz * R[2, 1],
            dx * R[0, 2] + dy * R[1, 2] + dz * R[2, 2])


@njit(cache=True)
def _signed_distance(qx, qy, qz, a):
    y0 = abs(qx)
    y1 = abs(qy)
    y2 = abs(qz)
    a0s = a[0] * a[0]
    a1s = a[1] * a[1]
    a2s = a[2] * a[2]
    val = y0 * y0 / a0s + y1 * y1 / a1s + y2 * y2 / a2s
    amin = min(a[0], min(a[1], a[2]))
    amax2 = max(a0s, max(a1s, a2s))
    amin2 = amin * amin
    if val > 1.0:
        rad = math.sqrt(y0 * y0 + y1 * y1 + y2 * y2)
        t = max(0.0, amin * rad - amax2)
        for _ in range(200):
            d0 = t + a0s
            d1 = t + a1s
            d2 = t + a2s
            s0 = a[0] * y0 / d0
            s1 = a[1] * y1 / d1
            s2 = a[2] * y2 / d2
            g = s0 * s0 + s1 * s1 + s2 * s2 - 1.0
            dg = -2.0 * (s0 * s0 / d0 + s1 * s1 / d1 + s2 * s2 / d2)
            step = g / dg
            t -= step
            if abs(step) <= 1e-15 * max(t, min(a0s, min(a1s, a2s))):
                break
        x0 = a0s * y0 / (t + a0s)
        x1 = a1s * y1 / (t + a1s)
        x2 = a2s * y2 / (t + a2s)
        return math.sqrt((y0 - x0) ** 2 + (y1 - x1) ** 2 + (y2 - x2) ** 2)
    y0 = max(y0, 1e-8 * a[0])
    y1 = max(y1, 1e-8 * a[1])
    y2 = max(y2, 1e-8 * a[2])
    lo = -amin2
    hi = 0.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        s0 = a[0] * y0 / max(mid + a0s, 1e-300)
        s1 = a[1] * y1 / max(mid + a1s, 1e-300)
        s2 = a[2] * y2 / max(mid + a2s, 1e-300)
        g = s0 * s0 + s1 * s1 + s2 * s2 - 1.0
        if g > 0:
            lo = mid
        else:
            hi = mid
    t = 0.5 * (lo + hi)
    x0 = a0s * y0 / max(t + a0s, 1e-300)
    x1 = a1s * y1 / max(t + a1s, 1e-300)
    x2 = a2s * y2 / max(t + a2s, 1e-300)
    return -math.sqrt((y0 - x0) ** 2 + (y1 - x1) ** 2 + (y2 - x2) ** 2)


@njit(cache=True)
def _oa_force(rx, ry, rz, vx, vy, vz, d, alpha, psi, kappa):
    """Avoidance force for obstacle offset r = x_obs - x and velocity v."""
    # theta = atan2(|v x r|, v . r)
    cx = vy * rz - vz * ry
    cy = vz * rx - vx * rz
    cz = vx * ry - vy * rx
    theta = math.atan2(math.sqrt(cx * cx + cy * cy + cz * cz), vx * rx + vy * ry + vz * rz)
    # axis = r x v with fallbacks v x z, v x y
    ax = ry * vz - rz * vy
    ay = rz * vx - rx * vz
    az = rx * vy - ry * vx
    n = math.sqrt(ax * ax + ay * ay + az * az)
    nr = math.sqrt(rx * rx + ry * ry + rz * rz)
    nv = math.sqrt(vx * vx + vy * vy + vz * vz)
    if n < EPS_AXIS * max(nr * nv, 1e-300):
        ax = vy
        ay = -vx
        az = 0.0
        n = math.sqrt(ax * ax + ay * ay)
        if n < EPS_AXIS * max(nv, 1e-300):
            ax = -vz
            ay = 0.0
            az = vx
            n = math.sqrt(ax * ax + az * az)
    n = max(n, 1e-300)
    ax /= n
    ay /= n
    az /= n
    dot = ax * vx + ay * vy + az * vz
    qx = ay * vz - az * vy + ax * dot
    qy = az * vx - ax * vz + ay * dot
    qz = ax * vy - ay * vx + az * dot
    mag = alpha * math.exp(-(theta / psi) ** 2) * math.exp(-kappa * d * d)
    return qx * mag, qy * mag, qz * mag


@njit(cache=True)
def rollout_kernel(start, goal, centers, semi_axes, rotations, params, tau, dt, n_steps,
                   alpha_x, beta_x, path):
    """Returns (clearance, collided, final) for each row of ``params`` =
    (alpha, psi, kappa). ``path`` is filled when it has n_steps + 1 rows."""
    B = params.shape[0]
    M = centers.shape[0]
    clearance = np.empty(B)
    collided = np.zeros(B, dtype=np.bool_)
    final = np.empty((B, 3))
    keep = path.shape[0] == n_steps + 1
    h = dt / tau
    for b in range(B):
        alpha = params[b, 0]
        psi = params[b, 1]
        kappa = params[b, 2]
        x0 = start[0]
        x1 = start[1]
        x2 = start[2]
        z0 = 0.0
        z1 = 0.0
        z2 = 0.0
        clr = np.inf
        hit = False
        for i in range(n_steps + 1):
            f0 = 0.0
            f1 = 0.0
            f2 = 0.0
            v0 = z0 / tau
            v1 = z1 / tau
            v2 = z2 / tau
            for m in range(M):
                q0, q1, q2 = _body_coords(x0, x1, x2, centers[m], rotations[m])
                a = semi_axes[m]
                if q0 * q0 / (a[0] * a[0]) + q1 * q1 / (a[1] * a[1]) + q2 * q2 / (a[2] * a[2]) <= 1.0:
                    hit = True
                sd = _signed_distance(q0, q1, q2, a)
                if sd < clr:
                    clr = sd
                if i < n_steps:
                    dd = max(sd, 0.0)
                    c0, c1, c2 = _oa_force(centers[m, 0] - x0, centers[m, 1] - x1,
                                           centers[m, 2] - x2, v0, v1, v2, dd,
                                           alpha, psi, kappa)
                    f0 += c0
                    f1 += c1
                    f2 += c2
            if keep:
                path[i, b, 0] = x0
                path[i, b, 1] = x1
                path[i, b, 2] = x2
            if i == n_steps:
                break
            zd0 = alpha_x * (beta_x * (goal[0] - x0) - z0) + f0
            zd1 = alpha_x * (beta_x * (goal[1] - x1) - z1) + f1
            zd2 = alpha_x * (beta_x * (goal[2] - x2) - z2) + f2
            x0 += h * z0
            x1 += h * z1
            x2 += h * z2
            z0 += h * zd0
            z1 += h * zd1
            z2 += h * zd2
            if not (math.isfinite(x0) and math.isfinite(x1) and math.isfinite(x2)
                    and math.isfinite(z0) and math.isfinite(z1) and math.isfinite(z2)):
                x0 = np.nan
                x1 = np.nan
                x2 = np.nan
                clr = -np.inf
                hit = True
                break
        clearance[b] = clr
        collided[b] = hit
        final[b, 0] = x0
        final[b, 1] = x1
        final[b, 2] = x2
    return clearance, collided, final
