"""Closed-loop episodes: descriptor extraction, chain query, coupling, Euler step.

Everything is integrated in the scenario's local frame (x from start to
goal, z as close to up as possible) and mapped back to world coordinates
for the stored trajectory.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..coupling import AvoidanceParams, batch_axis, batch_hg
from ..dmp import ALPHA_K, ALPHA_X, BETA_X, DEFAULT_DT, scale_duration
from ..geometry.section import avoidance_side, estimate_path_length, section_pplane
from ..learning.chain import OutsideHullWarning, RegressorChain, predict_chain
from ..route_select import (build_cost_ring, direction_to_guidance, lateral_direction,
                            select_direction)
from ..scenario import Scenario
from ._kernel import _body_coords, _oa_force, _signed_distance
from .engine import episode_steps

EX = np.array([1.0, 0.0, 0.0])


class EpisodeError(RuntimeError):
    pass


@dataclass(frozen=True)
class EpisodeOptions:
    """Per-run switches.

    ``hg`` holds the guidance gains (``psi`` is unused by that term).
    Guidance towards the selected lateral direction stays on for an
    obstacle until the system's x-progress passes that obstacle's centre.
    """

    scale_tau: bool = True
    guided: bool = False
    dt: float = DEFAULT_DT
    cache_deg: float = 0.5
    guidance_weight: float = 0.5
    hg: AvoidanceParams = AvoidanceParams(alpha=20.0, psi=1.0, kappa=2.0)
    n_dirs: int = 72
    alpha_x: float = ALPHA_X
    beta_x: float = BETA_X
    alpha_k: float = ALPHA_K


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray  # world positions (n, 3)
    v: np.ndarray  # world velocities (n, 3)
    tau: float
    guidance: np.ndarray  # (n, M) guidance active per obstacle
    descriptor: np.ndarray  # (n, M, 2) along/across half-widths of the section
    distance: np.ndarray  # (n, M) signed surface distance
    theta: np.ndarray  # (n, M) heading angle to the obstacle
    params: np.ndarray  # (n, M, 3) kappa, psi, alpha in use
    omega_d: float | None = None


@dataclass(frozen=True)
class Metrics:
    collided: bool
    clearance: float
    convergence: float
    tau: float
    aborted: bool = False
    message: str = ""


@dataclass
class _Descriptor:
    """Per-obstacle cache of the last sectioned plane."""

    normal: np.ndarray | None = None
    h: np.ndarray = field(default_factory=lambda: np.zeros(2))
    params: np.ndarray = field(default_factory=lambda: np.zeros(3))
    center: np.ndarray = field(default_factory=lambda: np.zeros(3))


def _query(rc: RegressorChain, h: np.ndarray, clearance: float | None) -> np.ndarray:
    q = np.append(h, clearance) if rc.uses_clearance else h
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OutsideHullWarning)
        return predict_chain(rc, q)


def _chain_for(rc, sc: Scenario) -> RegressorChain:
    if isinstance(rc, RegressorChain):
        chain = rc
    else:
        chain = rc["rc" if sc.clearance is None else "rc-delta"]
    if chain.uses_clearance and sc.clearance is None:
        raise EpisodeError("the rc-delta model needs a clearance target")
    if not chain.uses_clearance and sc.clearance is not None:
        raise EpisodeError("the rc model cannot honour a clearance target; use rc-delta")
    return chain


def initial_tau(sc: Scenario, sides=None) -> float:
    """Nominal tau stretched by the estimated path-length ratio.

    Each obstacle is sectioned by the plane through its centre spanned by
    the start-goal axis and the centre offset, and the polyline runs
    through the section boundary on the given (or default) side.
    """
    obstacles = sc.local_obstacles()
    if not obstacles:
        return sc.tau
    start = np.zeros(3)
    goal = np.array([sc.baseline, 0.0, 0.0])
    sections = []
    for ob in obstacles:
        normal = batch_axis(ob.center - start, EX, EX)
        sections.append(section_pplane(ob.to_superquadric(), ob.center, normal))
    if sides is None:
        sides = [avoidance_side(start, goal, s.center) for s in sections]
    est = estimate_path_length(start, goal, sections, sides)
    return scale_duration(sc.tau, sc.baseline, est)


def run_episode(sc: Scenario, rc, opts: EpisodeOptions = EpisodeOptions()):
    """Integrate one episode; returns (Trajectory, Metrics).

    ``rc`` is a trained chain or a mapping ``{"rc": ..., "rc-delta": ...}``
    from which the scenario picks by whether it requests a clearance.
    """
    scale_tau = opts.scale_tau if sc.scale_tau is None else sc.scale_tau
    frame = sc.frame
    obstacles = sc.local_obstacles()
    M = len(obstacles)
    chain = _chain_for(rc, sc) if M else None
    goal = np.array([sc.baseline, 0.0, 0.0])

    omega_d = None
    v_d = None
    if opts.guided and M:
        ring = build_cost_ring(sc, sc.workspace, opts.n_dirs)
        omega_d = select_direction(ring)
        v_d = frame.vec_to_local(direction_to_guidance(omega_d, frame, opts.guidance_weight).xdot_d)

    if scale_tau and M:
        sides = None if omega_d is None else [lateral_direction(omega_d)] * M
        tau = initial_tau(sc, sides)
    else:
        tau = sc.tau

    n_phase, n_settle = episode_steps(tau, opts.dt, opts.alpha_k)
    n = n_phase + n_settle
    h_step = opts.dt / tau
    cos_cache = math.cos(math.radians(opts.cache_deg))

    centers = [ob.center for ob in obstacles]
    axes = [ob.semi_axes for ob in obstacles]
    rots = [ob.rotation for ob in obstacles]
    sqs = [ob.to_superquadric() for ob in obstacles]
    cache = [_Descriptor() for _ in range(M)]

    X = np.empty((n + 1, 3))
    V = np.empty((n + 1, 3))
    G = np.zeros((n + 1, M), dtype=bool)
    D = np.zeros((n + 1, M, 2))
    dist = np.zeros((n + 1, M))
    theta = np.zeros((n + 1, M))
    P = np.zeros((n + 1, M, 3))

    x = np.zeros(3)
    z = np.zeros(3)
    collided = False
    aborted = False
    message = ""
    last = n
    ax_, bx_ = opts.alpha_x, opts.beta_x
    hg = opts.hg
    for i in range(n + 1):
        v = z / tau
        X[i] = x
        V[i] = v
        f = np.zeros(3)
        speed = math.sqrt(v @ v)
        heading = v / speed if speed > 1e-9 else EX
        for m in range(M):
            c = centers[m]
            q = _body_coords(x[0], x[1], x[2], c, rots[m])
            a = axes[m]
            if (q[0] / a[0]) ** 2 + (q[1] / a[1]) ** 2 + (q[2] / a[2]) ** 2 <= 1.0:
                collided = True
            sd = _signed_distance(q[0], q[1], q[2], a)
            dist[i, m] = sd
            r = c - x
            normal = batch_axis(r, heading, heading)
            cd = cache[m]
            if cd.normal is None or abs(normal @ cd.normal) < cos_cache:
                sec = section_pplane(sqs[m], c, normal)
                cd.normal = normal
                cd.h = sec.extents(EX)
                cd.center = sec.center
                cd.params = _query(chain, cd.h, sc.clearance)
            D[i, m] = cd.h
            P[i, m] = cd.params
            ref = cd.center - x
            theta[i, m] = math.atan2(np.linalg.norm(np.cross(heading, ref)), heading @ ref)
            if i == n:
                continue
            kappa, psi, alpha = cd.params
            f += _oa_force(ref[0], ref[1], ref[2], v[0], v[1], v[2], max(sd, 0.0),
                           alpha, psi, kappa)
            if v_d is not None and x[0] < c[0]:
                G[i, m] = True
                f += batch_hg(v, v_d, max(sd, 0.0), hg.alpha, hg.kappa)
        if i == n:
            break
        zdot = ax_ * (bx_ * (goal - x) - z) + f
        x = x + h_step * z
        z = z + h_step * zdot
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(z))):
            aborted = True
            collided = True
            message = f"non-finite state at step {i + 1}"
            last = i
            break

    keep = slice(0, last + 1)
    X, V, G, D, dist, theta, P = X[keep], V[keep], G[keep], D[keep], dist[keep], theta[keep], P[keep]
    t = np.arange(X.shape[0]) * opts.dt
    traj = Trajectory(t, frame.from_local(X), frame.vec_from_local(V), tau, G, D, dist, theta,
                      P, omega_d)
    if aborted:
        return traj, Metrics(True, -math.inf, math.inf, tau, True, message)
    clearance = float(dist.min()) if M else math.inf
    convergence = float(np.linalg.norm(X[-1] - goal))
    return traj, Metrics(collided, clearance, convergence, tau)


def recompute_clearance(traj: Trajectory, sc: Scenario) -> tuple[float, bool]:
    """Post-hoc clearance and collision flag from the stored world path."""
    if not sc.obstacles:
        return math.inf, False
    d = np.min([ob.signed_distance(traj.x) for ob in sc.obstacles], axis=0)
    hit = any(bool(np.any(ob.inside_value(traj.x) <= 1.0)) for ob in sc.obstacles)
    return float(d.min()), hit
