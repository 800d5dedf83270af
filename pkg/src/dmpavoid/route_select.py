"""Cost-ring selection of the side on which to pass an obstacle.

Directions ``omega`` live in the local YZ-plane, ``u(omega) = cos(omega) y +
sin(omega) z``. For each direction the candidate via-point of every
obstacle is its surface point furthest along ``u`` pushed out by the
requested clearance; the direction is then scored by whether those points
sit below the table, leave the workspace sphere, and how long the
start -> via-points -> goal polyline gets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coupling import GuidanceTarget
from .dmp import LocalFrame
from .geometry.section import polyline_length
from .scenario import Scenario, WorkspaceModel

DEFAULT_DIRS = 72
# directions of the fixed reference ring used to normalise path lengths
REFERENCE_DIRS = 4096


class InfeasibleRouteError(RuntimeError):
    """Every direction hits the table or leaves the workspace."""


@dataclass(frozen=True)
class CostRing:
    omega: np.ndarray
    table: np.ndarray
    length: np.ndarray
    limits: np.ndarray
    raw_length: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.table + self.length + self.limits

    @property
    def feasible(self) -> np.ndarray:
        return (self.table == 0) & (self.limits == 0)

    def cost_at(self, omega: float) -> float:
        """Total cost of the ring direction closest to ``omega``."""
        diff = np.angle(np.exp(1j * (self.omega - omega)))
        return float(self.total[np.argmin(np.abs(diff))])


def ring_directions(n: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(n) / n


def lateral_direction(omega) -> np.ndarray:
    """Local-frame unit vector(s) ``cos(omega) y + sin(omega) z``."""
    omega = np.asarray(omega, dtype=float)
    return np.stack([np.zeros_like(omega), np.cos(omega), np.sin(omega)], axis=-1)


def _via_points(obstacles, omega: np.ndarray, margin: float) -> np.ndarray:
    """(n_dirs, n_obstacles, 3) local candidate via-points."""
    u = lateral_direction(omega)
    out = np.empty((omega.size, len(obstacles), 3))
    for j, ob in enumerate(obstacles):
        Ainv = np.linalg.inv(ob.shape_matrix())
        w = u @ Ainv  # Ainv symmetric
        out[:, j] = ob.center + w / np.sqrt(np.einsum("ij,ij->i", u, w))[:, None] + margin * u
    return out


def _path_lengths(start, goal, via: np.ndarray) -> np.ndarray:
    lengths = np.empty(via.shape[0])
    for i, pts in enumerate(via):
        order = np.argsort(pts[:, 0], kind="stable")
        lengths[i] = polyline_length([start, *pts[order], goal])
    return lengths


def build_cost_ring(sc: Scenario, ws: WorkspaceModel | None = None,
                    n_dirs: int = DEFAULT_DIRS) -> CostRing:
    """Score ``n_dirs`` equally spaced directions for the scenario.

    The length cost is min-max normalised against a fixed dense reference
    ring (and clipped to [0, 1]) so a direction's cost does not depend on
    which other directions are evaluated.
    """
    if not sc.obstacles:
        raise ValueError("route selection needs at least one obstacle")
    if n_dirs < 4:
        raise ValueError("need at least 4 directions")
    ws = ws if ws is not None else (sc.workspace or WorkspaceModel())
    frame = sc.frame
    obstacles = sc.local_obstacles()
    margin = sc.clearance or 0.0
    start = np.zeros(3)
    goal = np.array([sc.baseline, 0.0, 0.0])

    omega = ring_directions(n_dirs)
    via = _via_points(obstacles, omega, margin)
    raw = _path_lengths(start, goal, via)
    ref = _path_lengths(start, goal, _via_points(obstacles, ring_directions(REFERENCE_DIRS), margin))
    lo, hi = ref.min(), ref.max()
    span = hi - lo
    length = np.clip((raw - lo) / span, 0.0, 1.0) if span > 1e-15 else np.zeros(n_dirs)

    via_world = frame.from_local(via)
    table = ws.below_table(via_world).any(axis=1).astype(float)
    limits = ws.outside(via_world).any(axis=1).astype(float)
    return CostRing(omega, table, length, limits, raw)


def select_direction(ring: CostRing, tol: float = 1e-12) -> float:
    """Feasible direction of least total cost; ties go to the smallest angle."""
    ok = ring.feasible
    if not ok.any():
        raise InfeasibleRouteError("no direction avoids both the table and the workspace limits")
    total = np.where(ok, ring.total, np.inf)
    best = np.flatnonzero(total <= total.min() + tol)[0]
    return float(ring.omega[best])


def direction_to_guidance(omega_d: float, frame: LocalFrame, weight: float = 0.5,
                          active: bool = True) -> GuidanceTarget:
    """Desired world heading blending forward progress with the lateral direction.

    ``xdot_d = normalise((1 - weight) x + weight u(omega_d))`` in local axes.
    """
    if not 0.0 <= weight <= 1.0:
        raise ValueError("blend weight must lie in [0, 1]")
    local = (1.0 - weight) * np.array([1.0, 0.0, 0.0]) + weight * lateral_direction(omega_d)
    local /= np.linalg.norm(local)
    return GuidanceTarget(frame.vec_from_local(local), active)
