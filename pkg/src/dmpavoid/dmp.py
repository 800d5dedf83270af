"""Discrete dynamic movement primitives.

Canonical system, per-DoF transformation systems, RBF forcing terms fitted
by imitation, a start/goal referenced local frame and duration scaling.
All states are small immutable values; stepping returns a new state.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

ALPHA_X = 25.0
BETA_X = ALPHA_X / 4.0
ALPHA_K = float(np.log(100.0))  # k(tau) = 0.01
DEFAULT_DT = 1e-3


class DegenerateBasisWarning(RuntimeWarning):
    """Forcing-term basis activations summed to (numerically) zero."""


@dataclass(frozen=True)
class PhaseState:
    k: float = 1.0
    alpha_k: float = ALPHA_K
    tau: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.k <= 1.0):
            raise ValueError(f"phase must lie in (0, 1], got {self.k}")
        if self.alpha_k <= 0 or self.tau <= 0:
            raise ValueError("alpha_k and tau must be positive")


@dataclass(frozen=True)
class TransformState:
    """Position ``x``, scaled velocity ``z`` (= tau * xdot) and goal ``g``.

    ``x``, ``z`` and ``g`` are floats for a single DoF or equally shaped
    arrays for independent DoFs sharing one canonical system.
    """

    x: np.ndarray | float
    z: np.ndarray | float
    g: np.ndarray | float
    alpha_x: float = ALPHA_X
    beta_x: float = BETA_X

    def __post_init__(self):
        if self.alpha_x <= 0 or self.beta_x <= 0:
            raise ValueError("alpha_x and beta_x must be positive")

    def velocity(self, tau: float) -> np.ndarray | float:
        return np.asarray(self.z) / tau


def step_canonical(s: PhaseState, dt: float, method: str = "euler") -> PhaseState:
    """Advance ``tau * dk/dt = -alpha_k * k`` by ``dt``.

    ``method="exact"`` uses the closed-form exponential decay and is valid
    for any step; explicit Euler needs ``dt < tau / alpha_k`` to keep the
    phase positive.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if method == "exact":
        k = s.k * np.exp(-s.alpha_k * dt / s.tau)
    elif method == "euler":
        k = s.k * (1.0 - s.alpha_k * dt / s.tau)
        if k <= 0:
            raise ValueError("Euler phase step too large: dt must be < tau / alpha_k")
    else:
        raise ValueError(f"unknown method {method!r}")
    return replace(s, k=float(k))


@dataclass(frozen=True)
class ForcingTerm:
    """Normalised RBF forcing term.

    ``weights`` has shape ``(N,)`` for one DoF or ``(N, D)`` for D DoFs.
    """

    weights: np.ndarray
    centers: np.ndarray
    widths: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        c = np.asarray(self.centers, dtype=float)
        h = np.asarray(self.widths, dtype=float)
        if c.ndim != 1 or c.size < 1:
            raise ValueError("need at least one basis function")
        if h.shape != c.shape or w.shape[0] != c.size:
            raise ValueError("weights, centers and widths disagree in length")
        if np.any(h <= 0):
            raise ValueError("basis widths must be positive")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "widths", h)

    @property
    def n_basis(self) -> int:
        return self.centers.size

    @classmethod
    def zeros(cls, n_basis: int, n_dofs: int | None = None, alpha_k: float = ALPHA_K):
        c, h = basis_layout(n_basis, alpha_k)
        shape = (n_basis,) if n_dofs is None else (n_basis, n_dofs)
        return cls(np.zeros(shape), c, h)

    def activations(self, k: float) -> np.ndarray:
        return np.exp(-self.widths * (k - self.centers) ** 2)

    def __call__(self, k: float):
        return eval_forcing(self, k)


def basis_layout(n_basis: int, alpha_k: float = ALPHA_K) -> tuple[np.ndarray, np.ndarray]:
    """Centres equally spaced in time (exponential in phase) and their widths."""
    if n_basis < 1:
        raise ValueError("n_basis must be >= 1")
    c = np.exp(-alpha_k * np.linspace(0.0, 1.0, n_basis))
    if n_basis == 1:
        return c, np.ones(1)
    gaps = np.diff(c) ** 2
    h = 1.0 / np.append(gaps, gaps[-1])
    return c, h


def eval_forcing(f: ForcingTerm, k: float, return_flag: bool = False):
    """Forcing value ``k * sum(w_i psi_i) / sum(psi_i)``.

    A vanishing denominator (< 1e-300) yields zero force; with
    ``return_flag=True`` a ``(value, degenerate)`` pair is returned instead.
    """
    psi = f.activations(k)
    den = psi.sum()
    if den < 1e-300:
        val = np.zeros(f.weights.shape[1:]) if f.weights.ndim > 1 else 0.0
        return (val, True) if return_flag else val
    val = (psi @ f.weights) / den * k
    if f.weights.ndim == 1:
        val = float(val)
    return (val, False) if return_flag else val


def step_transform(
    t: TransformState, k: float, f_val, c_val, dt: float, tau: float
) -> TransformState:
    """One explicit Euler step of the transformation system.

    ``tau * dz/dt = alpha_x (beta_x (g - x) - z) + f + C`` and
    ``tau * dx/dt = z``. The phase ``k`` is accepted for interface symmetry;
    the forcing value is expected to be pre-evaluated.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    x = np.asarray(t.x, dtype=float)
    z = np.asarray(t.z, dtype=float)
    f_val = np.asarray(f_val, dtype=float)
    c_val = np.asarray(c_val, dtype=float)
    for name, arr in (("x", x), ("z", z), ("f", f_val), ("C", c_val)):
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"non-finite {name} in transformation step")
    if not (np.isfinite(tau) and tau > 0):
        raise ValueError("tau must be positive and finite")
    zdot = (t.alpha_x * (t.beta_x * (np.asarray(t.g) - x) - z) + f_val + c_val) / tau
    xdot = z / tau
    x_new = x + dt * xdot
    z_new = z + dt * zdot
    if x_new.ndim == 0:
        x_new, z_new = float(x_new), float(z_new)
    return replace(t, x=x_new, z=z_new)


def phase_profile(times: np.ndarray, tau: float, alpha_k: float = ALPHA_K) -> np.ndarray:
    return np.exp(-alpha_k * (times - times[0]) / tau)


def fit_from_demo(
    times: np.ndarray,
    positions: np.ndarray,
    n_basis: int = 20,
    goal: np.ndarray | float | None = None,
    alpha_x: float = ALPHA_X,
    beta_x: float = BETA_X,
    alpha_k: float = ALPHA_K,
) -> ForcingTerm:
    """Fit forcing weights to a demonstration by locally weighted regression.

    The target force is recovered pointwise from finite-differenced
    velocity and acceleration; each basis weight is the weighted least
    squares solution of ``f_target(k) ~ w_i * k``. The demonstration
    duration becomes the time scale.
    """
    times = np.asarray(times, dtype=float)
    pos = np.asarray(positions, dtype=float)
    one_dof = pos.ndim == 1
    if one_dof:
        pos = pos[:, None]
    if times.ndim != 1 or times.size < 3 or pos.shape[0] != times.size:
        raise ValueError("demonstration needs at least 3 samples with matching times")
    dts = np.diff(times)
    if np.any(dts <= 0):
        raise ValueError("demonstration timestamps must be strictly increasing")
    g = pos[-1] if goal is None else np.broadcast_to(np.asarray(goal, dtype=float), pos.shape[1:])
    tau = times[-1] - times[0]

    vel = np.gradient(pos, times, axis=0)
    acc = np.gradient(vel, times, axis=0)
    z = tau * vel
    f_target = tau * tau * acc - alpha_x * (beta_x * (g - pos) - z)

    k = phase_profile(times, tau, alpha_k)
    centers, widths = basis_layout(n_basis, alpha_k)
    psi = np.exp(-widths[None, :] * (k[:, None] - centers[None, :]) ** 2)  # (T, N)
    # trapezoid-like sample weights for non-uniform sampling
    dt_w = np.gradient(times)
    num = (psi * (dt_w * k)[:, None]).T @ f_target  # (N, D)
    den = (psi * (dt_w * k * k)[:, None]).sum(axis=0)  # (N,)
    w = num / np.maximum(den, 1e-300)[:, None]
    if one_dof:
        w = w[:, 0]
    return ForcingTerm(w, centers, widths)


@dataclass
class DMP:
    """Multi-DoF discrete DMP: independent transformation systems, one phase."""

    start: np.ndarray
    goal: np.ndarray
    tau: float = 1.0
    forcing: ForcingTerm | None = None
    alpha_x: float = ALPHA_X
    beta_x: float = BETA_X
    alpha_k: float = ALPHA_K

    def __post_init__(self):
        self.start = np.atleast_1d(np.asarray(self.start, dtype=float))
        self.goal = np.atleast_1d(np.asarray(self.goal, dtype=float))

    @classmethod
    def from_demo(cls, times, positions, n_basis=20, **kw):
        pos = np.asarray(positions, dtype=float)
        f = fit_from_demo(times, pos, n_basis, **kw)
        if pos.ndim == 1:
            f = ForcingTerm(f.weights[:, None], f.centers, f.widths)
        tau = float(times[-1] - times[0])
        params = {k: v for k, v in kw.items() if k in ("alpha_x", "beta_x", "alpha_k")}
        return cls(np.atleast_1d(pos[0]), np.atleast_1d(pos[-1]), tau, f, **params)

    def initial_states(self, tau: float | None = None) -> tuple[PhaseState, TransformState]:
        tau = self.tau if tau is None else tau
        return (
            PhaseState(1.0, self.alpha_k, tau),
            TransformState(self.start.copy(), np.zeros_like(self.start), self.goal.copy(),
                           self.alpha_x, self.beta_x),
        )

    def force(self, k: float) -> np.ndarray:
        if self.forcing is None:
            return np.zeros_like(self.start)
        return np.asarray(eval_forcing(self.forcing, k)).reshape(self.start.shape)

    def rollout(self, duration: float | None = None, dt: float = DEFAULT_DT,
                tau: float | None = None, coupling=None):
        """Integrate for ``duration`` seconds (default ``tau``).

        ``coupling(x, xdot)`` may return an additive coupling force.
        Returns ``(times, positions, velocities)``.
        """
        tau = self.tau if tau is None else tau
        duration = tau if duration is None else duration
        n = int(round(duration / dt))
        s, t = self.initial_states(tau)
        xs = np.empty((n + 1, self.start.size))
        vs = np.empty_like(xs)
        xs[0], vs[0] = t.x, t.velocity(tau)
        for i in range(n):
            c = np.zeros_like(self.start) if coupling is None else coupling(t.x, t.velocity(tau))
            t = step_transform(t, s.k, self.force(s.k), c, dt, tau)
            s = step_canonical(s, dt)
            xs[i + 1], vs[i + 1] = t.x, t.velocity(tau)
        return np.arange(n + 1) * dt, xs, vs


@dataclass(frozen=True)
class LocalFrame:
    """Frame at the start with x towards the goal and z as close to up as possible."""

    origin: np.ndarray
    rotation: np.ndarray = field(repr=False)  # columns are the local axes in world coords

    @classmethod
    def from_start_goal(cls, start, goal, up=(0.0, 0.0, 1.0)) -> "LocalFrame":
        start = np.asarray(start, dtype=float)
        goal = np.asarray(goal, dtype=float)
        axis = goal - start
        n = np.linalg.norm(axis)
        if n < 1e-12:
            raise ValueError("degenerate frame: start and goal coincide")
        ex = axis / n
        up = np.asarray(up, dtype=float)
        ez = up - (up @ ex) * ex
        if np.linalg.norm(ez) < 1e-9:
            # start->goal is vertical; any horizontal direction maximises "up" equally
            trial = np.array([1.0, 0.0, 0.0]) if abs(ex[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
            ez = trial - (trial @ ex) * ex
        ez /= np.linalg.norm(ez)
        ey = np.cross(ez, ex)
        return cls(start, np.column_stack([ex, ey, ez]))

    def to_local(self, p_world) -> np.ndarray:
        return (np.asarray(p_world, dtype=float) - self.origin) @ self.rotation

    def from_local(self, p_local) -> np.ndarray:
        return np.asarray(p_local, dtype=float) @ self.rotation.T + self.origin

    def vec_to_local(self, v_world) -> np.ndarray:
        return np.asarray(v_world, dtype=float) @ self.rotation

    def vec_from_local(self, v_local) -> np.ndarray:
        return np.asarray(v_local, dtype=float) @ self.rotation.T


def to_local(frame: LocalFrame, p_world) -> np.ndarray:
    return frame.to_local(p_world)


def from_local(frame: LocalFrame, p_local) -> np.ndarray:
    return frame.from_local(p_local)


def scale_duration(tau_nominal: float, nominal_len: float, estimated_len: float) -> float:
    """Stretch the time scale by the estimated path-length ratio."""
    if nominal_len <= 0 or estimated_len <= 0:
        raise ValueError("path lengths must be positive")
    return tau_nominal * estimated_len / nominal_len


def load_demo(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Read a whitespace separated ``t x y z`` table."""
    data = np.loadtxt(path, ndmin=2)
    if data.shape[1] < 2:
        raise ValueError(f"{path}: expected time plus at least one position column")
    return data[:, 0], data[:, 1:]


def save_trajectory(path: str | Path, times: np.ndarray, positions: np.ndarray) -> None:
    np.savetxt(path, np.column_stack([times, positions]), fmt="%.9g")
