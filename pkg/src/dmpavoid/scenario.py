"""Scenario and workspace descriptions shared by route selection and simulation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .dmp import LocalFrame
from .geometry.ellipsoid import Ellipsoid


@dataclass(frozen=True)
class WorkspaceModel:
    """Table top (world z, everything below is forbidden) and a reachable sphere."""

    table_height: float | None = None
    center: np.ndarray = field(default_factory=lambda: np.zeros(3))
    radius: float = np.inf

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if not self.radius > 0:
            raise ValueError("workspace radius must be positive")

    def below_table(self, p_world) -> np.ndarray:
        p = np.asarray(p_world, dtype=float)
        if self.table_height is None:
            return np.zeros(p.shape[:-1], dtype=bool)
        return p[..., 2] < self.table_height

    def outside(self, p_world) -> np.ndarray:
        p = np.asarray(p_world, dtype=float)
        return np.linalg.norm(p - self.center, axis=-1) > self.radius

    def to_dict(self) -> dict:
        d = {"center": self.center.tolist()}
        if self.table_height is not None:
            d["table_height"] = self.table_height
        if np.isfinite(self.radius):
            d["radius"] = self.radius
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "WorkspaceModel":
        return cls(d.get("table_height"), d.get("center", [0.0, 0.0, 0.0]),
                   float(d.get("radius", np.inf)))


@dataclass(frozen=True)
class Scenario:
    """One start-to-goal episode setting in world coordinates.

    ``obstacles`` are the dilated ellipsoids the system must avoid (the
    system is then a point); ``raw_obstacles`` optionally keeps the
    undilated bodies for plotting. ``clearance`` is the requested Delta;
    ``None`` selects the unconstrained model. ``scale_tau`` overrides the
    episode option when set, and ``setting`` labels suite groupings.
    """

    start: np.ndarray
    goal: np.ndarray
    obstacles: tuple[Ellipsoid, ...] = ()
    clearance: float | None = None
    workspace: WorkspaceModel | None = None
    seed: int = 0
    tau: float = 1.0
    scenario_id: str = "0"
    setting: str = ""
    scale_tau: bool | None = None
    raw_obstacles: tuple[Ellipsoid, ...] = ()

    def __post_init__(self):
        s = np.asarray(self.start, dtype=float)
        g = np.asarray(self.goal, dtype=float)
        if s.shape != (3,) or g.shape != (3,):
            raise ValueError("start and goal need three coordinates")
        if np.linalg.norm(g - s) < 1e-12:
            raise ValueError("start and goal coincide")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.clearance is not None and not self.clearance > 0:
            raise ValueError("clearance target must be positive")
        object.__setattr__(self, "start", s)
        object.__setattr__(self, "goal", g)
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        object.__setattr__(self, "raw_obstacles", tuple(self.raw_obstacles))

    @property
    def frame(self) -> LocalFrame:
        return LocalFrame.from_start_goal(self.start, self.goal)

    @property
    def baseline(self) -> float:
        return float(np.linalg.norm(self.goal - self.start))

    def local_obstacles(self) -> list[Ellipsoid]:
        f = self.frame
        return [ob.transformed(f.rotation, f.origin) for ob in self.obstacles]

    def to_dict(self) -> dict:
        d = {
            "id": self.scenario_id,
            "start": self.start.tolist(),
            "goal": self.goal.tolist(),
            "obstacles": [ob.to_dict() for ob in self.obstacles],
            "clearance": self.clearance,
            "seed": self.seed,
            "tau": self.tau,
        }
        if self.workspace is not None:
            d["workspace"] = self.workspace.to_dict()
        if self.setting:
            d["setting"] = self.setting
        if self.scale_tau is not None:
            d["scale_tau"] = self.scale_tau
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        ws = d.get("workspace")
        return cls(
            start=d["start"],
            goal=d["goal"],
            obstacles=tuple(Ellipsoid.from_dict(o) for o in d.get("obstacles", [])),
            clearance=d.get("clearance"),
            workspace=None if ws is None else WorkspaceModel.from_dict(ws),
            seed=int(d.get("seed", 0)),
            tau=float(d.get("tau", 1.0)),
            scenario_id=str(d.get("id", "0")),
            setting=d.get("setting", ""),
            scale_tau=d.get("scale_tau"),
        )


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        return Scenario.from_dict(json.load(fh))


def save_scenario(sc: Scenario, path) -> None:
    with open(path, "w") as fh:
        json.dump(sc.to_dict(), fh, indent=2)
