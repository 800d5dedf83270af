"""Experiment suites: familiar in-plane ellipses, novel 3D ellipsoids, dead-zone pair."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..coupling import ORIGINAL_BETA, ORIGINAL_GAMMA, batch_oa, batch_original
from ..dmp import ALPHA_K, ALPHA_X, BETA_X, DEFAULT_DT
from ..geometry.ellipsoid import Ellipsoid
from ..learning.dataset import scenario_obstacle
from ..scenario import Scenario
from .engine import episode_steps
from .episode import EpisodeOptions, Metrics, run_episode

FORMAT_VERSION = 1
CLEARANCE_LEVELS = (0.05, 0.10, 0.15, 0.20, 0.25)
NOVEL_BASELINES = (0.5, 1.0, 1.5, 2.0)
NOVEL_CLEARANCE = 0.15
EPISODE_HEADER = ["scenario_id", "collided", "clearance", "convergence", "tau"]


def familiar_setting(clearance: float | None, scale_tau: bool) -> str:
    model = "rc" if clearance is None else f"rc-delta-{clearance:.2f}"
    return f"{model}|{'scaled' if scale_tau else 'unscaled'}"


def gen_familiar_suite(n: int, seed: int = 0, semi_axis_range=(0.025, 0.25),
                       levels=CLEARANCE_LEVELS) -> list[Scenario]:
    """``n`` in-plane ellipses at the midpoint of a 1 m baseline, each run
    under the unconstrained model and every clearance level, with and
    without duration scaling (12 settings for the default levels)."""
    lo, hi = semi_axis_range
    streams = np.random.SeedSequence(seed).spawn(n)
    out = []
    for i, ss in enumerate(streams):
        lp = np.random.default_rng(ss).uniform(lo, hi, 2)
        ob = scenario_obstacle(lp, 1.0)
        for clearance in (None, *levels):
            for scale in (True, False):
                setting = familiar_setting(clearance, scale)
                out.append(Scenario([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], (ob,), clearance,
                                    seed=int(ss.generate_state(1)[0]), tau=1.0,
                                    scenario_id=f"{i:04d}|{setting}", setting=setting,
                                    scale_tau=scale))
    return out


def novel_obstacle(rng: np.random.Generator, baseline: float, semi_axis_range=(0.025, 0.25),
                   margin: float = 0.05, lateral: float = 0.4) -> Ellipsoid:
    """Axis-aligned ellipsoid whose body keeps ``margin`` from start and goal
    along x and stays inside ``[-lateral, lateral]`` in y and z."""
    lo, hi = semi_axis_range
    max_x = min(hi, baseline / 2 - margin)
    if max_x < lo:
        raise ValueError("baseline too short for the semi-axis range and margin")
    lam = np.array([rng.uniform(lo, max_x), rng.uniform(lo, hi), rng.uniform(lo, hi)])
    cx = rng.uniform(margin + lam[0], baseline - margin - lam[0])
    cy = rng.uniform(-1.0, 1.0) * (lateral - lam[1])
    cz = rng.uniform(-1.0, 1.0) * (lateral - lam[2])
    return Ellipsoid(np.array([cx, cy, cz]), lam)


def gen_novel_suite(n_per_baseline: int, seed: int = 0, baselines=NOVEL_BASELINES,
                    clearance: float = NOVEL_CLEARANCE) -> list[Scenario]:
    """Random 3D ellipsoids around straight baselines of several lengths."""
    out = []
    root = np.random.SeedSequence(seed)
    for b, sub in zip(baselines, root.spawn(len(baselines))):
        for i, ss in enumerate(sub.spawn(n_per_baseline)):
            ob = novel_obstacle(np.random.default_rng(ss), b)
            setting = f"goal-{b:.1f}m"
            out.append(Scenario([0.0, 0.0, 0.0], [b, 0.0, 0.0], (ob,), clearance,
                                seed=int(ss.generate_state(1)[0]), tau=1.0,
                                scenario_id=f"{setting}|{i:04d}", setting=setting))
    return out


def baseline_collides(sc: Scenario, n: int = 2001) -> bool:
    """Whether the straight start-goal segment touches an obstacle."""
    s = np.linspace(0.0, 1.0, n)[:, None]
    pts = sc.start + s * (sc.goal - sc.start)
    return any(bool(np.any(ob.inside_value(pts) <= 1.0)) for ob in sc.obstacles)


@dataclass
class SuiteResult:
    scenarios: list[Scenario]
    metrics: list[Metrics]

    def episode_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(EPISODE_HEADER)
        for sc, m in zip(self.scenarios, self.metrics):
            w.writerow([sc.scenario_id, int(m.collided), repr(float(m.clearance)),
                        repr(float(m.convergence)), repr(float(m.tau))])
        return buf.getvalue()

    def aggregate(self) -> dict:
        """Per-setting rows in scenario order of first appearance."""
        groups: dict[str, list[int]] = {}
        for i, sc in enumerate(self.scenarios):
            groups.setdefault(sc.setting or "all", []).append(i)
        rows = []
        for name, idx in groups.items():
            ms = [self.metrics[i] for i in idx]
            clr = np.array([m.clearance for m in ms])
            conv = np.array([m.convergence for m in ms])
            fin_c = clr[np.isfinite(clr)]
            fin_v = conv[np.isfinite(conv)]
            coll = int(sum(m.collided for m in ms))
            rows.append({
                "setting": name,
                "n": len(ms),
                "collisions": coll,
                "success_rate": 1.0 - coll / len(ms),
                "baseline_collisions": int(sum(baseline_collides(self.scenarios[i]) for i in idx)),
                "clearance_mean": _num(fin_c.mean()) if fin_c.size else None,
                "clearance_min": _num(fin_c.min()) if fin_c.size else None,
                "convergence_mean": _num(fin_v.mean()) if fin_v.size else None,
                "convergence_max": _num(fin_v.max()) if fin_v.size else None,
                "aborted": int(sum(m.aborted for m in ms)),
            })
        total_coll = sum(r["collisions"] for r in rows)
        n = len(self.metrics)
        return {"format_version": FORMAT_VERSION, "n": n, "collisions": total_coll,
                "success_rate": 1.0 - total_coll / n if n else None, "settings": rows}

    def write(self, csv_path, json_path) -> None:
        with open(csv_path, "w", newline="") as fh:
            fh.write(self.episode_csv())
        with open(json_path, "w") as fh:
            json.dump(self.aggregate(), fh, indent=2)
            fh.write("\n")


def _num(v) -> float:
    return float(round(float(v), 12))


def _episode_job(args):
    sc, models, opts = args
    return run_episode(sc, models, opts)[1]


def evaluate_suite(scenarios: list[Scenario], models, opts: EpisodeOptions = EpisodeOptions(),
                   jobs: int = 1) -> SuiteResult:
    """Run every scenario; ``models`` is a chain or ``{"rc": .., "rc-delta": ..}``.

    Episodes are independent and deterministic, so the worker count does
    not change the results.
    """
    if not scenarios:
        raise ValueError("empty suite")
    args = [(sc, models, opts) for sc in scenarios]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            metrics = list(pool.map(_episode_job, args, chunksize=max(1, len(args) // (4 * jobs))))
    else:
        metrics = [_episode_job(a) for a in args]
    return SuiteResult(list(scenarios), metrics)


# -- dead-zone comparison -------------------------------------------------

MATCHED_ALPHA = ORIGINAL_GAMMA / (ORIGINAL_BETA * math.e)  # peak of gamma*theta*exp(-beta*theta)


@dataclass
class DeadZoneResult:
    t: np.ndarray
    original: np.ndarray  # (n, 3)
    proposed: np.ndarray
    min_distance_original: float
    min_distance_proposed: float
    obstacle: np.ndarray
    radius: float

    @property
    def original_collides(self) -> bool:
        return self.min_distance_original < self.radius

    @property
    def proposed_collides(self) -> bool:
        return self.min_distance_proposed < self.radius


def compare_dead_zone(obstacle=(0.5, 0.0, 0.0), start=(0.0, 0.0, 0.0), goal=(1.0, 0.0, 0.0),
                      radius: float = 0.05, alpha: float = MATCHED_ALPHA,
                      psi: float = 1.0 / ORIGINAL_BETA, kappa: float = 0.0,
                      gamma: float = ORIGINAL_GAMMA, beta: float = ORIGINAL_BETA,
                      tau: float = 1.0, dt: float = DEFAULT_DT) -> DeadZoneResult:
    """Roll out the analytic and the dead-zone free term around a point obstacle.

    Gains are matched by default: the proposed term's peak ``alpha`` equals
    the original term's peak ``gamma / (beta e)`` and its bell width equals
    the original's peak heading ``1 / beta``. Both runs use the same unforced
    DMP. Distances are to the point; ``radius`` is the collision radius.
    """
    s = np.asarray(start, dtype=float)
    g = np.asarray(goal, dtype=float)
    p = np.asarray(obstacle, dtype=float)
    n_phase, n_settle = episode_steps(tau, dt, ALPHA_K)
    n = n_phase + n_settle
    h = dt / tau

    def roll(force):
        x = s.copy()
        z = np.zeros(3)
        path = np.empty((n + 1, 3))
        path[0] = x
        for i in range(n):
            v = z / tau
            c = force(p - x, v, float(np.linalg.norm(p - x)))
            zdot = ALPHA_X * (BETA_X * (g - x) - z) + c
            x = x + h * z
            z = z + h * zdot
            path[i + 1] = x
        return path

    orig = roll(lambda r, v, d: batch_original(r, v, gamma, beta))
    prop = roll(lambda r, v, d: batch_oa(r, v, d, alpha, psi, kappa))
    d_o = float(np.linalg.norm(orig - p, axis=1).min())
    d_p = float(np.linalg.norm(prop - p, axis=1).min())
    return DeadZoneResult(np.arange(n + 1) * dt, orig, prop, d_o, d_p, p, radius)


def steering_profile(theta, alpha: float = MATCHED_ALPHA, psi: float = 1.0 / ORIGINAL_BETA,
                     kappa: float = 0.0, d: float = 0.0, gamma: float = ORIGINAL_GAMMA,
                     beta: float = ORIGINAL_BETA) -> tuple[np.ndarray, np.ndarray]:
    """Per-step steering magnitude of both terms for a unit velocity and heading ``theta``."""
    theta = np.asarray(theta, dtype=float)
    v = np.tile([1.0, 0.0, 0.0], (theta.size, 1))
    rel = np.column_stack([np.cos(theta), np.sin(theta), np.zeros_like(theta)])
    orig = np.linalg.norm(batch_original(rel, v, gamma, beta), axis=1)
    prop = np.linalg.norm(batch_oa(rel, v, d, alpha, psi, kappa), axis=1)
    return orig, prop
