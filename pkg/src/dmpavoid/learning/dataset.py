"""Synthetic (descriptor, clearance) -> coupling-parameter data by exhaustive rollout.

Each scenario is an ellipse lying in the local xz-plane, centred on the
midpoint of a straight start-goal baseline along local x. The first
descriptor entry is the semi-axis along the baseline, the second the one
across it. Every cell of an (alpha, psi, kappa) grid is rolled out and the
collision-free ones are kept together with their measured clearance.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..dmp import ALPHA_K, ALPHA_X, BETA_X, DEFAULT_DT
from ..geometry.ellipsoid import Ellipsoid
from ..sim.engine import rollout_batch

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
CSV_HEADER = ["lp1", "lp2", "clearance", "alpha", "psi", "kappa"]
# rollouts still this far from the goal at the end are not admitted (metres)
DEFAULT_MAX_CONVERGENCE = 0.003
DEFAULT_GAINS = (ALPHA_X, BETA_X, ALPHA_K)  # alpha_x, beta_x, alpha_k


@dataclass(frozen=True)
class GridAxis:
    """One parameter axis; ``log`` selects geometric spacing."""

    low: float
    high: float
    n: int
    log: bool = False

    def values(self) -> np.ndarray:
        if self.n < 1 or not (0 < self.low <= self.high):
            raise ValueError(f"bad grid axis {self}")
        if self.log:
            return np.geomspace(self.low, self.high, self.n)
        return np.linspace(self.low, self.high, self.n)


@dataclass(frozen=True)
class ParamGrid:
    alpha: GridAxis = GridAxis(1.0, 1000.0, 50, log=True)
    psi: GridAxis = GridAxis(0.05, np.pi / 2, 50)
    kappa: GridAxis = GridAxis(1.0, 500.0, 50, log=True)

    @classmethod
    def uniform(cls, n: int) -> "ParamGrid":
        d = cls()
        return cls(GridAxis(d.alpha.low, d.alpha.high, n, True),
                   GridAxis(d.psi.low, d.psi.high, n),
                   GridAxis(d.kappa.low, d.kappa.high, n, True))

    def cells(self) -> np.ndarray:
        """All (alpha, psi, kappa) triples, shape (n_a * n_p * n_k, 3)."""
        A, P, K = np.meshgrid(self.alpha.values(), self.psi.values(), self.kappa.values(),
                              indexing="ij")
        return np.column_stack([A.ravel(), P.ravel(), K.ravel()])

    def bounds(self) -> np.ndarray:
        """Rows (low, high) for alpha, psi, kappa."""
        return np.array([[a.low, a.high] for a in (self.alpha, self.psi, self.kappa)])


@dataclass(frozen=True)
class Sample:
    lambda_p: tuple[float, float]
    clearance: float
    targets: tuple[float, float, float]  # kappa, psi, alpha


@dataclass
class Dataset:
    """Column store of retained rows; ``scenario`` indexes the source scenario."""

    lp: np.ndarray  # (n, 2)
    clearance: np.ndarray
    alpha: np.ndarray
    psi: np.ndarray
    kappa: np.ndarray
    scenario: np.ndarray | None = None

    def __len__(self):
        return self.clearance.size

    def __getitem__(self, i) -> Sample:
        return Sample((float(self.lp[i, 0]), float(self.lp[i, 1])), float(self.clearance[i]),
                      (float(self.kappa[i]), float(self.psi[i]), float(self.alpha[i])))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.lp[idx], self.clearance[idx], self.alpha[idx], self.psi[idx],
                       self.kappa[idx], None if self.scenario is None else self.scenario[idx])

    @classmethod
    def concat(cls, parts: list["Dataset"]) -> "Dataset":
        if not parts:
            e = np.empty(0)
            return cls(np.empty((0, 2)), e, e.copy(), e.copy(), e.copy(), np.empty(0, dtype=int))
        sc = None
        if all(p.scenario is not None for p in parts):
            sc = np.concatenate([p.scenario for p in parts])
        return cls(np.concatenate([p.lp for p in parts]),
                   *(np.concatenate([getattr(p, f) for p in parts])
                     for f in ("clearance", "alpha", "psi", "kappa")), sc)

    def features(self, with_clearance: bool) -> np.ndarray:
        return np.column_stack([self.lp, self.clearance]) if with_clearance else self.lp.copy()


def scenario_obstacle(lp, baseline: float = 1.0) -> Ellipsoid:
    """Training ellipsoid for descriptor ``lp``: ``lp[0]`` along x, ``lp[1]`` along z.

    Rollouts never leave the xz-plane and the nearest surface point of an
    in-plane query has y=0, so the out-of-plane semi-axis (set to the larger
    of the two) has no effect on the outcome.
    """
    lp = np.asarray(lp, dtype=float)
    return Ellipsoid(np.array([baseline / 2, 0.0, 0.0]), np.array([lp[0], lp.max(), lp[1]]))


def sample_descriptors(n: int, semi_axis_range=(0.025, 0.25), seed=0) -> np.ndarray:
    """Per-scenario descriptors, each drawn from its own seeded sub-stream."""
    lo, hi = semi_axis_range
    if not (0 < lo <= hi):
        raise ValueError("semi-axis range must be positive and ordered")
    streams = np.random.SeedSequence(seed).spawn(n)
    return np.array([np.random.default_rng(s).uniform(lo, hi, 2) for s in streams]).reshape(n, 2)


def explore_scenario(lp, cells: np.ndarray, baseline: float = 1.0, dt: float = DEFAULT_DT,
                     max_convergence: float | None = DEFAULT_MAX_CONVERGENCE,
                     gains=DEFAULT_GAINS) -> Dataset:
    """Roll out every grid cell for one descriptor and keep the collision-free ones.

    With ``max_convergence`` set, rollouts ending further than that from
    the goal are dropped as well.
    """
    ob = scenario_obstacle(lp, baseline)
    res = rollout_batch([0.0, 0.0, 0.0], [baseline, 0.0, 0.0], [ob],
                        cells[:, 0], cells[:, 1], cells[:, 2], dt=dt,
                        alpha_x=gains[0], beta_x=gains[1], alpha_k=gains[2])
    keep = ~res.collided & np.isfinite(res.clearance) & (res.clearance > 0)
    if max_convergence is not None:
        keep &= res.convergence <= max_convergence
    n = int(keep.sum())
    return Dataset(np.tile(np.asarray(lp, dtype=float), (n, 1)), res.clearance[keep],
                   cells[keep, 0], cells[keep, 1], cells[keep, 2])


def _explore_job(args):
    i, lp, cells, baseline, dt, max_conv, gains = args
    part = explore_scenario(lp, cells, baseline, dt, max_conv, gains)
    part.scenario = np.full(len(part), i, dtype=int)
    return part


def gen_dataset(n_scenarios: int, grid: ParamGrid | None = None, baseline: float = 1.0,
                semi_axis_range=(0.025, 0.25), seed: int = 0, jobs: int = 1,
                dt: float = DEFAULT_DT,
                max_convergence: float | None = DEFAULT_MAX_CONVERGENCE,
                gains=DEFAULT_GAINS) -> Dataset:
    """Explore the coupling parameter space over ``n_scenarios`` random ellipses.

    Scenarios with no collision-free cell are logged and skipped. Results
    do not depend on ``jobs``: each scenario has its own seeded stream and
    parts are concatenated in scenario order.
    """
    grid = grid or ParamGrid()
    cells = grid.cells()
    lps = sample_descriptors(n_scenarios, semi_axis_range, seed)
    jobs_args = [(i, lps[i], cells, baseline, dt, max_convergence, gains) for i in range(n_scenarios)]
    if jobs > 1 and n_scenarios > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_explore_job, jobs_args))
    else:
        parts = [_explore_job(a) for a in jobs_args]
    for i, p in enumerate(parts):
        if len(p) == 0:
            log.warning("scenario %d (lp=%s) retained no collision-free cell; skipped", i, lps[i])
    return Dataset.concat([p for p in parts if len(p)])


def replay_sample(sample: Sample, baseline: float = 1.0, dt: float = DEFAULT_DT):
    """Re-run the rollout behind a stored sample; returns (clearance, collided)."""
    kappa, psi, alpha = sample.targets
    res = rollout_batch([0.0, 0.0, 0.0], [baseline, 0.0, 0.0],
                        [scenario_obstacle(sample.lambda_p, baseline)], alpha, psi, kappa, dt=dt)
    return float(res.clearance[0]), bool(res.collided[0])


def split_dataset(data: Dataset, fraction: float = 0.7, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Seeded shuffle, then the first ``fraction`` of rows go to training."""
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie in (0, 1)")
    perm = np.random.default_rng(seed).permutation(len(data))
    n_train = int(round(fraction * len(data)))
    return data.subset(np.sort(perm[:n_train])), data.subset(np.sort(perm[n_train:]))


def write_csv(data: Dataset, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# format_version={FORMAT_VERSION}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for i in range(len(data)):
            w.writerow([repr(float(v)) for v in (data.lp[i, 0], data.lp[i, 1], data.clearance[i],
                                                  data.alpha[i], data.psi[i], data.kappa[i])])


def read_csv(path) -> Dataset:
    """Load a dataset CSV; raises ValueError on a malformed file."""
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    version = None
    while lines and lines[0].startswith("#"):
        key, _, val = lines.pop(0)[1:].strip().partition("=")
        if key.strip() == "format_version":
            version = int(val)
    if version is not None and version > FORMAT_VERSION:
        raise ValueError(f"{path}: dataset format_version {version} is newer than {FORMAT_VERSION}")
    rows = list(csv.reader(lines))
    if not rows or [c.strip() for c in rows[0]] != CSV_HEADER:
        raise ValueError(f"{path}: expected header {','.join(CSV_HEADER)}")
    try:
        arr = np.array([[float(c) for c in r] for r in rows[1:] if r], dtype=float).reshape(-1, 6)
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric entry ({exc})") from None
    if arr.size and (not np.all(np.isfinite(arr)) or np.any(arr <= 0)):
        raise ValueError(f"{path}: every field must be finite and positive")
    return Dataset(arr[:, :2].copy(), arr[:, 2].copy(), arr[:, 3].copy(), arr[:, 4].copy(),
                   arr[:, 5].copy())
