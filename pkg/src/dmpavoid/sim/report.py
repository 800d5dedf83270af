"""Plot files for suite results, the dead-zone pair and cost rings."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_suite(result, path, title: str = "") -> Path:
    """Boxplots of clearance and convergence per setting."""
    groups: dict[str, list[int]] = {}
    for i, sc in enumerate(result.scenarios):
        groups.setdefault(sc.setting or "all", []).append(i)
    names = list(groups)
    clr = [[result.metrics[i].clearance for i in groups[k]
            if np.isfinite(result.metrics[i].clearance)] for k in names]
    conv = [[result.metrics[i].convergence for i in groups[k]
             if np.isfinite(result.metrics[i].convergence)] for k in names]
    fig, axes = plt.subplots(2, 1, figsize=(max(6, 0.7 * len(names)), 7), sharex=True)
    axes[0].boxplot(clr, showfliers=True)
    axes[0].set_ylabel("clearance [m]")
    axes[1].boxplot(conv, showfliers=True)
    axes[1].set_ylabel("convergence [m]")
    axes[1].set_xticks(range(1, len(names) + 1), names, rotation=60, ha="right")
    if title:
        axes[0].set_title(title)
    for ax in axes:
        ax.grid(alpha=0.3)
    return _save(fig, path)


def plot_dead_zone(res, path) -> Path:
    """Top view (x-z) of both rollouts around the point obstacle."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(res.original[:, 0], res.original[:, 2], label="original term")
    ax.plot(res.proposed[:, 0], res.proposed[:, 2], label="proposed term")
    circ = plt.Circle((res.obstacle[0], res.obstacle[2]), res.radius, color="k", alpha=0.2)
    ax.add_patch(circ)
    ax.plot(res.obstacle[0], res.obstacle[2], "k.")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("z [m]")
    ax.set_aspect("equal")
    ax.legend(loc="upper right", fontsize=8)
    return _save(fig, path)


def plot_steering(theta, original, proposed, path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(theta, original, label="original")
    ax.plot(theta, proposed, label="proposed")
    ax.set_xlabel("heading angle [rad]")
    ax.set_ylabel("steering magnitude")
    ax.legend()
    ax.grid(alpha=0.3)
    return _save(fig, path)


def plot_ring(ring, path, selected: float | None = None) -> Path:
    """Polar plot of the per-direction costs."""
    fig = plt.figure(figsize=(4.5, 4.5))
    ax = fig.add_subplot(projection="polar")
    om = np.append(ring.omega, ring.omega[0])
    for name in ("table", "length", "limits"):
        val = getattr(ring, name)
        ax.plot(om, np.append(val, val[0]), label=name)
    tot = ring.total
    ax.plot(om, np.append(tot, tot[0]), "k", lw=2, label="total")
    if selected is not None:
        ax.plot([selected, selected], [0, tot.max()], "r--", label="selected")
    ax.legend(loc="lower left", bbox_to_anchor=(1.0, 0.0), fontsize=8)
    return _save(fig, path)


def plot_trajectories(trajs: dict, sc, path, plane: str = "xz") -> Path:
    """Paths of several labelled trajectories with obstacle outlines."""
    i, j = {"xy": (0, 1), "xz": (0, 2), "yz": (1, 2)}[plane]
    fig, ax = plt.subplots(figsize=(6, 4))
    phi = np.linspace(0, 2 * np.pi, 200)
    for ob in sc.obstacles:
        # outline of the section through the centre parallel to the view plane
        sub = ob.shape_matrix()[np.ix_([i, j], [i, j])]
        w, V = np.linalg.eigh(sub)
        pts = (V * (1.0 / np.sqrt(w))) @ np.vstack([np.cos(phi), np.sin(phi)])
        ax.fill(ob.center[i] + pts[0], ob.center[j] + pts[1], color="0.7", alpha=0.6)
    for label, tr in trajs.items():
        ax.plot(tr.x[:, i], tr.x[:, j], label=label)
    if sc.workspace is not None and sc.workspace.table_height is not None and j == 2:
        ax.axhline(sc.workspace.table_height, color="brown", ls="--", label="table")
    ax.plot(*sc.start[[i, j]], "go")
    ax.plot(*sc.goal[[i, j]], "r*")
    ax.set_xlabel(f"{plane[0]} [m]")
    ax.set_ylabel(f"{plane[1]} [m]")
    ax.set_aspect("equal")
    ax.legend(fontsize=8)
    return _save(fig, path)
