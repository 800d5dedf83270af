"""Point clouds: dilation by the system's bounding box and plain-text I/O."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import ConvexHull, QhullError


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray
    frame: str = "world"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError("points must have shape (n, 3)")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.shape[0]


def dilation_offsets(half_extents) -> np.ndarray:
    """The 8 signed box corners followed by the 6 face centres."""
    h = np.asarray(half_extents, dtype=float)
    corners = np.array(list(itertools.product((-1.0, 1.0), repeat=3))) * h
    faces = np.vstack([np.diag(h), -np.diag(h)])
    return np.vstack([corners, faces])


def dilate_cloud(cloud: PointCloud, system_extents) -> PointCloud:
    """Grow the cloud by the system's axis-aligned box.

    Every point is kept and replicated at each corner and face-centre
    offset, a sampled Minkowski sum with the box.
    """
    h = np.asarray(system_extents, dtype=float)
    if h.shape != (3,) or np.any(h < 0):
        raise ValueError("system extents must be three non-negative half-lengths")
    if not np.any(h > 0):
        return PointCloud(cloud.points.copy(), cloud.frame)
    off = dilation_offsets(h)
    grown = (cloud.points[:, None, :] + off[None, :, :]).reshape(-1, 3)
    return PointCloud(np.vstack([cloud.points, grown]), cloud.frame)


def outer_points(cloud: PointCloud) -> PointCloud:
    """Convex-hull vertices of the cloud.

    A dilated cloud keeps its input and the inward replicas, which would
    pull a least-squares fit back inside the grown body; fitting the hull
    vertices targets the outer boundary only. Flat or tiny clouds are
    returned unchanged.
    """
    pts = cloud.points
    if len(pts) < 5:
        return PointCloud(pts.copy(), cloud.frame)
    try:
        idx = np.sort(ConvexHull(pts).vertices)
    except QhullError:
        return PointCloud(pts.copy(), cloud.frame)
    return PointCloud(pts[idx], cloud.frame)


def read_xyz(path: str | Path) -> PointCloud:
    """One point per line, whitespace separated; ``#`` comments allowed."""
    data = np.loadtxt(path, ndmin=2, comments="#")
    if data.shape[1] < 3:
        raise ValueError(f"{path}: expected at least 3 columns")
    return PointCloud(data[:, :3])


def read_ply(path: str | Path) -> PointCloud:
    """ASCII PLY with a vertex element carrying x, y, z properties."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != "ply":
        raise ValueError(f"{path}: not a PLY file")
    n_vertex = None
    props: list[str] = []
    in_vertex = False
    body_start = None
    for i, line in enumerate(lines[1:], start=1):
        tok = line.split()
        if not tok:
            continue
        if tok[0] == "format" and tok[1] != "ascii":
            raise ValueError(f"{path}: only ASCII PLY is supported")
        elif tok[0] == "element":
            in_vertex = tok[1] == "vertex"
            if in_vertex:
                n_vertex = int(tok[2])
        elif tok[0] == "property" and in_vertex:
            props.append(tok[-1])
        elif tok[0] == "end_header":
            body_start = i + 1
            break
    if n_vertex is None or body_start is None:
        raise ValueError(f"{path}: missing vertex element or header end")
    try:
        idx = [props.index(c) for c in ("x", "y", "z")]
    except ValueError as exc:
        raise ValueError(f"{path}: vertex element lacks x/y/z") from exc
    rows = [lines[body_start + j].split() for j in range(n_vertex)]
    data = np.array([[float(r[i]) for i in idx] for r in rows])
    return PointCloud(data.reshape(-1, 3))


def read_cloud(path: str | Path) -> PointCloud:
    path = Path(path)
    if path.suffix.lower() == ".ply":
        return read_ply(path)
    return read_xyz(path)


def write_xyz(path: str | Path, cloud: PointCloud) -> None:
    np.savetxt(path, cloud.points, fmt="%.17g")


def write_ply(path: str | Path, cloud: PointCloud) -> None:
    header = [
        "ply",
        "format ascii 1.0",
        f"element vertex {len(cloud)}",
        "property float x",
        "property float y",
        "property float z",
        "end_header",
    ]
    body = [" ".join(f"{v:.17g}" for v in p) for p in cloud.points]
    Path(path).write_text("\n".join(header + body) + "\n")
