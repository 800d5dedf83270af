from .cloud import PointCloud, dilate_cloud, outer_points, read_cloud, read_ply, read_xyz, write_ply, write_xyz
from .distance import signed_distance, surface_distance
from .ellipsoid import Ellipsoid
from .section import (
    EllipseSection,
    avoidance_side,
    estimate_path_length,
    extreme_point,
    polyline_length,
    section_pplane,
)
from .superquadric import (
    DegenerateCloudError,
    FitWarning,
    Superquadric,
    eval_F,
    fit_superquadric,
    sample_surface,
)

__all__ = [
    "DegenerateCloudError",
    "EllipseSection",
    "Ellipsoid",
    "FitWarning",
    "PointCloud",
    "Superquadric",
    "avoidance_side",
    "dilate_cloud",
    "estimate_path_length",
    "eval_F",
    "extreme_point",
    "fit_superquadric",
    "outer_points",
    "polyline_length",
    "read_cloud",
    "read_ply",
    "read_xyz",
    "sample_surface",
    "section_pplane",
    "signed_distance",
    "surface_distance",
    "write_ply",
    "write_xyz",
]
