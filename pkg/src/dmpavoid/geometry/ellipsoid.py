"""Plain ellipsoid obstacle: centre, semi-axes and orientation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distance import signed_distance
from .superquadric import Superquadric


@dataclass(frozen=True)
class Ellipsoid:
    """Ellipsoid ``(p - c)^T R diag(1/a^2) R^T (p - c) <= 1``.

    ``orientation`` columns are the body axes in the enclosing frame;
    ``None`` means axis-aligned.
    """

    center: np.ndarray
    semi_axes: np.ndarray
    orientation: np.ndarray | None = None

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        a = np.asarray(self.semi_axes, dtype=float)
        if c.shape != (3,) or a.shape != (3,):
            raise ValueError("centre and semi-axes need three entries each")
        if np.any(a <= 0) or not np.all(np.isfinite(a)):
            raise ValueError("ellipsoid semi-axes must be positive")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "semi_axes", a)
        if self.orientation is not None:
            R = np.asarray(self.orientation, dtype=float)
            if R.shape != (3, 3) or not np.allclose(R.T @ R, np.eye(3), atol=1e-9):
                raise ValueError("orientation must be a 3x3 rotation")
            object.__setattr__(self, "orientation", R)

    @property
    def rotation(self) -> np.ndarray:
        return np.eye(3) if self.orientation is None else self.orientation

    def shape_matrix(self) -> np.ndarray:
        R = self.rotation
        return R @ np.diag(1.0 / self.semi_axes**2) @ R.T

    def inside_value(self, p) -> np.ndarray:
        """Quadratic form value; ``<= 1`` inside or on the surface."""
        q = (np.asarray(p, dtype=float) - self.center) @ self.rotation
        return np.einsum("...i,i->...", q * q, 1.0 / self.semi_axes**2)

    def signed_distance(self, p) -> np.ndarray:
        return signed_distance(p, self.center, self.semi_axes, self.orientation)

    def support_point(self, direction) -> np.ndarray:
        """Surface point furthest along ``direction``."""
        u = np.asarray(direction, dtype=float)
        Ainv = np.linalg.inv(self.shape_matrix())
        w = Ainv @ u
        return self.center + w / np.sqrt(u @ w)

    def transformed(self, rotation, origin) -> "Ellipsoid":
        """Express in a frame whose axes are the columns of ``rotation``
        and whose origin is ``origin`` (both given in the current frame)."""
        rotation = np.asarray(rotation, dtype=float)
        c = (self.center - np.asarray(origin, dtype=float)) @ rotation
        return Ellipsoid(c, self.semi_axes, rotation.T @ self.rotation)

    def to_superquadric(self) -> Superquadric:
        return Superquadric(self.semi_axes, self.center, self.rotation)

    @classmethod
    def from_superquadric(cls, sq: Superquadric) -> "Ellipsoid":
        if not sq.is_ellipsoid:
            raise ValueError("superquadric is not an ellipsoid")
        return cls(sq.center, sq.semi_axes, sq.orientation)

    def to_dict(self) -> dict:
        d = {"center": self.center.tolist(), "semi_axes": self.semi_axes.tolist()}
        if self.orientation is not None:
            d["orientation"] = self.orientation.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Ellipsoid":
        return cls(d["center"], d["semi_axes"], d.get("orientation"))
