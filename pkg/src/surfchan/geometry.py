"""3-D vector algebra, plane poses, mirror imaging, and local spherical frames.

Points and displacements are plain numpy arrays of shape (3,), in meters.
Angles are in radians throughout; degrees appear only at the CLI boundary.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_ORTHO_TOL = 1e-12


def vec3(x: float, y: float, z: float) -> np.ndarray:
    """Build a finite 3-D point/displacement as a float64 array."""
    v = np.array([x, y, z], dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"non-finite vector components: {v}")
    return v


def _as_unit(v: np.ndarray, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if abs(n - 1.0) > 1e-9:
        raise ValueError(f"{name} must be a unit vector, got norm {n}")
    return v / n


@dataclass(frozen=True)
class PlanePose:
    """Placement of a finite planar surface: origin, unit normal, and two
    orthonormal in-plane axes spanning the surface rectangle."""

    origin: np.ndarray
    unit_normal: np.ndarray
    axis_u: np.ndarray
    axis_v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float))
        object.__setattr__(self, "unit_normal", _as_unit(self.unit_normal, "unit_normal"))
        object.__setattr__(self, "axis_u", _as_unit(self.axis_u, "axis_u"))
        object.__setattr__(self, "axis_v", _as_unit(self.axis_v, "axis_v"))
        if not np.all(np.isfinite(self.origin)):
            raise ValueError("non-finite plane origin")
        for a, b, names in (
            (self.unit_normal, self.axis_u, "normal/axis_u"),
            (self.unit_normal, self.axis_v, "normal/axis_v"),
            (self.axis_u, self.axis_v, "axis_u/axis_v"),
        ):
            if abs(float(np.dot(a, b))) > 1e-10:
                raise ValueError(f"{names} not orthogonal")

    @staticmethod
    def xy_plane(origin=(0.0, 0.0, 0.0)) -> "PlanePose":
        """Surface in the x-y plane with normal +z (the default orientation)."""
        return PlanePose(
            origin=vec3(*origin),
            unit_normal=vec3(0.0, 0.0, 1.0),
            axis_u=vec3(1.0, 0.0, 0.0),
            axis_v=vec3(0.0, 1.0, 0.0),
        )

    @staticmethod
    def vertical_x(x: float, center_y: float, center_z: float,
                   normal_sign: float = -1.0) -> "PlanePose":
        """Vertical wall at constant x, in-plane axes along y and z.

        ``normal_sign=-1`` points the normal toward -x (illuminating the
        half-space x < wall position).
        """
        return PlanePose(
            origin=vec3(x, center_y, center_z),
            unit_normal=vec3(float(np.sign(normal_sign)), 0.0, 0.0),
            axis_u=vec3(0.0, 1.0, 0.0),
            axis_v=vec3(0.0, 0.0, 1.0),
        )

    def signed_distance(self, p: np.ndarray) -> float:
        """Signed perpendicular distance of p from the plane (positive on the
        normal side)."""
        return float(np.dot(np.asarray(p, dtype=float) - self.origin, self.unit_normal))


@dataclass(frozen=True)
class LocalFrame:
    """Local spherical coordinate frame: origin plus the z-axis direction."""

    origin: np.ndarray
    z_axis: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float))
        object.__setattr__(self, "z_axis", _as_unit(self.z_axis, "z_axis"))


def mirror_image(p: np.ndarray, plane: PlanePose) -> np.ndarray:
    """Reflect point p across the plane. Involution: applying twice returns p."""
    p = np.asarray(p, dtype=float)
    d = np.dot(p - plane.origin, plane.unit_normal)
    return p - 2.0 * d * plane.unit_normal


def mirror_images(points: np.ndarray, plane: PlanePose) -> np.ndarray:
    """Vectorized mirror_image for an (N, 3) array of points."""
    points = np.asarray(points, dtype=float)
    d = (points - plane.origin) @ plane.unit_normal
    return points - 2.0 * d[..., None] * plane.unit_normal


def elevation_in_frame(u: np.ndarray, frame: LocalFrame) -> float:
    """Elevation angle of point u in the local frame, in [-pi/2, pi/2].

    Defined by sin(theta) = z_axis . (u - origin) / ||u - origin||, i.e. the
    signed angle between u - origin and the plane orthogonal to the z-axis.
    """
    r = np.asarray(u, dtype=float) - frame.origin
    n = np.linalg.norm(r)
    if n == 0.0:
        raise ValueError("coincident point: u equals the frame origin")
    s = np.clip(np.dot(r, frame.z_axis) / n, -1.0, 1.0)
    return float(np.arcsin(s))


def elevations_in_frame(points: np.ndarray, frame: LocalFrame) -> np.ndarray:
    """Vectorized elevation_in_frame for an (N, 3) array of points."""
    r = np.asarray(points, dtype=float) - frame.origin
    n = np.linalg.norm(r, axis=-1)
    if np.any(n == 0.0):
        raise ValueError("coincident point: a point equals the frame origin")
    s = np.clip((r @ frame.z_axis) / n, -1.0, 1.0)
    return np.arcsin(s)


def incidence_cosines(plane: PlanePose, u_tx: np.ndarray, u_rx: np.ndarray) -> tuple[float, float]:
    """Cosines of the incidence angles of Tx and Rx seen from the surface
    origin, each in (0, 1]. Raises on grazing geometry (point on the plane)."""
    out = []
    for p, name in ((u_tx, "tx"), (u_rx, "rx")):
        r = np.asarray(p, dtype=float) - plane.origin
        n = np.linalg.norm(r)
        c = abs(float(np.dot(r, plane.unit_normal))) / n
        if c == 0.0:
            raise ValueError(f"grazing geometry: {name} point lies on the surface plane")
        out.append(c)
    return out[0], out[1]


def specular_path(plane: PlanePose, u_tx: np.ndarray, u_rx: np.ndarray) -> tuple[float, float]:
    """Image-path length and specular obliquity cosine for a Tx/Rx pair.

    Returns (R, cos_spec) where R = ||mirror(u_rx) - u_tx|| and
    cos_spec = (d_tx + d_rx) / R with d the perpendicular distances. cos_spec
    is the incidence cosine at the specular point of the image path.
    """
    u_tx = np.asarray(u_tx, dtype=float)
    u_rx = np.asarray(u_rx, dtype=float)
    d_tx = abs(plane.signed_distance(u_tx))
    d_rx = abs(plane.signed_distance(u_rx))
    R = float(np.linalg.norm(mirror_image(u_rx, plane) - u_tx))
    return R, (d_tx + d_rx) / R
