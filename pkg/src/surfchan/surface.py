"""Rough planar surfaces and Gaussian height-field realizations.

A surface is a finite rectangle on an arbitrary plane with i.i.d. Gaussian
height perturbations per quadrature cell (an optional correlation length
smooths the field for sensitivity studies; the default is i.i.d.).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .geometry import PlanePose


@dataclass(frozen=True)
class PlanarSurfaceSpec:
    """A non-reconfigurable rough surface: placement, extent (L1 x L2 meters),
    roughness std sigma_z, passivity factor zeta in (0, 1], and the quadrature
    grid step."""

    pose: PlanePose
    extent: tuple[float, float]
    sigma_z: float
    zeta: float = 1.0
    grid_step: float = 0.0  # 0 means "choose lambda/10 at evaluation time"
    correlation_length: float = 0.0

    def __post_init__(self):
        L1, L2 = self.extent
        if not (L1 > 0 and L2 > 0):
            raise ValueError(f"surface extent must be positive, got {self.extent}")
        if not np.isfinite(self.sigma_z) or self.sigma_z < 0:
            raise ValueError(f"sigma_z must be finite and >= 0, got {self.sigma_z}")
        if not (0.0 < self.zeta <= 1.0):
            raise ValueError(f"zeta must be in (0, 1], got {self.zeta}")
        if self.grid_step < 0 or self.correlation_length < 0:
            raise ValueError("grid_step and correlation_length must be >= 0")

    @property
    def area(self) -> float:
        return self.extent[0] * self.extent[1]

    def step_for(self, wavelength: float) -> float:
        """Effective grid step: the configured one, or lambda/10 by default."""
        return self.grid_step if self.grid_step > 0 else wavelength / 10.0

    def grid_shape(self, wavelength: float) -> tuple[int, int]:
        step = self.step_for(wavelength)
        return (int(np.ceil(self.extent[0] / step)), int(np.ceil(self.extent[1] / step)))

    def cell_centers(self, wavelength: float) -> tuple[np.ndarray, float]:
        """Cell-center positions as an (n1*n2, 3) array plus the grid step.

        Centers are laid out on the plane via the in-plane axes, centered on
        the pose origin.
        """
        step = self.step_for(wavelength)
        n1, n2 = self.grid_shape(wavelength)
        a = (np.arange(n1) + 0.5) * step - self.extent[0] / 2.0
        b = (np.arange(n2) + 0.5) * step - self.extent[1] / 2.0
        A, B = np.meshgrid(a, b, indexing="ij")
        pts = (self.pose.origin[None, :]
               + A.reshape(-1, 1) * self.pose.axis_u[None, :]
               + B.reshape(-1, 1) * self.pose.axis_v[None, :])
        return pts, step


@dataclass(frozen=True)
class RoughRealization:
    """One sampled height field over the surface quadrature grid."""

    spec: PlanarSurfaceSpec
    wavelength: float
    heights: np.ndarray  # (n1, n2), meters, along the surface normal
    seed: int


def sample_realization(spec: PlanarSurfaceSpec, wavelength: float, seed: int) -> RoughRealization:
    """Draw a height-field realization. Deterministic given (spec, seed).

    Heights are i.i.d. N(0, sigma_z^2) per cell; with a positive
    correlation_length the field is smoothed by an isotropic Gaussian kernel
    and re-normalized to std sigma_z.
    """
    n1, n2 = spec.grid_shape(wavelength)
    rng = np.random.default_rng(seed)
    if spec.sigma_z == 0.0:
        heights = np.zeros((n1, n2))
    else:
        heights = rng.normal(0.0, spec.sigma_z, size=(n1, n2))
        if spec.correlation_length > 0:
            sigma_cells = spec.correlation_length / spec.step_for(wavelength)
            heights = gaussian_filter(heights, sigma=sigma_cells, mode="wrap")
            heights *= spec.sigma_z / heights.std()
    return RoughRealization(spec=spec, wavelength=wavelength, heights=heights, seed=seed)


def dump_realization_csv(realization: RoughRealization, path) -> None:
    """Write the realization as CSV with columns x, y, z (meters)."""
    spec = realization.spec
    pts, _ = spec.cell_centers(realization.wavelength)
    pts = pts + realization.heights.reshape(-1, 1) * spec.pose.unit_normal[None, :]
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["x", "y", "z"])
        for row in pts:
            w.writerow([f"{row[0]:.9g}", f"{row[1]:.9g}", f"{row[2]:.9g}"])
