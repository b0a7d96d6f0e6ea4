"""Full near-field channel assembly: LOS, point scatterers, and per-surface
deterministic + stochastic reflection terms with link-budget scaling.

Amplitude convention: every component carries a 1/distance "spatial"
amplitude; the reference path gain sqrt(beta) at d_0 = 1 m converts spatial
amplitudes to channel units. Blockage applies to the LOS term only.
"""
from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from .stat_model import (SurfaceChannelStats, sample_stochastic,
                         surface_channel_stats)
from .surface import PlanarSurfaceSpec

# Above this pair count the stochastic term is drawn by summing independent
# cell phasors over the surface instead of factorizing the full covariance
# (the pairwise correlation quadrature grows quadratically in pairs).
MAX_COVARIANCE_PAIRS = 32


@dataclass(frozen=True)
class ArrayGeometry:
    """Antenna array as explicit element positions (N, 3)."""

    element_positions: np.ndarray

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.element_positions, dtype=float))
        if pos.shape[0] < 1 or pos.shape[1] != 3:
            raise ValueError("element_positions must be (N, 3) with N >= 1")
        if not np.all(np.isfinite(pos)):
            raise ValueError("non-finite element positions")
        object.__setattr__(self, "element_positions", pos)

    @property
    def n_elements(self) -> int:
        return self.element_positions.shape[0]

    @property
    def center(self) -> np.ndarray:
        return self.element_positions.mean(axis=0)

    @staticmethod
    def single(position) -> "ArrayGeometry":
        return ArrayGeometry(np.asarray(position, dtype=float)[None, :])

    @staticmethod
    def upa(center, n_axis1: int, n_axis2: int, spacing: float,
            axis1=(0.0, 1.0, 0.0), axis2=(0.0, 0.0, 1.0)) -> "ArrayGeometry":
        """Uniform planar array: n_axis1 x n_axis2 elements, row-major over
        (axis1, axis2), centered on `center`."""
        center = np.asarray(center, dtype=float)
        a1 = np.asarray(axis1, dtype=float)
        a2 = np.asarray(axis2, dtype=float)
        i1 = (np.arange(n_axis1) - (n_axis1 - 1) / 2.0) * spacing
        i2 = (np.arange(n_axis2) - (n_axis2 - 1) / 2.0) * spacing
        A, B = np.meshgrid(i1, i2, indexing="ij")
        pos = center[None, :] + A.reshape(-1, 1) * a1[None, :] + B.reshape(-1, 1) * a2[None, :]
        return ArrayGeometry(pos)


@dataclass(frozen=True)
class PointScatterer:
    """A point scatterer; amplitude None means "calibrate from the Ricean
    factor" at assembly time."""

    position: np.ndarray
    amplitude: complex | None = None

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        if self.amplitude is not None and not np.isfinite(abs(self.amplitude)):
            raise ValueError("non-finite scatterer amplitude")


@dataclass(frozen=True)
class LinkBudget:
    """Reference path loss (dB at 1 m), path-loss exponent, Ricean factor
    (LOS-to-scatter power, dB) and scalar blockage (dB <= 0) for one link."""

    beta_ref_db: float = 0.0
    path_loss_exponent: float = 2.0
    ricean_k_db: float = np.inf
    blockage_db: float = 0.0

    def __post_init__(self):
        if self.path_loss_exponent <= 0:
            raise ValueError("path_loss_exponent must be > 0")
        if self.blockage_db > 0:
            raise ValueError("blockage_db must be <= 0")

    @property
    def beta_amplitude(self) -> float:
        """Amplitude conversion sqrt(beta) from 1/distance units."""
        return 10.0 ** (self.beta_ref_db / 20.0)


def array_response(array: ArrayGeometry, point, wavelength: float) -> np.ndarray:
    """Near-field array response: exp(j*kappa*||u_i - point||) per element."""
    point = np.asarray(point, dtype=float)
    dists = np.linalg.norm(array.element_positions - point, axis=1)
    if np.any(dists == 0.0):
        raise ValueError("point coincides with an array element")
    return np.exp(2j * np.pi / wavelength * dists)


def los_matrix(tx: ArrayGeometry, rx: ArrayGeometry, wavelength: float) -> np.ndarray:
    """Normalized LOS matrix: [H]_{m,n} = exp(j*kappa*||u_rx,m - u_tx,n||)."""
    d = np.linalg.norm(rx.element_positions[:, None, :] - tx.element_positions[None, :, :],
                       axis=-1)
    if np.any(d == 0.0):
        raise ValueError("coincident Tx/Rx elements")
    return np.exp(2j * np.pi / wavelength * d)


def scatterer_matrix(s: PointScatterer, tx: ArrayGeometry, rx: ArrayGeometry,
                     wavelength: float) -> np.ndarray:
    """Rank-1 point-scatterer matrix a_rx(u_s) a_tx(u_s)^T."""
    a_rx = array_response(rx, s.position, wavelength)
    a_tx = array_response(tx, s.position, wavelength)
    return np.outer(a_rx, a_tx)


def _derived_seed(base_seed: int, *labels: str) -> int:
    h = zlib.crc32("|".join(labels).encode())
    return int(np.random.SeedSequence([base_seed & 0xFFFFFFFF, h]).generate_state(1)[0])


def _cell_sum_stochastic(surface: PlanarSurfaceSpec, tx: ArrayGeometry,
                         rx: ArrayGeometry, wavelength: float, power: float,
                         seed: int, grid: int = 48) -> np.ndarray:
    """Stochastic term for large arrays: independent complex-Gaussian phasors
    on a coarse surface grid, weighted by the diffuse amplitude kernel and
    normalized to per-entry variance `power`. The implied spatial correlation
    is the plane-wave quadrature of the diffuse field."""
    L1, L2 = surface.extent
    a = (np.arange(grid) + 0.5) * (L1 / grid) - L1 / 2.0
    b = (np.arange(grid) + 0.5) * (L2 / grid) - L2 / 2.0
    A, B = np.meshgrid(a, b, indexing="ij")
    pose = surface.pose
    pts = (pose.origin[None, :] + A.reshape(-1, 1) * pose.axis_u[None, :]
           + B.reshape(-1, 1) * pose.axis_v[None, :])
    d_tx = abs(pose.signed_distance(tx.center))
    d_rx = abs(pose.signed_distance(rx.center))
    r1sq = np.sum((pts - tx.center) ** 2, axis=1)
    r2sq = np.sum((rx.center - pts) ** 2, axis=1)
    w = (d_tx / r1sq) * (d_rx / r2sq)
    w = w / np.sqrt(np.sum(w**2))

    rng = np.random.default_rng(seed)
    C = pts.shape[0]
    g = (rng.standard_normal(C) + 1j * rng.standard_normal(C)) / np.sqrt(2.0)
    kappa = 2.0 * np.pi / wavelength
    r_rx = np.linalg.norm(rx.element_positions[:, None, :] - pts[None, :, :], axis=-1)
    r_tx = np.linalg.norm(pts[:, None, :] - tx.element_positions[None, :, :], axis=-1)
    F_rx = np.exp(1j * kappa * r_rx)              # (N_rx, C)
    F_tx = np.exp(1j * kappa * r_tx)              # (C, N_tx)
    H = (F_rx * (g * w)[None, :]) @ F_tx
    return np.sqrt(power) * H


@dataclass(frozen=True)
class LinkSpec:
    """One directed link in a scenario: endpoints plus the propagation
    environment it sees."""

    tx_array: str
    rx_array: str
    budget: LinkBudget = field(default_factory=LinkBudget)
    surfaces: tuple[str, ...] = ()
    scatterers: tuple[PointScatterer, ...] = ()


@dataclass
class Scenario:
    """Named arrays, surfaces, and links, plus the carrier."""

    carrier_frequency_hz: float
    arrays: dict[str, ArrayGeometry]
    surfaces: dict[str, PlanarSurfaceSpec]
    links: dict[str, LinkSpec]

    def __post_init__(self):
        if self.carrier_frequency_hz <= 0:
            raise ValueError("carrier_frequency_hz must be > 0")
        for name, link in self.links.items():
            for key in (link.tx_array, link.rx_array):
                if key not in self.arrays:
                    raise ValueError(f"link {name!r} references unknown array {key!r}")
            for s in link.surfaces:
                if s not in self.surfaces:
                    raise ValueError(f"link {name!r} references unknown surface {s!r}")

    @property
    def wavelength(self) -> float:
        return 299792458.0 / self.carrier_frequency_hz

    @property
    def wave_number(self) -> float:
        return 2.0 * np.pi / self.wavelength


def surface_term(surface: PlanarSurfaceSpec, tx: ArrayGeometry, rx: ArrayGeometry,
                 wavelength: float, seed: int | None) -> np.ndarray:
    """One surface's contribution in spatial-amplitude units:
    c_d(g) * H_d plus (when seed given and the surface is rough) a stochastic
    draw with per-entry variance stochastic_power."""
    n_pairs = tx.n_elements * rx.n_elements
    if n_pairs <= MAX_COVARIANCE_PAIRS:
        stats = surface_channel_stats(surface, tx.element_positions,
                                      rx.element_positions, wavelength)
        out = stats.c_d * stats.H_d
        if seed is not None and stats.stoch_power > 0:
            out = out + sample_stochastic(stats, seed)
        return out
    from .geometry import incidence_cosines
    from .stat_model import (deterministic_component, diffuse_power_limit,
                             roughness_factor, stochastic_power)
    c_d, H_d = deterministic_component(surface, tx.element_positions,
                                       rx.element_positions, wavelength)
    out = c_d * H_d
    if seed is not None and surface.sigma_z > 0:
        cos_tx, cos_rx = incidence_cosines(surface.pose, tx.center, rx.center)
        g = roughness_factor(2 * np.pi / wavelength, surface.sigma_z, cos_tx, cos_rx).g
        power = stochastic_power(g, diffuse_power_limit(surface, tx.center, rx.center,
                                                        wavelength))
        if power > 0:
            out = out + _cell_sum_stochastic(surface, tx, rx, wavelength, power, seed)
    return out


def assemble_channel(scenario: Scenario, link_name: str, seed: int) -> np.ndarray:
    """Assemble the full channel matrix of one link.

    H = c_0 * H_LOS + sum_s c_s * H_scr + sum_r (c_d,r * H_d + stochastic),
    deterministic given (scenario, link, seed). Smooth surfaces make the
    result seed-independent.
    """
    link = scenario.links[link_name]
    tx = scenario.arrays[link.tx_array]
    rx = scenario.arrays[link.rx_array]
    lam = scenario.wavelength
    budget = link.budget
    sqrt_beta = budget.beta_amplitude

    d0 = float(np.linalg.norm(rx.center - tx.center))
    c_0 = sqrt_beta * d0 ** (-budget.path_loss_exponent / 2.0) \
        * 10.0 ** (budget.blockage_db / 20.0)
    H = c_0 * los_matrix(tx, rx, lam)

    if link.scatterers:
        los_power = c_0**2
        k_lin = 10.0 ** (budget.ricean_k_db / 10.0)
        total_scatter = 0.0 if np.isinf(k_lin) else los_power / k_lin
        n_auto = sum(1 for s in link.scatterers if s.amplitude is None)
        rng = np.random.default_rng(_derived_seed(seed, link_name, "scatterers"))
        for s in link.scatterers:
            if s.amplitude is None:
                # equal power split of the Ricean scatter budget, random phase
                c_s = np.sqrt(total_scatter / n_auto) * np.exp(2j * np.pi * rng.uniform())
            else:
                c_s = s.amplitude
            H = H + c_s * scatterer_matrix(s, tx, rx, lam)

    for sname in link.surfaces:
        surf = scenario.surfaces[sname]
        sseed = _derived_seed(seed, link_name, "surface", sname)
        H = H + sqrt_beta * surface_term(surf, tx, rx, lam, sseed)
    return H


def dump_channel_csv(H: np.ndarray, path) -> None:
    """Channel matrix as CSV rows m, n, re, im."""
    import csv
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["m", "n", "re", "im"])
        for m in range(H.shape[0]):
            for n in range(H.shape[1]):
                w.writerow([m, n, f"{H[m, n].real:.12g}", f"{H[m, n].imag:.12g}"])


def dump_channel_binary(H: np.ndarray, path) -> None:
    """Compact dump: two little-endian int64 dims, then row-major complex128."""
    with open(path, "wb") as f:
        f.write(struct.pack("<qq", H.shape[0], H.shape[1]))
        np.ascontiguousarray(H, dtype=np.complex128).tofile(f)


def load_channel_binary(path) -> np.ndarray:
    with open(path, "rb") as f:
        rows, cols = struct.unpack("<qq", f.read(16))
        data = np.fromfile(f, dtype=np.complex128, count=rows * cols)
    return data.reshape(rows, cols)
