"""Brute-force reflection integral over rough-surface realizations.

Sums secondary spherical waves over every quadrature cell of the surface
(midpoint rule); this is the ground-truth oracle against which the closed-form
statistical model is checked.
"""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .surface import PlanarSurfaceSpec, RoughRealization, sample_realization

MAX_STEP_FRACTION = 1.0 / 8.0  # grid_step must be <= lambda/8


def _check_sides(spec: PlanarSurfaceSpec, tx_points: np.ndarray, rx_points: np.ndarray) -> None:
    pose = spec.pose
    s_tx = (np.atleast_2d(tx_points) - pose.origin) @ pose.unit_normal
    s_rx = (np.atleast_2d(rx_points) - pose.origin) @ pose.unit_normal
    if np.any(s_tx == 0.0) or np.any(s_rx == 0.0):
        raise ValueError("grazing geometry: antenna on the surface plane")
    if np.any(np.sign(s_tx)[:, None] != np.sign(s_rx)[None, :]):
        raise ValueError("no reflection path: Tx and Rx on opposite sides of the surface plane")


def _displaced_points(realization: RoughRealization) -> np.ndarray:
    spec = realization.spec
    pts, _ = spec.cell_centers(realization.wavelength)
    return pts + realization.heights.reshape(-1, 1) * spec.pose.unit_normal[None, :]


def hf_integral(realization: RoughRealization, u_tx: np.ndarray, u_rx: np.ndarray,
                wavelength: float) -> complex:
    """Reflection integral for one Tx/Rx pair over one realization.

    value = (zeta / (j*lambda)) * sum_cells (d_tx/r1^2)(d_rx/r2^2)
            * exp(j*kappa*(r1 + r2)) * dA,
    with r1, r2 the exact distances to the height-displaced cell centers and
    d_tx, d_rx the perpendicular antenna distances from the mean plane.
    """
    return hf_integral_matrix(realization, np.asarray(u_tx, dtype=float)[None, :],
                              np.asarray(u_rx, dtype=float)[None, :], wavelength)[0, 0]


def hf_integral_matrix(realization: RoughRealization, tx_positions: np.ndarray,
                       rx_positions: np.ndarray, wavelength: float) -> np.ndarray:
    """(N_rx, N_tx) matrix of reflection integrals sharing one realization."""
    spec = realization.spec
    step = spec.step_for(wavelength)
    if step > wavelength * MAX_STEP_FRACTION + 1e-15:
        raise ValueError(
            f"quadrature resolution: grid step {step:.4g} m exceeds lambda/8 "
            f"= {wavelength * MAX_STEP_FRACTION:.4g} m")
    tx_positions = np.atleast_2d(np.asarray(tx_positions, dtype=float))
    rx_positions = np.atleast_2d(np.asarray(rx_positions, dtype=float))
    _check_sides(spec, tx_positions, rx_positions)

    kappa = 2.0 * np.pi / wavelength
    pts = _displaced_points(realization)
    pose = spec.pose
    d_tx = np.abs((tx_positions - pose.origin) @ pose.unit_normal)
    d_rx = np.abs((rx_positions - pose.origin) @ pose.unit_normal)

    # Cache the Tx-side factor per transmit antenna, then sweep receivers.
    prefactor = spec.zeta / (1j * wavelength) * step * step
    out = np.empty((rx_positions.shape[0], tx_positions.shape[0]), dtype=complex)
    tx_terms = []
    for n in range(tx_positions.shape[0]):
        r1 = np.linalg.norm(pts - tx_positions[n], axis=1)
        tx_terms.append((d_tx[n] / r1**2) * np.exp(1j * kappa * r1))
    for m in range(rx_positions.shape[0]):
        r2 = np.linalg.norm(rx_positions[m] - pts, axis=1)
        rx_term = (d_rx[m] / r2**2) * np.exp(1j * kappa * r2)
        for n in range(tx_positions.shape[0]):
            out[m, n] = prefactor * np.sum(tx_terms[n] * rx_term)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite reflection integral")
    return out


def monte_carlo_channel(spec: PlanarSurfaceSpec, tx_positions, rx_positions,
                        wavelength: float, n_realizations: int, base_seed: int,
                        workers: int = 1) -> list[np.ndarray]:
    """One (N_rx, N_tx) oracle matrix per realization, seeds base_seed + i.

    Deterministic given base_seed, independent of the worker count (results
    are collected in realization order).
    """
    if n_realizations < 1:
        raise ValueError("n_realizations must be >= 1")
    tx_positions = np.atleast_2d(np.asarray(tx_positions, dtype=float))
    rx_positions = np.atleast_2d(np.asarray(rx_positions, dtype=float))

    def one(i: int) -> np.ndarray:
        realization = sample_realization(spec, wavelength, base_seed + i)
        return hf_integral_matrix(realization, tx_positions, rx_positions, wavelength)

    if workers <= 1:
        return [one(i) for i in range(n_realizations)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(n_realizations)))


def dump_samples_csv(samples: list[np.ndarray], base_seed: int, path) -> None:
    """Per-realization complex entries as CSV: seed, m, n, re, im."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["seed", "m", "n", "re", "im"])
        for i, mat in enumerate(samples):
            for m in range(mat.shape[0]):
                for n in range(mat.shape[1]):
                    w.writerow([base_seed + i, m, n,
                                f"{mat[m, n].real:.12g}", f"{mat[m, n].imag:.12g}"])
