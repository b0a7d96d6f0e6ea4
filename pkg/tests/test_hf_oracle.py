import numpy as np
import pytest

from surfchan.geometry import PlanePose, specular_path, vec3
from surfchan.hf_oracle import (dump_samples_csv, hf_integral,
                                hf_integral_matrix, monte_carlo_channel)
from surfchan.surface import PlanarSurfaceSpec, sample_realization

LAM = 299792458.0 / 28e9
KAPPA = 2.0 * np.pi / LAM


def flat_spec(extent=(0.5, 0.5), **kw):
    return PlanarSurfaceSpec(pose=PlanePose.xy_plane(), extent=extent,
                             sigma_z=0.0, **kw)


def test_grid_resolution_guard():
    spec = flat_spec(grid_step=LAM / 4.0)
    real = sample_realization(spec, LAM, 0)
    with pytest.raises(ValueError, match="quadrature resolution"):
        hf_integral(real, vec3(0, 0, 1.0), vec3(0, 0, 0.8), LAM)


def test_opposite_sides_rejected():
    real = sample_realization(flat_spec(), LAM, 0)
    with pytest.raises(ValueError, match="no reflection path"):
        hf_integral(real, vec3(0, 0, 1.0), vec3(0, 0, -1.0), LAM)
    with pytest.raises(ValueError, match="grazing"):
        hf_integral(real, vec3(0, 0, 1.0), vec3(0.1, 0, 0.0), LAM)


def test_flat_surface_matches_image_theory():
    """Stationary-phase geometry: the quadrature converges to the specular
    image path zeta * cos_spec * e^{j*kappa*R} / R (frozen: 1.2% deviation)."""
    spec = flat_spec(extent=(1.0, 1.0))
    tx, rx = vec3(0, 0, 0.5), vec3(0.08, 0, 0.4)
    val = hf_integral(sample_realization(spec, LAM, 0), tx, rx, LAM)
    R, cos_spec = specular_path(spec.pose, tx, rx)
    pred = cos_spec / R * np.exp(1j * KAPPA * R)
    assert abs(val / pred - 1.0) < 0.05


def test_zeta_scales_linearly():
    tx, rx = vec3(0, 0, 0.5), vec3(0.08, 0, 0.4)
    v1 = hf_integral(sample_realization(flat_spec(), LAM, 0), tx, rx, LAM)
    v2 = hf_integral(sample_realization(flat_spec(zeta=0.5), LAM, 0), tx, rx, LAM)
    assert v2 == pytest.approx(0.5 * v1)


def test_reciprocity():
    spec = PlanarSurfaceSpec(pose=PlanePose.xy_plane(), extent=(0.3, 0.3),
                             sigma_z=0.3e-3)
    real = sample_realization(spec, LAM, 7)
    tx, rx = vec3(0.05, -0.02, 0.6), vec3(-0.04, 0.1, 0.5)
    assert hf_integral(real, tx, rx, LAM) == pytest.approx(
        hf_integral(real, rx, tx, LAM))


def test_matrix_agrees_with_scalar_calls():
    spec = PlanarSurfaceSpec(pose=PlanePose.xy_plane(), extent=(0.3, 0.3),
                             sigma_z=0.2e-3)
    real = sample_realization(spec, LAM, 1)
    txs = np.array([[0.0, 0.0, 0.5], [0.01, 0.0, 0.5]])
    rxs = np.array([[0.0, 0.05, 0.4], [0.0, -0.05, 0.45], [0.02, 0.0, 0.5]])
    mat = hf_integral_matrix(real, txs, rxs, LAM)
    assert mat.shape == (3, 2)
    for m in range(3):
        for n in range(2):
            assert mat[m, n] == pytest.approx(
                hf_integral(real, txs[n], rxs[m], LAM))


def test_monte_carlo_deterministic_and_thread_invariant():
    spec = PlanarSurfaceSpec(pose=PlanePose.xy_plane(), extent=(0.2, 0.2),
                             sigma_z=0.5e-3)
    tx, rx = vec3(0, 0, 0.5), vec3(0, 0.03, 0.45)
    a = monte_carlo_channel(spec, tx, rx, LAM, 6, base_seed=10, workers=1)
    b = monte_carlo_channel(spec, tx, rx, LAM, 6, base_seed=10, workers=4)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)
    c = monte_carlo_channel(spec, tx, rx, LAM, 6, base_seed=11, workers=1)
    assert not np.array_equal(a[0], c[0])


def test_dump_samples_csv(tmp_path):
    spec = PlanarSurfaceSpec(pose=PlanePose.xy_plane(), extent=(0.2, 0.2),
                             sigma_z=0.5e-3)
    samples = monte_carlo_channel(spec, vec3(0, 0, 0.5), vec3(0, 0, 0.4),
                                  LAM, 3, base_seed=4)
    out = tmp_path / "samples.csv"
    dump_samples_csv(samples, 4, out)
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "seed,m,n,re,im"
    assert len(lines) == 4
    assert lines[1].startswith("4,0,0,")
