"""End-to-end acceptance gate: the eight headline claims of the model,
verified against the brute-force reflection oracle or by direct property
checks at desk scale. Each test prints a single PASS/FAIL line."""
import os

import numpy as np
import pytest

from surfchan.channel import ArrayGeometry, los_matrix
from surfchan.cli import (load_config, run_sum_rate, run_verify_correlation,
                          run_verify_distribution, run_verify_mean)
from surfchan.geometry import PlanePose, mirror_images, vec3
from surfchan.stat_model import (build_covariance, deterministic_component,
                                 sample_stochastic, surface_channel_stats)
from surfchan.surface import PlanarSurfaceSpec

THREADS = min(8, os.cpu_count() or 1)
LAM = 299792458.0 / 28e9
KAPPA = 2.0 * np.pi / LAM


def verdict(name: str, ok: bool) -> None:
    print(f"[acceptance] {name}: {'PASS' if ok else 'FAIL'}")
    assert ok


@pytest.fixture(scope="module")
def mean_report(tmp_path_factory):
    cfg = load_config(None)
    cfg["verify_mean"]["kappa_sigma_z_step"] = 0.5  # covers {0,0.5,1,2,3} and [0,5]
    out = tmp_path_factory.mktemp("mean")
    return run_verify_mean(cfg, seed=1234, realizations=100,
                           out_dir=str(out), threads=THREADS)


def test_acceptance_1_mean_decay_law(mean_report):
    ok = (mean_report.checks["mean_relative"]
          and mean_report.checks.get("mean_absolute_small_g", True))
    verdict("1 mean decay law e^{-g/2}, 100 samples, 5% rel / 0.02 abs", ok)


def test_acceptance_2_power_heuristic(mean_report):
    verdict("2 total-power heuristic within 20% over kappa*sigma_z in [0,5]",
            mean_report.checks["power_heuristic"])


def test_acceptance_3_gaussianity(tmp_path):
    cfg = load_config(None)
    cfg["verify_distribution"]["kappa_sigma_z_values"] = [0.5, 3.0]
    report = run_verify_distribution(cfg, seed=1234, realizations=500,
                                     out_dir=str(tmp_path), threads=THREADS)
    verdict("3 normality of 500 mean-removed samples at 1% significance",
            report.passed)


def test_acceptance_4_correlation_laws(tmp_path):
    cfg = load_config(None)
    report = run_verify_correlation(cfg, seed=777, realizations=300,
                                    out_dir=str(tmp_path), threads=THREADS)
    ok = (report.checks["closed_form_vs_numeric"]
          and report.checks["empirical_vs_closed_form"]
          and report.checks["aligned_ge_perpendicular"])
    verdict("4 correlation: sinc vs quadrature 1e-3, empirical 0.1, ordering", ok)


def test_acceptance_5_geometric_identities():
    rng = np.random.default_rng(2718)
    worst = 0.0
    for _ in range(100):
        n = rng.standard_normal(3)
        n /= np.linalg.norm(n)
        u = rng.standard_normal(3)
        u -= np.dot(u, n) * n
        u /= np.linalg.norm(u)
        pose = PlanePose(origin=rng.standard_normal(3) * 5.0, unit_normal=n,
                         axis_u=u, axis_v=np.cross(n, u))
        pts = rng.standard_normal((100, 3)) * 20.0
        worst = max(worst, float(np.max(np.abs(
            mirror_images(mirror_images(pts, pose), pose) - pts))))
    involution_ok = worst < 1e-12

    # specular phase: mirrored-Rx form vs mirrored-Tx form
    surf = PlanarSurfaceSpec(pose=PlanePose.xy_plane(), extent=(0.5, 0.5),
                             sigma_z=1e-3)
    two_form = 0.0
    for _ in range(100):
        tx = rng.uniform(-0.2, 0.2, (2, 3)) + [0, 0, 1.0]
        rx = rng.uniform(-0.2, 0.2, (2, 3)) + [0, 0, 0.7]
        _, H_rx = deterministic_component(surf, tx, rx, LAM)
        v_tx = mirror_images(tx, surf.pose)
        d = np.linalg.norm(rx[:, None, :] - v_tx[None, :, :], axis=-1)
        two_form = max(two_form, float(np.max(np.abs(H_rx - np.exp(1j * KAPPA * d)))))
    two_form_ok = two_form < 1e-12

    # LOS matrix vs its defining per-pair distance phases
    tx = ArrayGeometry.upa(vec3(0, 0, 0), 4, 4, LAM / 2)
    rx = ArrayGeometry.upa(vec3(3.0, 1.0, 0.5), 4, 2, LAM / 2)
    H = los_matrix(tx, rx, LAM)
    d = np.linalg.norm(rx.element_positions[:, None, :]
                       - tx.element_positions[None, :, :], axis=-1)
    los_ok = float(np.max(np.abs(H - np.exp(1j * KAPPA * d)))) < 1e-12 \
        and np.max(np.abs(los_matrix(rx, tx, LAM) - H.T)) < 1e-12

    verdict("5 geometric identities at 1e-12 (involution, two-form, LOS)",
            involution_ok and two_form_ok and los_ok)


def test_acceptance_6_covariance_soundness():
    surf = PlanarSurfaceSpec(pose=PlanePose.xy_plane(), extent=(0.5, 0.5),
                             sigma_z=3.0 / KAPPA)
    rng = np.random.default_rng(99)
    sound = True
    for method in ("numeric", "sinc"):
        for _ in range(3):
            tx = rng.uniform(-0.05, 0.05, (2, 3)) + [0, 0, 20.0]
            rx = rng.uniform(-0.05, 0.05, (2, 3)) + [0, 0, 1.2]
            R = build_covariance(surf, tx, rx, LAM, method=method)
            sound &= bool(np.allclose(R, R.conj().T))
            sound &= bool(np.allclose(np.diag(R).real, 1.0))
            sound &= bool(np.linalg.eigvalsh(R).min() >= -1e-6)

    d = 0.7 * LAM
    tx = np.array([[0.0, 0.0, 20.0]])
    rx = np.array([[-d, 0, 1.2], [0, 0, 1.2], [d, 0, 1.2], [2 * d, 0, 1.2]])
    stats = surface_channel_stats(surf, tx, rx, LAM)
    draws = np.array([sample_stochastic(stats, s).ravel() for s in range(10000)])
    emp = np.einsum("ki,kj->ij", draws, draws.conj()) / draws.shape[0] \
        / stats.stoch_power
    frob = np.linalg.norm(emp - stats.covariance) / np.linalg.norm(stats.covariance)
    verdict("6 covariance soundness and sampler 5% Frobenius over 10^4 draws",
            sound and frob < 0.05)


def test_acceptance_7_multi_user_experiment(tmp_path):
    cfg = load_config(None)
    cfg["sum_rate"]["transmit_power_dbm"] = [40.0]
    report = run_sum_rate(cfg, seed=2024, realizations=50,
                          out_dir=str(tmp_path), threads=THREADS)
    ok = (report.checks["ordering_nlos_nlos"]
          and report.checks["ordering_los_nlos"]
          and report.checks["nlos_los_matches_benchmark"]
          and report.checks["benchmark_saturates"])
    verdict("7 mode ordering and benchmark saturation over 50 draws", ok)


def test_acceptance_8_determinism(tmp_path):
    cfg = load_config(None)
    cfg["verify_mean"].update(kappa_sigma_z_max=1.0, kappa_sigma_z_step=0.5,
                              realizations=20)
    outs = []
    for name, threads in (("a", 1), ("b", THREADS), ("c", THREADS)):
        d = tmp_path / name
        d.mkdir()
        run_verify_mean(cfg, seed=5, realizations=None, out_dir=str(d),
                        threads=threads)
        outs.append((d / "verify_mean.csv").read_bytes())
    verdict("8 byte-identical CSVs across re-runs and thread counts",
            outs[0] == outs[1] == outs[2])
