import numpy as np
import pytest

from surfchan.channel import ArrayGeometry
from surfchan.geometry import vec3
from surfchan.ris_sim import (RisConfig, evaluate_sum_rate, example_scenario,
                              focus_phases, parse_mode, plan_beams)

LAM = 299792458.0 / 28e9


def test_parse_mode():
    assert parse_mode("LOS-LOS") == ("los", "los")
    assert parse_mode("(n)LOS-(n)LOS") == ("nlos", "nlos")
    assert parse_mode("nlos-los") == ("nlos", "los")
    for bad in ("los", "los-los-los", "foo-bar"):
        with pytest.raises(ValueError, match="unknown mode"):
            parse_mode(bad)


def small_ris(n_side=4, n_tiles=2):
    arr = ArrayGeometry.upa(vec3(0, 0, 0), n_side, n_side, LAM / 2,
                            axis1=(0, 1, 0), axis2=(0, 0, 1))
    return RisConfig(array=arr, n_axis1=n_side, n_axis2=n_side,
                     n_tiles=n_tiles, unit_cell_area=(LAM / 2) ** 2)


def test_ris_config_validation():
    with pytest.raises(ValueError, match="equal the element count"):
        RisConfig(array=small_ris().array, n_axis1=3, n_axis2=4,
                  n_tiles=1, unit_cell_area=1e-4)
    with pytest.raises(ValueError, match="divide"):
        small_ris(n_side=4, n_tiles=3)


def test_half_wavelength_cell_gain_is_pi():
    assert small_ris().element_gain(LAM) == pytest.approx(np.pi)


def test_tiles_partition_the_elements():
    ris = small_ris(n_side=4, n_tiles=2)
    seen = np.concatenate([ris.tile_elements(t) for t in range(2)])
    assert sorted(seen) == list(range(16))
    assert len(set(ris.tile_elements(0)) & set(ris.tile_elements(1))) == 0


def test_focus_phases_align_the_path():
    ris = small_ris(n_side=12, n_tiles=1)
    src, tgt = vec3(3.0, 2.0, 1.0), vec3(2.0, -2.0, -0.5)
    omega = focus_phases(ris, src, tgt, LAM)
    kappa = 2 * np.pi / LAM
    pos = ris.array.element_positions
    total = (np.linalg.norm(pos - src, axis=1)
             + np.linalg.norm(tgt - pos, axis=1))
    phasors = np.exp(1j * (kappa * total + omega))
    # perfectly coherent: the focused sum reaches the element count
    assert abs(np.sum(phasors)) == pytest.approx(ris.array.n_elements)
    # without focusing the same sum is far from coherent
    assert abs(np.sum(np.exp(1j * kappa * total))) < 0.5 * ris.array.n_elements


@pytest.fixture(scope="module")
def tiny_scenario():
    return example_scenario(n_ris_side=8, n_tiles=4)


def test_plan_beams_structure(tiny_scenario):
    plan = plan_beams(tiny_scenario, "nlos-nlos", 1.0)
    assert plan.mode == "nlos-nlos"
    assert plan.bs_weights.shape == (16, 2)
    assert np.sum(np.abs(plan.bs_weights) ** 2) == pytest.approx(1.0)
    assert plan.ris_phases.shape == (64,)
    assert len(plan.tile_assignment) == 4
    users = {u for u, _, _ in plan.tile_assignment}
    assert users == {0, 1}  # every user is served


def test_plan_requires_walls(tiny_scenario):
    import copy
    rs = copy.copy(tiny_scenario)
    rs.bs_ris_wall = None
    rs.ris_user_wall = None
    with pytest.raises(ValueError, match="path unavailable"):
        plan_beams(rs, "nlos-nlos", 1.0)
    with pytest.raises(ValueError, match="path unavailable"):
        plan_beams(rs, "los-nlos", 1.0)
    plan_beams(rs, "los-los", 1.0)  # no wall needed


def test_zero_power_gives_zero_rate(tiny_scenario):
    plan = plan_beams(tiny_scenario, "los-los", 0.0)
    res = evaluate_sum_rate(tiny_scenario, plan, 2, base_seed=0)
    assert res.sum_rate == 0.0


def test_sum_rate_deterministic(tiny_scenario):
    plan = plan_beams(tiny_scenario, "los-nlos", 1.0)
    a = evaluate_sum_rate(tiny_scenario, plan, 3, base_seed=42)
    b = evaluate_sum_rate(tiny_scenario, plan, 3, base_seed=42)
    assert np.array_equal(a.sinr, b.sinr)
    assert a.sum_rate == b.sum_rate
    assert a.sum_rate > 0.0
    assert a.per_draw_sum_rates.shape == (3,)
    assert np.all(a.rates >= 0.0)


def test_noise_floor_limits_rate(tiny_scenario):
    weak = plan_beams(tiny_scenario, "los-los", 1e-12)
    res = evaluate_sum_rate(tiny_scenario, weak, 2, base_seed=1)
    assert res.sum_rate < 0.2
