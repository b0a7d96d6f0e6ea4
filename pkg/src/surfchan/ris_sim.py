"""RIS-assisted multi-user downlink on top of the surface channel model.

A reconfigurable surface relays the base-station signal to single-antenna
users; two rough walls provide optional non-LOS bounces on either hop. Beam
"modes" name which paths the beamformers exploit, as "<ris-hop>-<bs-hop>":
the FIRST token is the RIS-to-user hop, the SECOND the BS-to-RIS hop, each
"los" (direct path only) or "nlos" (direct plus wall bounce). The physical
channel always contains every path; modes only change the beam plan.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ArrayGeometry, LinkBudget, LinkSpec, Scenario, assemble_channel
from .geometry import PlanePose, mirror_image, specular_path, vec3
from .surface import PlanarSurfaceSpec

MODES = ("los-los", "los-nlos", "nlos-los", "nlos-nlos")


def parse_mode(mode: str) -> tuple[str, str]:
    """Normalize a mode string to (ris_hop, bs_hop) path tokens."""
    tokens = mode.strip().lower().replace("(n)los", "nlos").split("-")
    if len(tokens) != 2 or any(t not in ("los", "nlos") for t in tokens):
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    return tokens[0], tokens[1]


@dataclass(frozen=True)
class RisConfig:
    """Reconfigurable surface: element layout, tiling, and unit-cell gain."""

    array: ArrayGeometry
    n_axis1: int
    n_axis2: int
    n_tiles: int
    unit_cell_area: float

    def __post_init__(self):
        if self.n_axis1 * self.n_axis2 != self.array.n_elements:
            raise ValueError("n_axis1 * n_axis2 must equal the element count")
        if self.n_tiles < 1 or self.n_axis1 % self.n_tiles != 0:
            raise ValueError(
                f"n_tiles ({self.n_tiles}) must divide the first axis "
                f"({self.n_axis1}) into equal column bands")
        if self.unit_cell_area <= 0:
            raise ValueError("unit_cell_area must be > 0")

    def element_gain(self, wavelength: float) -> float:
        """Per-element amplitude gain Omega = 4*pi*A_uc / lambda^2."""
        return 4.0 * np.pi * self.unit_cell_area / wavelength**2

    def tile_elements(self, tile: int) -> np.ndarray:
        """Element indices of one tile (contiguous band of axis-1 columns,
        row-major layout over (axis1, axis2))."""
        if not (0 <= tile < self.n_tiles):
            raise ValueError(f"tile index {tile} out of range")
        width = self.n_axis1 // self.n_tiles
        cols = np.arange(tile * width, (tile + 1) * width)
        return (cols[:, None] * self.n_axis2 + np.arange(self.n_axis2)[None, :]).ravel()


@dataclass
class RisScenario:
    """Multi-user deployment: shared Scenario plus the RIS role assignments.

    Expected links: "bs-ris", and per user name u, "ris-u" and "bs-u".
    """

    scenario: Scenario
    ris: RisConfig
    bs_array: str
    ris_array: str
    user_names: tuple[str, ...]
    noise_power_w: float
    bs_ris_wall: str | None = None
    ris_user_wall: str | None = None

    def __post_init__(self):
        if self.noise_power_w <= 0:
            raise ValueError("noise_power_w must be > 0")
        if not self.user_names:
            raise ValueError("at least one user required")
        links = self.scenario.links
        missing = [n for n in (["bs-ris"]
                               + [f"ris-{u}" for u in self.user_names]
                               + [f"bs-{u}" for u in self.user_names])
                   if n not in links]
        if missing:
            raise ValueError(f"scenario is missing links: {missing}")


def focus_phases(ris: RisConfig, source, target, wavelength: float,
                 element_indices=None) -> np.ndarray:
    """Phase profile that coherently focuses source -> element -> target:
    omega_n = -kappa * (||u_n - source|| + ||target - u_n||), wrapped."""
    pos = ris.array.element_positions
    if element_indices is not None:
        pos = pos[np.asarray(element_indices, dtype=int)]
    source = np.asarray(source, dtype=float)
    target = np.asarray(target, dtype=float)
    kappa = 2.0 * np.pi / wavelength
    total = (np.linalg.norm(pos - source, axis=1)
             + np.linalg.norm(target - pos, axis=1))
    return np.mod(-kappa * total, 2.0 * np.pi)


@dataclass(frozen=True)
class BeamPlan:
    """One configured downlink: BS precoders, RIS phases, tile bookkeeping."""

    mode: str
    bs_weights: np.ndarray       # (N_bs, K), sum of ||w_k||^2 = P_t
    ris_phases: np.ndarray       # (N_ris,)
    tile_assignment: tuple       # per tile: (user_index, ris_path, bs_path)
    transmit_power_w: float


def _bs_focal_point(rs: RisScenario, bs_path: str) -> np.ndarray:
    ris_center = rs.scenario.arrays[rs.ris_array].center
    if bs_path == "los":
        return ris_center
    wall = rs.scenario.surfaces[rs.bs_ris_wall]
    return mirror_image(ris_center, wall.pose)


def _user_target_point(rs: RisScenario, user: str, ris_path: str) -> np.ndarray:
    pos = rs.scenario.arrays[user].center
    if ris_path == "los":
        return pos
    wall = rs.scenario.surfaces[rs.ris_user_wall]
    return mirror_image(pos, wall.pose)


def _ris_source_point(rs: RisScenario, bs_path: str) -> np.ndarray:
    """Where the BS beam appears to come from, seen by the RIS."""
    bs_center = rs.scenario.arrays[rs.bs_array].center
    if bs_path == "los":
        return bs_center
    wall = rs.scenario.surfaces[rs.bs_ris_wall]
    return mirror_image(bs_center, wall.pose)


def _hop_amplitude(rs: RisScenario, points: np.ndarray, endpoint: np.ndarray,
                   path: str, wall_name: str | None, budget: LinkBudget) -> np.ndarray:
    """Deterministic spatial amplitude of one hop at RIS element positions,
    either direct or via a wall bounce (per-element image paths)."""
    sqrt_beta = budget.beta_amplitude
    if path == "los":
        return sqrt_beta / np.linalg.norm(points - endpoint, axis=1)
    wall = rs.scenario.surfaces[wall_name]
    img = mirror_image(endpoint, wall.pose)
    d_img = np.linalg.norm(points - img, axis=1)
    _, cos_spec = specular_path(wall.pose,
                                rs.scenario.arrays[rs.ris_array].center, endpoint)
    return sqrt_beta * wall.zeta * cos_spec / d_img


def plan_beams(rs: RisScenario, mode: str, transmit_power_w: float) -> BeamPlan:
    """Build BS precoders and RIS phases for a path-usage mode.

    BS side: per-user matched filter toward the RIS center (or its wall
    image). RIS side: tiles are split between users by a draft that greedily
    maximizes each user's coherent amplitude over the remaining (tile, path)
    options, then each tile focuses its user's BS source point onto the
    user's position (or its wall image).
    """
    if transmit_power_w < 0:
        raise ValueError("transmit_power_w must be >= 0")
    ris_hop, bs_hop = parse_mode(mode)
    if ris_hop == "nlos" and rs.ris_user_wall is None:
        raise ValueError("path unavailable: mode uses a RIS-side wall bounce "
                         "but no wall is configured")
    if bs_hop == "nlos" and rs.bs_ris_wall is None:
        raise ValueError("path unavailable: mode uses a BS-side wall bounce "
                         "but no wall is configured")

    lam = rs.scenario.wavelength
    bs = rs.scenario.arrays[rs.bs_array]
    users = rs.user_names
    K = len(users)
    bs_paths = ("los", "nlos") if bs_hop == "nlos" else ("los",)
    ris_paths = ("los", "nlos") if ris_hop == "nlos" else ("los",)

    # BS precoders: near-field matched filter per user toward its focal point.
    kappa = 2.0 * np.pi / lam
    W = np.empty((bs.n_elements, K), dtype=complex)
    user_bs_path = [bs_paths[k % len(bs_paths)] for k in range(K)]
    for k in range(K):
        focal = _bs_focal_point(rs, user_bs_path[k])
        a = np.exp(1j * kappa * np.linalg.norm(bs.element_positions - focal, axis=1))
        W[:, k] = np.sqrt(transmit_power_w / K) * np.conj(a) / np.linalg.norm(a)

    # Per-element amplitude products used to rank (tile, user, ris-path).
    pos = rs.ris.array.element_positions
    omega_gain = rs.ris.element_gain(lam)
    budget_in = rs.scenario.links["bs-ris"].budget
    amp_in = {p: _hop_amplitude(rs, pos, bs.center, p, rs.bs_ris_wall, budget_in)
              for p in bs_paths}
    amp_out = {}
    for u in users:
        budget_out = rs.scenario.links[f"ris-{u}"].budget
        upos = rs.scenario.arrays[u].center
        for p in ris_paths:
            amp_out[(u, p)] = _hop_amplitude(rs, pos, upos, p,
                                             rs.ris_user_wall, budget_out)

    # Draft: users take turns picking their best remaining (tile, path).
    remaining = set(range(rs.ris.n_tiles))
    assignment: dict[int, tuple[int, str, str]] = {}
    order = [k % K for k in range(rs.ris.n_tiles)]
    for k in order:
        best = None
        for t in sorted(remaining):
            idx = rs.ris.tile_elements(t)
            for p in ris_paths:
                gain = float(np.sum(amp_in[user_bs_path[k]][idx] * omega_gain
                                    * amp_out[(users[k], p)][idx]))
                if best is None or gain > best[0]:
                    best = (gain, t, p)
        _, t, p = best
        remaining.remove(t)
        assignment[t] = (k, p, user_bs_path[k])

    phases = np.zeros(rs.ris.array.n_elements)
    for t, (k, p, bp) in assignment.items():
        idx = rs.ris.tile_elements(t)
        phases[idx] = focus_phases(rs.ris, _ris_source_point(rs, bp),
                                   _user_target_point(rs, users[k], p), lam,
                                   element_indices=idx)
    tiles = tuple((assignment[t][0], assignment[t][1], assignment[t][2])
                  for t in range(rs.ris.n_tiles))
    return BeamPlan(mode=f"{ris_hop}-{bs_hop}", bs_weights=W, ris_phases=phases,
                    tile_assignment=tiles, transmit_power_w=transmit_power_w)


def end_to_end_channel(rs: RisScenario, plan: BeamPlan, user: str,
                       seed: int) -> np.ndarray:
    """Effective 1 x N_bs downlink channel of one user for one channel draw:
    direct BS-user term plus the RIS cascade with the plan's phase profile."""
    lam = rs.scenario.wavelength
    h_direct = assemble_channel(rs.scenario, f"bs-{user}", seed)
    H_in = assemble_channel(rs.scenario, "bs-ris", seed)
    h_out = assemble_channel(rs.scenario, f"ris-{user}", seed)
    gain = rs.ris.element_gain(lam) * np.exp(1j * plan.ris_phases)
    return h_direct + (h_out * gain[None, :]) @ H_in


@dataclass(frozen=True)
class SumRateResult:
    """Draw-averaged SINRs and the resulting user rates."""

    mode: str
    transmit_power_w: float
    sinr: np.ndarray            # (K,), linear, averaged over draws
    rates: np.ndarray           # (K,), bits/s/Hz
    per_draw_sum_rates: np.ndarray  # (n_draws,), from per-draw SINRs

    @property
    def sum_rate(self) -> float:
        return float(np.sum(self.rates))

    @property
    def sum_rate_std(self) -> float:
        return float(np.std(self.per_draw_sum_rates))


def evaluate_sum_rate(rs: RisScenario, plan: BeamPlan, n_channel_draws: int,
                      base_seed: int) -> SumRateResult:
    """Average per-user SINR over independent channel draws, then rate
    log2(1 + SINR). Deterministic given base_seed."""
    if n_channel_draws < 1:
        raise ValueError("n_channel_draws must be >= 1")
    K = len(rs.user_names)
    lam = rs.scenario.wavelength
    gain = rs.ris.element_gain(lam) * np.exp(1j * plan.ris_phases)
    sinr_draws = np.zeros((n_channel_draws, K))
    for i in range(n_channel_draws):
        seed = base_seed + i
        H_in = assemble_channel(rs.scenario, "bs-ris", seed)
        for k, u in enumerate(rs.user_names):
            h = (assemble_channel(rs.scenario, f"bs-{u}", seed)
                 + (assemble_channel(rs.scenario, f"ris-{u}", seed)
                    * gain[None, :]) @ H_in)
            powers = np.abs(h @ plan.bs_weights) ** 2  # (1, K)
            sig = float(powers[0, k])
            interf = float(np.sum(powers)) - sig
            sinr_draws[i, k] = sig / (interf + rs.noise_power_w)
    sinr = sinr_draws.mean(axis=0)
    return SumRateResult(mode=plan.mode, transmit_power_w=plan.transmit_power_w,
                         sinr=sinr, rates=np.log2(1.0 + sinr),
                         per_draw_sum_rates=np.sum(np.log2(1.0 + sinr_draws), axis=1))


def example_scenario(carrier_frequency_hz: float = 28e9, n_ris_side: int = 32,
                     n_tiles: int = 8, kappa_sigma_z: float = 0.5,
                     bandwidth_hz: float = 20e6, noise_figure_db: float = 6.0,
                     beta_ref_db: float = -61.0,
                     blockage_db: float = -40.0) -> RisScenario:
    """Two-user indoor deployment with one wall per hop.

    BS: 4x4 half-wavelength UPA parallel to the x-z plane, centered at
    (40, 40, 5). RIS: n x n half-wavelength surface in the x = 0 plane at the
    origin, tiled into column bands. Users on the far side of the RIS; the
    direct BS-user links are heavily blocked. Wall 1 (x = 45) offers a bounce
    on the BS-RIS hop, wall 2 (x = 30) on the RIS-user hops. Wall passivity
    is set for a 3 dB specular power loss at each wall's nominal geometry.
    """
    lam = 299792458.0 / carrier_frequency_hz
    kappa = 2.0 * np.pi / lam
    sigma_z = kappa_sigma_z / kappa
    spacing = lam / 2.0

    bs = ArrayGeometry.upa(vec3(40.0, 40.0, 5.0), 4, 4, spacing,
                           axis1=(1.0, 0.0, 0.0), axis2=(0.0, 0.0, 1.0))
    ris_array = ArrayGeometry.upa(vec3(0.0, 0.0, 0.0), n_ris_side, n_ris_side,
                                  spacing, axis1=(0.0, 1.0, 0.0),
                                  axis2=(0.0, 0.0, 1.0))
    users = {"mu1": vec3(23.0, -23.0, -5.0), "mu2": vec3(28.0, -28.0, -5.0)}

    pose1 = PlanePose.vertical_x(45.0, 35.0, 0.0, normal_sign=-1.0)
    pose2 = PlanePose.vertical_x(30.0, -22.0, 0.0, normal_sign=-1.0)
    _, cos1 = specular_path(pose1, bs.center, ris_array.center)
    mean_user = np.mean([users["mu1"], users["mu2"]], axis=0)
    _, cos2 = specular_path(pose2, ris_array.center, mean_user)
    wall1 = PlanarSurfaceSpec(pose=pose1, extent=(10.0, 10.0), sigma_z=sigma_z,
                              zeta=min(1.0, 1.0 / (np.sqrt(2.0) * cos1)))
    wall2 = PlanarSurfaceSpec(pose=pose2, extent=(10.0, 10.0), sigma_z=sigma_z,
                              zeta=min(1.0, 1.0 / (np.sqrt(2.0) * cos2)))

    budget = LinkBudget(beta_ref_db=beta_ref_db, path_loss_exponent=2.0)
    blocked = LinkBudget(beta_ref_db=beta_ref_db, path_loss_exponent=2.0,
                         blockage_db=blockage_db)
    links = {"bs-ris": LinkSpec("bs", "ris", budget, surfaces=("wall1",))}
    for u in users:
        links[f"ris-{u}"] = LinkSpec("ris", u, budget, surfaces=("wall2",))
        links[f"bs-{u}"] = LinkSpec("bs", u, blocked)

    scenario = Scenario(
        carrier_frequency_hz=carrier_frequency_hz,
        arrays={"bs": bs, "ris": ris_array,
                **{u: ArrayGeometry.single(p) for u, p in users.items()}},
        surfaces={"wall1": wall1, "wall2": wall2},
        links=links,
    )
    ris = RisConfig(array=ris_array, n_axis1=n_ris_side, n_axis2=n_ris_side,
                    n_tiles=n_tiles, unit_cell_area=spacing**2)
    noise_w = 10.0 ** ((-174.0 + 10.0 * np.log10(bandwidth_hz)
                        + noise_figure_db - 30.0) / 10.0)
    return RisScenario(scenario=scenario, ris=ris, bs_array="bs",
                       ris_array="ris", user_names=("mu1", "mu2"),
                       noise_power_w=noise_w, bs_ris_wall="wall1",
                       ris_user_wall="wall2")
