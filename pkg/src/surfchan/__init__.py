"""Statistical near-field MIMO channel model with imperfect reflection from
large rough surfaces, plus a brute-force reflection-integral oracle and an
RIS-assisted multi-user downlink experiment."""

from .channel import (ArrayGeometry, LinkBudget, LinkSpec, PointScatterer,
                      Scenario, assemble_channel, los_matrix, scatterer_matrix)
from .geometry import (LocalFrame, PlanePose, incidence_cosines, mirror_image,
                       mirror_images, specular_path, vec3)
from .hf_oracle import hf_integral, hf_integral_matrix, monte_carlo_channel
from .ris_sim import (BeamPlan, RisConfig, RisScenario, SumRateResult,
                      evaluate_sum_rate, example_scenario, focus_phases,
                      plan_beams)
from .stat_model import (CorrelationSpec, RegimeParams, SurfaceChannelStats,
                         build_covariance, correlation_numeric,
                         correlation_sinc, deterministic_component,
                         diffuse_power_limit, roughness_factor,
                         sample_stochastic, stochastic_power,
                         surface_channel_stats, total_power_ratio)
from .surface import PlanarSurfaceSpec, RoughRealization, sample_realization

__all__ = [
    "ArrayGeometry", "BeamPlan", "CorrelationSpec", "LinkBudget", "LinkSpec",
    "LocalFrame", "PlanePose", "PlanarSurfaceSpec", "PointScatterer",
    "RegimeParams", "RisConfig", "RisScenario", "RoughRealization", "Scenario",
    "SumRateResult", "SurfaceChannelStats", "assemble_channel",
    "build_covariance", "correlation_numeric", "correlation_sinc",
    "deterministic_component", "diffuse_power_limit", "evaluate_sum_rate",
    "example_scenario", "focus_phases", "hf_integral", "hf_integral_matrix",
    "incidence_cosines", "los_matrix", "mirror_image", "mirror_images",
    "monte_carlo_channel", "plan_beams", "roughness_factor",
    "sample_realization", "sample_stochastic", "scatterer_matrix",
    "specular_path", "stochastic_power", "surface_channel_stats",
    "total_power_ratio", "vec3",
]
