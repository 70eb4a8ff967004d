"""Stochastic network-calculus backlog bounds for a single 802.11 DCF node,
with a slot-level discrete-event simulator for validation.

Typical flow: solve the MAC fixed point, characterize the channel
impairment as a (sigma, rho) MGF envelope, assemble one of four backlog
tail bounds, query quantiles, and cross-check against simulation.
"""
from .bounds import (
    VARIANTS,
    BacklogBound,
    BoundSpec,
    GridOptions,
    InfeasibleBoundError,
    StabilityReport,
    VacuousBoundWarning,
    build_bound,
    compute_bound,
    point_tail_value,
    quantile,
    quantile_table,
    rate_to_mbps,
    stability_check,
)
from .characterize import (
    DEFAULT_EPSILON,
    FitConvergenceError,
    MgfEnvelope,
    PoissonTraffic,
    TraceData,
    TraceTraffic,
    average_rate,
    fit_sigma_rho,
    poisson_sigma_rho,
    trace_mgf_envelope,
)
from .config import ConfigError, RunConfig, load_run_config
from .curves import (
    BoundingFunction,
    CurveWithBound,
    SigmaRho,
    independent_tail_convolve,
    minplus_convolve,
    ta_curve_from_sigma_rho,
    ta_to_vb,
    vb_curve_from_sigma_rho,
    vb_curve_martingale,
)
from .dcf import (
    DcfFixedPoint,
    ImpairmentModel,
    Params80211,
    impairment_average_rate,
    impairment_mgf,
    impairment_sigma_rho,
    oracle_impairment_mgf,
    service_curve,
    slot_length,
    solve_fixed_point,
    stable_rate_threshold,
)
from .sim import NodeState, SimConfig, SimResult, empirical_tail, run

__version__ = "0.1.0"

__all__ = [
    "VARIANTS",
    "BacklogBound",
    "BoundSpec",
    "GridOptions",
    "InfeasibleBoundError",
    "StabilityReport",
    "VacuousBoundWarning",
    "build_bound",
    "compute_bound",
    "point_tail_value",
    "quantile",
    "quantile_table",
    "rate_to_mbps",
    "stability_check",
    "DEFAULT_EPSILON",
    "FitConvergenceError",
    "MgfEnvelope",
    "PoissonTraffic",
    "TraceData",
    "TraceTraffic",
    "average_rate",
    "fit_sigma_rho",
    "poisson_sigma_rho",
    "trace_mgf_envelope",
    "ConfigError",
    "RunConfig",
    "load_run_config",
    "BoundingFunction",
    "CurveWithBound",
    "SigmaRho",
    "independent_tail_convolve",
    "minplus_convolve",
    "ta_curve_from_sigma_rho",
    "ta_to_vb",
    "vb_curve_from_sigma_rho",
    "vb_curve_martingale",
    "DcfFixedPoint",
    "ImpairmentModel",
    "Params80211",
    "impairment_average_rate",
    "impairment_mgf",
    "impairment_sigma_rho",
    "oracle_impairment_mgf",
    "service_curve",
    "slot_length",
    "solve_fixed_point",
    "stable_rate_threshold",
    "NodeState",
    "SimConfig",
    "SimResult",
    "empirical_tail",
    "run",
]
