"""Nonlinear-interference SNR estimation for ultra-wideband WDM transmission
with inter-channel stimulated Raman scattering, variably loaded spans, and a
desk-scale split-step validation oracle."""

__version__ = "0.1.0"

from .gn_engine import (DispersionCoeffs, UnoccupiedChannelError, coupling_factor,
                        dispersion_coeffs, edfa_noise_psd, integrate_channel,
                        nli_psd, optimal_launch, phase_mismatch, snr_report,
                        span_kernel)
from .quadrature import ConvergenceError, QuadratureSpec
from .raman import RamanProfileParams, effective_length, isrs_gain, tilt_db
from .report import NliReport
from .scenario import (ChannelGrid, FiberSpec, Link, NetworkLoadPlan, ScenarioError,
                       SpectralLoad, Span, build_network_plan, build_ptp_scenario,
                       cl_band_grid, load_at_span, load_scenario)

__all__ = [
    "ChannelGrid", "ConvergenceError", "DispersionCoeffs", "FiberSpec", "Link",
    "NetworkLoadPlan", "NliReport", "QuadratureSpec", "RamanProfileParams",
    "ScenarioError", "Span", "SpectralLoad", "UnoccupiedChannelError",
    "build_network_plan", "build_ptp_scenario", "cl_band_grid", "coupling_factor",
    "dispersion_coeffs", "edfa_noise_psd", "effective_length", "integrate_channel",
    "isrs_gain", "load_at_span", "load_scenario", "nli_psd", "optimal_launch",
    "phase_mismatch", "snr_report", "span_kernel", "tilt_db",
]
