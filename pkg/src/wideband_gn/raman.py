"""ISRS-modified signal power evolution along a span.

The triangular (linear-slope) Raman gain approximation gives the normalized
per-frequency power ratio

    rho(z, f) = P * exp(-alpha z) * exp(-P Cr Leff(z) f) / D(z)
    D(z)      = integral G(nu) exp(-P Cr Leff(z) nu) d nu

so that the PSD at distance z is G(f) * rho(z, f).  The normalization makes
the total power follow plain attenuation: integral G rho = P exp(-alpha z).

The denominator D is evaluated in closed form per occupied channel (the PSD
is piecewise constant), which keeps this module free of quadrature error.
All functions are pure and vectorize over (f, z).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import Span, SpectralLoad
from .units import db


def effective_length(z_km, alpha_np_per_km: float):
    """Leff(z) = (1 - exp(-alpha z)) / alpha; monotone, bounded by 1/alpha."""
    z = np.asarray(z_km, dtype=float)
    if np.any(z < 0):
        raise ValueError("distance must be non-negative")
    if alpha_np_per_km <= 0:
        raise ValueError("attenuation must be positive")
    return -np.expm1(-alpha_np_per_km * z) / alpha_np_per_km


def _sinhc(x):
    # sinh(x)/x, stable near 0
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-6
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 + x * x / 6.0, np.sinh(safe) / safe)


def psd_exp_integral(load: SpectralLoad, kappa):
    """Closed-form D(kappa) = integral G(nu) exp(-kappa nu) d nu  (W).

    Per occupied slot of width w centered at c the rectangle integrates to
    G * w * exp(-kappa c) * sinh(kappa w / 2) / (kappa w / 2).
    """
    kappa = np.asarray(kappa, dtype=float)
    centers = load.grid.center_frequencies[load.occupancy]
    powers = load.launch_power_w[load.occupancy]
    w = load.grid.bandwidth_thz
    k = kappa[..., None]
    terms = powers * np.exp(-k * centers) * _sinhc(k * w / 2.0)
    return terms.sum(axis=-1)


@dataclass(frozen=True)
class RamanProfileParams:
    """Inputs of the ISRS profile for one span."""

    total_power_w: float
    cr: float                 # 1/(W THz km)
    alpha_np_per_km: float
    load: SpectralLoad

    def __post_init__(self):
        if not np.isclose(self.total_power_w, self.load.total_power_w,
                          rtol=1e-9, atol=0.0):
            raise ValueError("total_power_w must match the load's total power")
        if self.alpha_np_per_km <= 0:
            raise ValueError("attenuation must be positive")

    @classmethod
    def from_span(cls, span: Span) -> "RamanProfileParams":
        return cls(total_power_w=span.load.total_power_w,
                   cr=span.fiber.raman_slope_Cr,
                   alpha_np_per_km=span.fiber.alpha_np_per_km,
                   load=span.load)


def isrs_gain(params: RamanProfileParams, f_thz, z_km):
    """Normalized power ratio rho(z, f).

    Broadcasts to z-shape + f-shape when both arguments are arrays.
    rho(0, f) = 1 exactly; for Cr = 0 (or an empty load) it degenerates to
    exp(-alpha z).
    """
    f = np.asarray(f_thz, dtype=float)
    z = np.asarray(z_km, dtype=float)
    att = np.exp(-params.alpha_np_per_km * z)
    p = params.total_power_w
    if params.cr == 0.0 or p == 0.0:
        return att * np.ones(z.shape + f.shape) if f.ndim else att + np.zeros(z.shape)
    kappa = p * params.cr * effective_length(z, params.alpha_np_per_km)
    denom = psd_exp_integral(params.load, kappa)
    att_b = att.reshape(att.shape + (1,) * f.ndim)
    den_b = denom.reshape(denom.shape + (1,) * f.ndim)
    return p * att_b * np.exp(-np.multiply.outer(kappa, f)) / den_b


def tilt_db(params: RamanProfileParams, z_km: float) -> float:
    """ISRS tilt 10 log10(rho(z, f_lo) / rho(z, f_hi)) between the outermost
    occupied channel centers; positive when power flows toward low frequencies."""
    occ = np.nonzero(params.load.occupancy)[0]
    if len(occ) < 2:
        raise ValueError("tilt needs at least two occupied channels")
    centers = params.load.grid.center_frequencies
    rho = isrs_gain(params, np.array([centers[occ[0]], centers[occ[-1]]]), z_km)
    return float(db(rho[0] / rho[1]))
