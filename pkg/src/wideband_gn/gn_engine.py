"""Nonlinear-interference PSD via deterministic quadrature, per-channel
NLI variance and SNR.

The NLI PSD at frequency f (relative to band center) is

    G(f) = (16/27) G_1(f) * II df1 df2
           | sum_k gamma_k S_k(f1,f2,f) e^{j Phi_k}
                   int_0^{L_k} rho_k(z, f1+f2-f) e^{j phi_k' z} dz |^2

with the per-span coupling factor S_k = sqrt(G_k(f1) G_k(f2) G_k(f1+f2-f)
/ G_k(f)), the ISRS power profile rho_k from the raman module, the phase
mismatch rate phi_k' = -4 pi^2 (f1-f)(f2-f) [beta2 + pi beta3 (f1+f2)] and
Phi_k the mismatch accumulated over the preceding spans.

The inner distance integral is evaluated by a composite scheme that is
exact in the oscillation: on each of M sub-intervals the smooth profile
ln(rho e^{alpha z}) is interpolated log-linearly (plus a quadratic residual
correction) and the product with e^{(j phi' - alpha) z} integrates in
closed form.  For Cr = 0 this reduces to the single-segment closed form
(1 - e^{(j phi' - alpha) L}) / (alpha - j phi') exactly.

Evaluations at distinct f are independent; all reductions use a fixed
order, so results are bit-identical for a fixed QuadratureSpec regardless
of how channels are scheduled.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .quadrature import (OscillationScales, QuadratureSpec, cartesian_integrate,
                         hyperbolic_integrate)
from .raman import effective_length, psd_exp_integral
from .scenario import FiberSpec, Link, SpectralLoad
from .units import C_NM_PS, H_PLANCK, db, dbm_to_w, from_db

TWO_PI_SQ = 2.0 * np.pi**2


class UnoccupiedChannelError(ValueError):
    """The requested frequency carries no signal at the link input."""


@dataclass(frozen=True)
class DispersionCoeffs:
    """Taylor dispersion at the reference wavelength: beta2 ps^2/km, beta3 ps^3/km."""

    beta2: float
    beta3: float


def dispersion_coeffs(fiber: FiberSpec) -> DispersionCoeffs:
    """Standard (D, S) -> (beta2, beta3) conversion at the reference wavelength."""
    lam = fiber.ref_wavelength_nm
    lam2_2pic = lam**2 / (2.0 * np.pi * C_NM_PS)  # nm ps
    beta2 = -fiber.dispersion_D * lam2_2pic
    beta3 = lam2_2pic**2 * (fiber.slope_S + 2.0 * fiber.dispersion_D / lam)
    return DispersionCoeffs(beta2=float(beta2), beta3=float(beta3))


def phase_rate(f1, f2, f, disp: DispersionCoeffs):
    """d(phi)/dz in rad/km for the four-wave triple (f1, f2, f1+f2-f) onto f.

    The symmetric factors are grouped first, so swapping f1 and f2 gives a
    bit-identical result."""
    prod = (np.asarray(f1) - f) * (np.asarray(f2) - f)
    b2eff = disp.beta2 + np.pi * disp.beta3 * (np.asarray(f1) + np.asarray(f2))
    return -2.0 * TWO_PI_SQ * prod * b2eff


def phase_mismatch(f1, f2, f, z_km, disp: DispersionCoeffs):
    """Dispersion phase mismatch phi(f1, f2, f, z) in radians; linear in z."""
    return phase_rate(f1, f2, f, disp) * np.asarray(z_km)


def coupling_factor(load: SpectralLoad, f1, f2, f):
    """S_k = sqrt(G(f1) G(f2) G(f1+f2-f) / G(f)); 0 when any of the three
    mixing frequencies (or f itself) falls on an unoccupied slot."""
    g1 = load.psd_at(f1)
    g2 = load.psd_at(f2)
    g3 = load.psd_at(np.asarray(f1) + np.asarray(f2) - f)
    gf = load.psd_at(f)
    num = g1 * g2 * g3
    out = np.where((gf > 0) & (num > 0), np.sqrt(num / np.where(gf > 0, gf, 1.0)), 0.0)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Per-span precomputation for the distance integral

@dataclass
class SpanProfile:
    """Tables for one span: ln rho(z, nu) = -alpha z + c(z) + d(z) nu with
    c, d sampled on the segment knots (plus midpoints)."""

    length_km: float
    ltilde_km: float
    alpha: float          # Np/km
    gamma: float
    beta2: float
    beta3: float
    zeta: np.ndarray      # (M+1,) segment knots
    c_knot: np.ndarray    # (M+1,)
    d_knot: np.ndarray    # (M+1,)
    c_mid: np.ndarray     # (M,)
    d_mid: np.ndarray     # (M,)
    slot_lo: np.ndarray   # occupied slot bands, ascending
    slot_hi: np.ndarray
    slot_psd: np.ndarray  # W/THz

    def psd_at(self, f):
        f = np.asarray(f)
        if len(self.slot_lo) == 0:
            return np.zeros(f.shape)
        idx = np.clip(np.searchsorted(self.slot_lo, f, side="right") - 1, 0, None)
        inside = (f >= self.slot_lo[idx]) & (f <= self.slot_hi[idx])
        return np.where(inside, self.slot_psd[idx], 0.0)


def _raman_log_tables(span, zeta):
    """c(z) = ln(P / D(z)) and d(z) = -P Cr Leff(z) on the given z samples."""
    load = span.load
    p = load.total_power_w
    cr = span.fiber.raman_slope_Cr
    if p == 0.0 or cr == 0.0:
        return np.zeros_like(zeta), np.zeros_like(zeta)
    leff = effective_length(zeta, span.fiber.alpha_np_per_km)
    kappa = p * cr * leff
    denom = psd_exp_integral(load, kappa)
    return np.log(p / denom), -kappa


def build_span_profile(span, ltilde_km: float, segments: int) -> SpanProfile:
    """Precompute one span's integral tables with `segments` sub-intervals
    spaced for equal nonlinear weight (equal Leff increments)."""
    alpha = span.fiber.alpha_np_per_km
    L = span.length_km
    if span.fiber.raman_slope_Cr == 0.0 or span.load.total_power_w == 0.0:
        segments = 1  # profile is exactly exponential; one segment is closed form
    m = np.arange(segments + 1) / segments
    zeta = -np.log1p(-m * (-np.expm1(-alpha * L))) / alpha
    zeta[-1] = L
    mid = 0.5 * (zeta[:-1] + zeta[1:])
    c_knot, d_knot = _raman_log_tables(span, zeta)
    c_mid, d_mid = _raman_log_tables(span, mid)
    disp = dispersion_coeffs(span.fiber)
    occ = span.load.occupancy
    lo, hi = span.load.grid.slot_edges
    return SpanProfile(
        length_km=L, ltilde_km=ltilde_km, alpha=alpha, gamma=span.fiber.gamma,
        beta2=disp.beta2, beta3=disp.beta3,
        zeta=zeta, c_knot=c_knot, d_knot=d_knot, c_mid=c_mid, d_mid=d_mid,
        slot_lo=lo[occ], slot_hi=hi[occ], slot_psd=span.load.psd_values[occ])


def _e0(w):
    """(e^w - 1)/w, stable for small |w|."""
    w = np.asarray(w)
    small = np.abs(w) < 1e-4
    ws = np.where(small, 0.0, w)
    direct = (np.exp(ws) - 1.0) / np.where(small, 1.0, ws)
    series = 1.0 + w / 2.0 + w * w / 6.0
    return np.where(small, series, direct)


def _f_corr(w):
    """integral_0^1 x(1-x) e^{w x} dx = (e^w (w-2) + w + 2)/w^3, stable."""
    w = np.asarray(w)
    small = np.abs(w) < 1e-2
    ws = np.where(small, 1.0, w)
    direct = (np.exp(ws) * (ws - 2.0) + ws + 2.0) / ws**3
    series = 1.0 / 6.0 + w * (1.0 / 12.0 + w * (1.0 / 40.0 + w / 180.0))
    return np.where(small, series, direct)


def span_zeta_integral(profile: SpanProfile, phi_rate, nu3):
    """int_0^L rho(z, nu3) e^{j phi' z} dz, vectorized over node arrays."""
    phi_rate = np.atleast_1d(np.asarray(phi_rate, dtype=float))
    nu3 = np.atleast_1d(np.asarray(nu3, dtype=float))
    phi_rate, nu3 = np.broadcast_arrays(phi_rate, nu3)
    z = -profile.alpha + 1j * phi_rate            # (N,)
    zeta = profile.zeta
    dz = np.diff(zeta)[:, None]                   # (M, 1)
    g1 = profile.c_knot[:-1, None] + profile.d_knot[:-1, None] * nu3[None, :]
    g2 = profile.c_knot[1:, None] + profile.d_knot[1:, None] * nu3[None, :]
    gm = profile.c_mid[:, None] + profile.d_mid[:, None] * nu3[None, :]
    w = (g2 - g1) + z[None, :] * dz
    delta = gm - 0.5 * (g1 + g2)
    terms = dz * np.exp(g1 + z[None, :] * zeta[:-1, None]) \
        * (_e0(w) + 4.0 * delta * _f_corr(w))
    return terms.sum(axis=0)


def span_kernel(link: Link, k: int, f1: float, f2: float, f: float,
                rel_tol: float = 1e-6) -> complex:
    """One span's contribution S_k * int_0^L rho_k e^{j phi(Ltilde_k + z)} dz.

    The distance integral is refined (segment doubling) until two successive
    evaluations agree to rel_tol; for Cr = 0 a single segment is already the
    closed form.
    """
    span = link.spans[k]
    ltilde = float(link.cumulative_km[k])
    s_k = coupling_factor(span.load, f1, f2, f)
    disp = dispersion_coeffs(span.fiber)
    rate = float(phase_rate(f1, f2, f, disp))
    nu3 = f1 + f2 - f
    segments = 1 if span.fiber.raman_slope_Cr == 0.0 else 8
    prof = build_span_profile(span, ltilde, segments)
    val = span_zeta_integral(prof, rate, nu3).item()
    while segments <= 256 and span.fiber.raman_slope_Cr != 0.0:
        segments *= 2
        prof = build_span_profile(span, ltilde, segments)
        new = span_zeta_integral(prof, rate, nu3).item()
        if abs(new - val) <= rel_tol * max(abs(new), 1e-300):
            val = new
            break
        val = new
    return s_k * np.exp(1j * rate * ltilde) * val


# ---------------------------------------------------------------------------
# Link-level kernel and PSD integration

class LinkKernel:
    """Precomputed per-span tables plus the |K|^2 node evaluator shared by the
    hyperbolic scheme and the Cartesian oracle.

    Spans with identical (length, fiber, load) share one distance integral
    and one coupling-factor lookup; their different positions enter through
    a coherence sum of the accumulated-phase factors, which is exact.
    """

    def __init__(self, link: Link, segments: int):
        self.link = link
        cum = link.cumulative_km
        self.profiles = [build_span_profile(s, cum[i], segments)
                         for i, s in enumerate(link.spans)]
        groups: dict = {}
        for i, s in enumerate(link.spans):
            key = (s.length_km, s.fiber, id(s.load))
            groups.setdefault(key, []).append(i)
        self.groups = [idxs for idxs in groups.values()]

    def kernel_sq(self, f: float, nu1, nu2):
        """|sum_k gamma_k S_k e^{j Phi_k} J_k|^2 on node arrays."""
        nu1 = np.asarray(nu1, dtype=float)
        nu2 = np.asarray(nu2, dtype=float)
        f1 = f + nu1
        f2 = f + nu2
        f3 = f + nu1 + nu2
        prod = nu1 * nu2
        fsum = f1 + f2
        # per-span phase rates and accumulated input phases e^{j Phi_k}
        rates = []
        rate_cache: dict = {}
        for prof in self.profiles:
            key = (prof.beta2, prof.beta3)
            if key not in rate_cache:
                rate_cache[key] = (-2.0 * TWO_PI_SQ * prod
                                   * (prof.beta2 + np.pi * prof.beta3 * fsum))
            rates.append(rate_cache[key])
        phase_factors = []
        phi_in = None
        for k, prof in enumerate(self.profiles):
            phase_factors.append(None if phi_in is None else np.exp(1j * phi_in))
            step = rates[k] * prof.length_km
            phi_in = step if phi_in is None else phi_in + step
        acc = np.zeros(nu1.shape, dtype=complex)
        for idxs in self.groups:
            prof = self.profiles[idxs[0]]
            gf = float(prof.psd_at(f))
            if gf <= 0.0:
                continue
            num = prof.psd_at(f1) * prof.psd_at(f2) * prof.psd_at(f3)
            if not np.any(num > 0.0):
                continue
            s_k = np.sqrt(num / gf)
            j_k = span_zeta_integral(prof, rates[idxs[0]], f3)
            coh = None
            for k in idxs:
                e = phase_factors[k]
                if e is None:
                    coh = np.ones(nu1.shape, dtype=complex) if coh is None else coh + 1.0
                else:
                    coh = e if coh is None else coh + e
            acc += prof.gamma * s_k * j_k * coh
        return acc.real**2 + acc.imag**2


def _oscillation_scales(link: Link, f: float, band: tuple[float, float]) -> OscillationScales:
    lo, hi = band
    alpha_max = max(s.fiber.alpha_np_per_km for s in link.spans)
    tau = link.total_length_km
    smax = 2.0 * max(hi - f, f - lo)
    b2eff_hi = 0.0
    b2eff_lo = np.inf
    for s in link.spans:
        d = dispersion_coeffs(s.fiber)
        spread = np.pi * abs(d.beta3) * (2.0 * abs(f) + smax)
        b2eff_hi = max(b2eff_hi, abs(d.beta2) + spread)
        b2eff_lo = min(b2eff_lo, max(abs(d.beta2) - spread, 0.1 * abs(d.beta2), 1e-6))
    phi_scale = 2.0 * TWO_PI_SQ * b2eff_hi * tau
    p_alpha = alpha_max / (2.0 * TWO_PI_SQ * b2eff_lo)
    beta3_max = max(abs(dispersion_coeffs(s.fiber).beta3) for s in link.spans)
    drift_scale = 2.0 * TWO_PI_SQ * np.pi * beta3_max * tau
    return OscillationScales(phi_scale=phi_scale, p_alpha=p_alpha,
                             drift_scale=drift_scale)


def nli_psd(link: Link, f: float, quad: QuadratureSpec) -> float:
    """NLI PSD G(f) in W/THz at the link output (Eq.-level quantity)."""
    g1 = link.spans[0].load.psd_at(f)
    if not g1 > 0.0:
        raise UnoccupiedChannelError(
            f"frequency {f} THz is not occupied at the link input")
    band = quad.band if quad.band is not None else link.occupied_band_union()
    lo, hi = band
    blo, bhi = link.occupied_band_union()
    if lo > blo or hi < bhi:
        raise ValueError("quadrature band must cover every occupied channel")
    if not (lo < f < hi):
        raise UnoccupiedChannelError(f"{f} THz lies outside the integration band")
    kern = LinkKernel(link, quad.raman_segments)
    edges = link.psd_value_edges()
    scales = _oscillation_scales(link, f, band)
    if quad.scheme == "hyperbolic":
        val = hyperbolic_integrate(kern.kernel_sq, f, band, edges, scales, quad)
    elif quad.scheme == "cartesian-oracle":
        val = cartesian_integrate(kern.kernel_sq, f, band, edges, quad)
    else:
        raise ValueError(f"unknown quadrature scheme {quad.scheme!r}")
    return (16.0 / 27.0) * float(g1) * val


_CHANNEL_RULE_3PT = (np.array([-0.4, 0.0, 0.4]),
                     np.array([1.0 / 3.84, 1.0 - 2.0 / 3.84, 1.0 / 3.84]))


def channel_rule(points: int):
    """Nodes (fractions of the bandwidth) and weights (summing to 1) for the
    in-band integration of Eq.-level G; the 3-point default uses the center
    and +-0.4 B."""
    if points == 3:
        return _CHANNEL_RULE_3PT
    if points == 1:
        return np.array([0.0]), np.array([1.0])
    x, w = np.polynomial.legendre.leggauss(points)
    return 0.5 * x, 0.5 * w


def integrate_channel(link: Link, i: int, quad: QuadratureSpec) -> float:
    """sigma^2_NLI of channel i (W): the NLI PSD integrated over its band."""
    grid = link.grid
    if not link.spans[0].load.occupancy[i]:
        raise UnoccupiedChannelError(f"channel {i} is not occupied at span 1")
    fc = grid.center_frequencies[i]
    bw = grid.bandwidth_thz
    xs, ws = channel_rule(quad.channel_points)
    total = 0.0
    for x, w in zip(xs, ws):
        total += w * nli_psd(link, float(fc + x * bw), quad)
    return total * bw


def _channel_entry(args):
    link, i, quad = args
    sigma2 = integrate_channel(link, i, quad)
    p = link.spans[0].load.launch_power_w[i]
    return i, p, sigma2


def worker_count() -> int:
    """Worker processes for per-channel evaluation (env WBGN_THREADS)."""
    try:
        return max(1, int(os.environ.get("WBGN_THREADS", "1")))
    except ValueError:
        return 1


def snr_report(link: Link, quad: QuadratureSpec, channels=None, workers=None):
    """Per-channel sigma^2 and SNR (launch power over in-band NLI power).

    Returns an NliReport ordered by channel index.  Channels are evaluated
    independently (optionally in worker processes); the assembled result does
    not depend on scheduling.
    """
    from .report import NliReport

    if channels is None:
        channels = np.nonzero(link.spans[0].load.occupancy)[0]
    channels = sorted(int(c) for c in channels)
    if workers is None:
        workers = worker_count()
    jobs = [(link, i, quad) for i in channels]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_channel_entry, jobs, chunksize=4))
    else:
        rows = [_channel_entry(j) for j in jobs]
    rows.sort(key=lambda r: r[0])
    idx = np.array([r[0] for r in rows], dtype=int)
    p = np.array([r[1] for r in rows])
    sig = np.array([r[2] for r in rows])
    return NliReport(
        channel_index=idx,
        f_thz=link.grid.center_frequencies[idx],
        power_w=p,
        sigma2_nli_w=sig,
        snr_nli_db=db(p / sig),
    )


# ---------------------------------------------------------------------------
# Amplifier helpers (used by the launch-power sweep only)

def edfa_noise_psd(gain_db: float, nf_db: float, f_abs_hz: float) -> float:
    """Two-polarization ASE PSD (G - 1) 10^(NF/10) h f in W/Hz."""
    if gain_db < 0:
        raise ValueError("amplifier gain must be >= 1 (0 dB)")
    gain = float(from_db(gain_db))
    return (gain - 1.0) * float(from_db(nf_db)) * H_PLANCK * f_abs_hz


def optimal_launch(grid, fiber: FiberSpec, span_lengths_km, nf_db: float,
                   channel: int, power_grid_dbm, quad: QuadratureSpec) -> float:
    """Uniform launch power (dBm/channel) maximizing P / (ASE + NLI) for the
    chosen channel, over the given sweep grid."""
    from .scenario import build_ptp_scenario

    powers = list(power_grid_dbm)
    if not powers:
        raise ValueError("power sweep grid must not be empty")
    f_center_thz = C_NM_PS / fiber.ref_wavelength_nm  # nm/ps over nm: 1/ps = THz
    f_abs_hz = (f_center_thz + grid.center_frequencies[channel]) * 1e12
    bw_hz = grid.bandwidth_thz * 1e12
    ase = sum(edfa_noise_psd(fiber.alpha_db_per_km * L, nf_db, f_abs_hz) * bw_hz
              for L in span_lengths_km)
    best_power, best_snr = None, -np.inf
    for p_dbm in powers:
        link = build_ptp_scenario(grid, p_dbm, span_lengths_km, fiber)
        sigma2 = integrate_channel(link, channel, quad)
        snr = float(dbm_to_w(p_dbm)) / (ase + sigma2)
        if snr > best_snr:
            best_power, best_snr = p_dbm, snr
    return best_power
