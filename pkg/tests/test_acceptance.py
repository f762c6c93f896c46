"""Acceptance gate: one test per release criterion, each printing a
machine-greppable PASS/FAIL line with the measured numbers.

The heavy wideband runs use the reduced production preset and a single
in-band integration point; both were shown to track the full-budget
settings to well under a percent (see test_quadrature).  Run order goes
from cheap invariants to the long sweeps.
"""

import time
from dataclasses import replace

import numpy as np
import pytest

import wideband_gn as wg
from wideband_gn import ssfm
from wideband_gn.gn_engine import (dispersion_coeffs, integrate_channel, nli_psd,
                                   phase_rate, span_kernel)
from wideband_gn.quadrature import QuadratureSpec
from wideband_gn.raman import RamanProfileParams, isrs_gain, tilt_db
from wideband_gn.scenario import (ChannelGrid, FiberSpec, Link, SpectralLoad,
                                  build_network_link, build_network_plan,
                                  build_ptp_scenario, cl_band_grid, load_at_span)

SWEEP = replace(QuadratureSpec.reduced(), channel_points=1)


def check(name: str, ok: bool, detail: str):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


# ---------------------------------------------------------------------------
# 1. ISRS tilt, fully loaded C+L, one 100 km span: 6.5 +- 0.3 dB, < 1 s

def test_isrs_tilt_fully_loaded():
    t0 = time.perf_counter()
    load = SpectralLoad.full(cl_band_grid(), 0.0)
    params = RamanProfileParams(load.total_power_w, 0.028,
                                FiberSpec().alpha_np_per_km, load)
    tilt = tilt_db(params, 100.0)
    dt = time.perf_counter() - t0
    check("isrs-tilt", abs(tilt - 6.5) <= 0.3 and dt < 1.0,
          f"tilt = {tilt:.3f} dB (target 6.5 +- 0.3) in {dt:.3f} s")


# ---------------------------------------------------------------------------
# 2. Network tilt: 80% utilization, >= 20 seeds: mean 5.2 +- 0.4 dB, < 10 s

def test_network_tilt_mean_over_seeds():
    t0 = time.perf_counter()
    grid = cl_band_grid()
    fiber = FiberSpec()
    tilts = []
    for seed in range(20):
        plan = build_network_plan(grid, 5, 0.8, 0.8, seed=seed, span_count=6)
        for k in range(plan.span_count):
            load = load_at_span(plan, k, 0.0)
            params = RamanProfileParams(load.total_power_w, fiber.raman_slope_Cr,
                                        fiber.alpha_np_per_km, load)
            tilts.append(tilt_db(params, 100.0))
    mean_tilt = float(np.mean(tilts))
    dt = time.perf_counter() - t0
    check("network-tilt", abs(mean_tilt - 5.2) <= 0.4 and dt < 10.0,
          f"mean tilt = {mean_tilt:.3f} dB over {len(tilts)} spans "
          f"(target 5.2 +- 0.4) in {dt:.1f} s")


# ---------------------------------------------------------------------------
# 3. Cubic scaling: Cr = 0, +3.01 dB on every channel -> sigma^2 x 8.000 +- 0.5%

def test_cubic_power_scaling():
    grid = ChannelGrid(5, 0.0125, 10.0)
    fiber = FiberSpec(raman_slope_Cr=0.0)
    quad = replace(QuadratureSpec.desk(), nodes_radial=600, nodes_angular=900)
    base = build_ptp_scenario(grid, -6.0, [80.0, 80.0], fiber)
    doubled = build_ptp_scenario(grid, -6.0 + 10 * np.log10(2.0), [80.0, 80.0], fiber)
    ratios = []
    for i in range(grid.channel_count):
        ratios.append(integrate_channel(doubled, i, quad)
                      / integrate_channel(base, i, quad))
    worst = max(abs(r - 8.0) / 8.0 for r in ratios)
    check("cubic-scaling", worst < 0.005,
          f"sigma^2 ratios {min(ratios):.4f}..{max(ratios):.4f} "
          f"(worst rel dev {worst:.2e}, tol 0.5%)")


# ---------------------------------------------------------------------------
# 4. Oracle equivalence: 10 random small configs within 2%; Cr = 0 kernel
#    vs closed form within 1e-6

def test_oracle_equivalence():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(10):
        n_ch = int(rng.integers(1, 4))
        rs = float(rng.uniform(8.0, 12.0))
        grid = ChannelGrid(n_ch, rs * 1e-3 * float(rng.uniform(1.05, 1.6)), rs)
        lengths = rng.uniform(60.0, 110.0, size=int(rng.integers(1, 3))).tolist()
        fiber = FiberSpec(raman_slope_Cr=float(rng.choice([0.0, 0.028, 0.08])))
        link = build_ptp_scenario(grid, float(rng.uniform(-2, 4)), lengths, fiber)
        i = int(rng.integers(0, n_ch))
        f = float(grid.center_frequencies[i]
                  + rng.uniform(-0.3, 0.3) * grid.bandwidth_thz)
        hyp = nli_psd(link, f, replace(QuadratureSpec.desk(),
                                       nodes_radial=500, nodes_angular=900))
        cart = nli_psd(link, f, QuadratureSpec(scheme="cartesian-oracle",
                                               nodes_radial=2000))
        worst = max(worst, abs(hyp - cart) / cart)
    check("oracle-equivalence", worst < 0.02,
          f"worst hyperbolic-vs-cartesian deviation {worst:.2%} over 10 configs "
          f"(tol 2%)")

    link0 = build_ptp_scenario(ChannelGrid(3, 0.015, 10.0), 0.0, [80.0, 60.0],
                               FiberSpec(raman_slope_Cr=0.0))
    d = dispersion_coeffs(link0.spans[0].fiber)
    alpha = link0.spans[0].fiber.alpha_np_per_km
    worst_k = 0.0
    for _ in range(20):
        f1, f2 = rng.uniform(-0.02, 0.02, 2)
        f = float(rng.choice(link0.grid.center_frequencies))
        k_idx = int(rng.integers(0, 2))
        got = span_kernel(link0, k_idx, float(f1), float(f2), f)
        s = wg.coupling_factor(link0.spans[k_idx].load, float(f1), float(f2), f)
        if s == 0.0:
            continue
        rate = float(phase_rate(f1, f2, f, d))
        L = link0.spans[k_idx].length_km
        closed = s * (1 - np.exp(-alpha * L + 1j * rate * L)) / (alpha - 1j * rate) \
            * np.exp(1j * rate * link0.cumulative_km[k_idx])
        worst_k = max(worst_k, abs(got - closed) / abs(closed))
    check("kernel-closed-form", worst_k <= 1e-6,
          f"worst Cr=0 span-kernel deviation {worst_k:.2e} (tol 1e-6)")


# ---------------------------------------------------------------------------
# 5. Launch-power optimum: 251 channels, 100 km spans, NF 5 dB: 0 dBm +- 0.5

def test_launch_power_optimum():
    t0 = time.perf_counter()
    grid = cl_band_grid()
    powers = np.arange(-3.0, 3.0 + 0.25, 0.5)
    best = wg.optimal_launch(grid, FiberSpec(), [100.0, 100.0], 5.0,
                             grid.channel_count // 2, powers.tolist(), SWEEP)
    dt = time.perf_counter() - t0
    check("launch-optimum", abs(best) <= 0.5,
          f"optimum {best:+.1f} dBm (target 0 +- 0.5) in {dt:.0f} s")


# ---------------------------------------------------------------------------
# 6. Raman/SSFM cross-consistency: gamma = 0 powers within 0.02 dB

def test_raman_ssfm_cross_consistency():
    grid = ChannelGrid(5, 0.0125, 10.0)
    fiber = FiberSpec(gamma=0.0)
    sim = ssfm.SimulationSpec(symbols_per_run=2**11, realizations=1,
                              steps_per_span=120, seed=9)
    # heavy uniform load and an uneven two-level load, two spans each
    loads = [SpectralLoad.full(grid, 33.0)]
    occ = np.array([True, False, True, True, False])
    pw = np.where(occ, 2.0, 0.0) * np.array([1.0, 0.0, 1.26, 0.79, 0.0])
    loads.append(SpectralLoad(grid, occ, pw))
    worst = 0.0
    for load in loads:
        link = Link((wg.Span(80.0, fiber, load), wg.Span(60.0, fiber, load)))
        fld = ssfm.transmit(grid, load, ssfm.ModulationSpec("gaussian"), sim, seed=3)
        for span in link.spans:
            params = RamanProfileParams.from_span(span)
            out = ssfm.propagate_span(fld, span, sim=sim)
            for i in np.nonzero(load.occupancy)[0]:
                meas = 10 * np.log10(out.channel_power_w(i) / load.launch_power_w[i])
                model = 10 * np.log10(float(isrs_gain(
                    params, float(grid.center_frequencies[i]), span.length_km)))
                worst = max(worst, abs(meas - model))
            fld = ssfm.gain_stage(out, load, "isrs_compensating")
    check("raman-ssfm-consistency", worst < 0.02,
          f"worst per-channel power deviation {worst:.4f} dB (tol 0.02)")


# ---------------------------------------------------------------------------
# 7. Desk-scale SSFM validation: mean |SNR_model - SNR_ssfm| < 0.8 dB

@pytest.fixture(scope="module")
def desk_link_and_sim():
    grid = ChannelGrid(5, 0.0125, 10.0)
    link = build_ptp_scenario(grid, -6.0, [80.0, 80.0], FiberSpec())
    sim = ssfm.SimulationSpec(symbols_per_run=2**14, realizations=4,
                              steps_per_span=200, seed=42)
    return link, sim


def test_desk_scale_ssfm_validation(desk_link_and_sim):
    link, sim = desk_link_and_sim
    t0 = time.perf_counter()
    rep = wg.snr_report(link, QuadratureSpec.desk())
    meas = ssfm.measure_link_snr(link, ssfm.ModulationSpec("gaussian"), sim)
    dev = np.array([meas[i] for i in rep.channel_index]) - rep.snr_nli_db
    mean_abs = float(np.mean(np.abs(dev)))
    dt = time.perf_counter() - t0
    check("ssfm-validation", mean_abs < 0.8 and dt < 1800.0,
          f"mean |SNR_model - SNR_ssfm| = {mean_abs:.3f} dB over "
          f"{len(dev)} channels (tol 0.8) in {dt:.0f} s")


# ---------------------------------------------------------------------------
# 8. Modulation ordering: uniform >= MB >= Gaussian, gaps > 0.1 dB

def test_modulation_ordering(desk_link_and_sim):
    link, sim = desk_link_and_sim
    means = {}
    for kind in ("uniform_64qam", "mb_64qam", "gaussian"):
        meas = ssfm.measure_link_snr(link, ssfm.ModulationSpec(kind), sim)
        means[kind] = float(np.mean(list(meas.values())))
    gap_um = means["uniform_64qam"] - means["mb_64qam"]
    gap_mg = means["mb_64qam"] - means["gaussian"]
    check("modulation-ordering", gap_um > 0.1 and gap_mg > 0.1,
          f"SNR uniform {means['uniform_64qam']:.2f} > shaped "
          f"{means['mb_64qam']:.2f} > gaussian {means['gaussian']:.2f} dB "
          f"(gaps {gap_um:.2f}/{gap_mg:.2f}, each > 0.1)")


# ---------------------------------------------------------------------------
# 9. Network fluctuation: ensemble scatter shrinks from 3 to 6 spans

def test_network_fluctuation_shrinks_with_distance():
    quad = replace(QuadratureSpec.reduced(), nodes_radial=900, nodes_angular=800,
                   tail_coverage=25.0, log_step=0.45, raman_segments=6,
                   channel_points=1)
    grid = ChannelGrid(31, 0.04, 40.0)
    fiber = FiberSpec()
    snr3, snr6 = [], []
    for seed in range(10):
        plan = build_network_plan(grid, 5, 0.8, 0.8, seed=seed, span_count=6)
        link6 = build_network_link(plan, 0.0, [100.0] * 6, fiber)
        link3 = Link(link6.spans[:3])
        sig = plan.signal_channel_indices
        snr3.append(wg.snr_report(link3, quad, channels=sig).snr_nli_db)
        snr6.append(wg.snr_report(link6, quad, channels=sig).snr_nli_db)
    snr3, snr6 = np.array(snr3), np.array(snr6)
    fl3 = float(np.sqrt(np.mean((snr3 - snr3.mean(axis=0)) ** 2)))
    fl6 = float(np.sqrt(np.mean((snr6 - snr6.mean(axis=0)) ** 2)))
    check("network-fluctuation", fl6 < fl3,
          f"signal-channel SNR scatter {fl3:.3f} dB after 3 spans vs "
          f"{fl6:.3f} dB after 6 spans (10 seeds)")


# ---------------------------------------------------------------------------
# 10. Performance: one G(f), 251 channels x 6 spans, production settings

def test_production_psd_runtime():
    link = build_ptp_scenario(cl_band_grid(), 0.0, [100.0] * 6, FiberSpec())
    t0 = time.perf_counter()
    g = nli_psd(link, 0.0, QuadratureSpec.production())
    dt = time.perf_counter() - t0
    check("performance", dt <= 600.0 and g > 0,
          f"G(0) = {g:.4e} W/THz in {dt:.0f} s on one core (limit 600 s)")


# ---------------------------------------------------------------------------
# 11. ISRS SNR impact envelope: fully loaded, 3 spans, all 251 channels

def test_isrs_snr_impact_envelope():
    t0 = time.perf_counter()
    grid = cl_band_grid()
    spans = [100.0] * 3
    link_isrs = build_ptp_scenario(grid, 0.0, spans, FiberSpec())
    link_flat = build_ptp_scenario(grid, 0.0, spans, FiberSpec(raman_slope_Cr=0.0))
    deltas = np.empty(grid.channel_count)
    for i, f in enumerate(grid.center_frequencies):
        g_isrs = nli_psd(link_isrs, float(f), SWEEP)
        g_flat = nli_psd(link_flat, float(f), SWEEP)
        deltas[i] = 10 * np.log10(g_flat / g_isrs)
    dt = time.perf_counter() - t0
    lo, hi = float(deltas.min()), float(deltas.max())
    ok = (-2.3 <= lo) and (hi <= 2.1) and (lo <= -1.5) and (hi >= 1.3) \
        and dt < 1800.0
    check("isrs-snr-envelope", ok,
          f"SNR change spans [{lo:+.2f}, {hi:+.2f}] dB across 251 channels "
          f"(must lie in [-2.3, +2.1] and reach [-1.5, +1.3]) in {dt:.0f} s")
