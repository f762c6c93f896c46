import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import wideband_gn as wg
from wideband_gn.raman import (RamanProfileParams, effective_length, isrs_gain,
                               tilt_db)
from wideband_gn.scenario import ChannelGrid, FiberSpec, Span, SpectralLoad

ALPHA = 0.2 / (10 * np.log10(np.e))   # 0.046052 Np/km


def cl_params(power_dbm=0.0, cr=0.028):
    load = SpectralLoad.full(wg.cl_band_grid(), power_dbm)
    return RamanProfileParams(total_power_w=load.total_power_w, cr=cr,
                              alpha_np_per_km=ALPHA, load=load)


def test_effective_length_examples():
    assert effective_length(0.0, ALPHA) == 0.0
    # analytic asymptote 1/alpha = 21.71 km
    assert np.isclose(effective_length(1e6, ALPHA), 21.7147, atol=1e-3)
    # direct evaluation at 100 km
    assert np.isclose(effective_length(100.0, ALPHA), 21.4976, atol=1e-3)
    with pytest.raises(ValueError):
        effective_length(-1.0, ALPHA)


@settings(max_examples=30, deadline=None)
@given(z=st.floats(0.0, 500.0), dz=st.floats(0.01, 100.0))
def test_effective_length_monotone_bounded(z, dz):
    a, b = effective_length(z, ALPHA), effective_length(z + dz, ALPHA)
    assert b > a
    assert b < 1.0 / ALPHA


def test_gain_is_plain_attenuation_without_raman():
    params = cl_params(cr=0.0)
    f = np.linspace(-5.0, 5.0, 7)
    rho = isrs_gain(params, f, 100.0)
    np.testing.assert_allclose(rho, np.exp(-ALPHA * 100.0), rtol=1e-14)


def test_gain_identity_at_zero_distance():
    params = cl_params()
    f = np.linspace(-5.0, 5.0, 9)
    np.testing.assert_allclose(isrs_gain(params, f, 0.0), 1.0, rtol=1e-14)


def test_power_conservation_under_normalization():
    # integral G rho over the band equals P e^{-alpha z}: integrate the PSD
    # times the gain densely per occupied slot and compare
    params = cl_params()
    load = params.load
    z = 87.0
    lo, hi = load.grid.slot_edges
    total = 0.0
    for i in np.nonzero(load.occupancy)[0]:
        f = np.linspace(lo[i], hi[i], 201)
        rho = isrs_gain(params, f, z)
        total += np.trapezoid(load.psd_values[i] * rho, f)
    expect = params.total_power_w * np.exp(-ALPHA * z)
    assert abs(total - expect) / expect < 1e-9


def test_monotone_decreasing_in_frequency():
    params = cl_params()
    f = np.linspace(-5.0, 5.0, 101)
    rho = isrs_gain(params, f, 80.0)
    assert np.all(np.diff(rho) < 0)


class _ShiftedGrid:
    """Grid view with every center frequency moved by a constant."""

    def __init__(self, grid, delta):
        self.center_frequencies = grid.center_frequencies + delta
        self.bandwidth_thz = grid.bandwidth_thz


class _ShiftedLoad:
    def __init__(self, load, delta):
        self.grid = _ShiftedGrid(load.grid, delta)
        self.occupancy = load.occupancy
        self.launch_power_w = load.launch_power_w
        self.total_power_w = load.total_power_w


@settings(max_examples=20, deadline=None)
@given(shift=st.floats(-20.0, 20.0), z=st.floats(1.0, 150.0))
def test_frequency_origin_invariance(shift, z):
    # shifting the load and the probe frequency together cancels exactly
    grid = ChannelGrid(11, 0.1, 40.0)
    load = SpectralLoad.full(grid, 0.0)
    params = RamanProfileParams(load.total_power_w, 0.028, ALPHA, load)
    shifted = RamanProfileParams(load.total_power_w, 0.028, ALPHA,
                                 _ShiftedLoad(load, shift))
    f = np.array([-0.35, 0.0, 0.42])
    np.testing.assert_allclose(isrs_gain(shifted, f + shift, z),
                               isrs_gain(params, f, z), rtol=1e-11)


def test_fully_loaded_tilt_after_one_span():
    # outer-channel power difference after one 100 km span: ~6.5 dB
    params = cl_params()
    tilt = tilt_db(params, 100.0)
    assert abs(tilt - 6.5) < 0.3


def test_tilt_matches_small_signal_estimate():
    # first-order triangular-gain cross-check: 4.343 P Cr B Leff
    params = cl_params()
    tilt = tilt_db(params, 100.0)
    leff = effective_length(100.0, ALPHA)
    span_bw = 10.0   # outer channel centers
    estimate = 10 * np.log10(np.e) * params.total_power_w * params.cr * leff * span_bw
    assert abs(tilt - estimate) < 1e-9          # exact for the triangular model
    full_band = 10 * np.log10(np.e) * 0.251 * 0.028 * 21.5 * 10.04
    assert abs(tilt - full_band) < 0.15         # hand estimate ~6.6 dB


def test_tilt_zero_without_raman():
    assert tilt_db(cl_params(cr=0.0), 100.0) == 0.0


def test_tilt_requires_two_channels():
    load = SpectralLoad.full(ChannelGrid(1, 0.05, 40.0), 0.0)
    params = RamanProfileParams(load.total_power_w, 0.028, ALPHA, load)
    with pytest.raises(ValueError):
        tilt_db(params, 100.0)


def test_params_validation():
    load = SpectralLoad.full(ChannelGrid(3, 0.05, 40.0), 0.0)
    with pytest.raises(ValueError):
        RamanProfileParams(1.0, 0.028, ALPHA, load)   # wrong total
    p = RamanProfileParams.from_span(Span(80.0, FiberSpec(), load))
    assert np.isclose(p.total_power_w, 3e-3)
