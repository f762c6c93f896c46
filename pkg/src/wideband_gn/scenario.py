"""Physical and spectral data model plus point-to-point / network scenario generators.

All value types are immutable after construction (numpy arrays are marked
read-only) and safe to share across threads.  Randomized network plans are
generated single-threaded from a named, seeded generator so a plan is
reproducible bit-for-bit from its seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .units import DB_TO_NP, dbm_to_w

# Generator identifier stored in serialized plans; plans are only replayable
# by an implementation drawing from the same stream.
RNG_ALGORITHM = "numpy-PCG64"


class ScenarioError(ValueError):
    """Invalid scenario configuration."""


def _readonly(a):
    a = np.asarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FiberSpec:
    """Physical fiber constants.

    alpha_db_per_km : attenuation (dB/km)
    dispersion_D    : ps/(nm km)
    slope_S         : ps/(nm^2 km)
    gamma           : nonlinearity coefficient 1/(W km)
    raman_slope_Cr  : normalized Raman gain slope 1/(W THz km)
    """

    alpha_db_per_km: float = 0.2
    dispersion_D: float = 17.0
    slope_S: float = 0.067
    gamma: float = 1.2
    raman_slope_Cr: float = 0.028
    ref_wavelength_nm: float = 1550.0

    def __post_init__(self):
        if self.alpha_db_per_km <= 0:
            raise ScenarioError("attenuation must be positive")
        if self.gamma < 0 or self.raman_slope_Cr < 0:
            raise ScenarioError("gamma and raman_slope_Cr must be non-negative")
        if self.ref_wavelength_nm <= 0:
            raise ScenarioError("reference wavelength must be positive")

    @property
    def alpha_np_per_km(self) -> float:
        """Power attenuation in natural units (Np/km)."""
        return self.alpha_db_per_km * DB_TO_NP


@dataclass(frozen=True)
class ChannelGrid:
    """WDM slot layout, symmetric about the band center (f = 0)."""

    channel_count: int
    spacing_thz: float
    symbol_rate_gbd: float

    def __post_init__(self):
        if self.channel_count < 1:
            raise ScenarioError("need at least one channel slot")
        if self.spacing_thz <= 0 or self.symbol_rate_gbd <= 0:
            raise ScenarioError("spacing and symbol rate must be positive")
        if self.symbol_rate_gbd > self.spacing_thz * 1e3 * (1 + 1e-12):
            raise ScenarioError("channel bandwidth exceeds slot spacing (spectral overlap)")

    @property
    def bandwidth_thz(self) -> float:
        """Per-channel occupied bandwidth (Nyquist shaped)."""
        return self.symbol_rate_gbd * 1e-3

    @property
    def center_frequencies(self) -> np.ndarray:
        """Slot center frequencies relative to band center (THz), increasing."""
        n = self.channel_count
        return _readonly((np.arange(n) - (n - 1) / 2.0) * self.spacing_thz)

    @property
    def slot_edges(self) -> tuple[np.ndarray, np.ndarray]:
        """(lower, upper) edges of every slot band, THz."""
        f = self.center_frequencies
        half = 0.5 * self.bandwidth_thz
        return _readonly(f - half), _readonly(f + half)

    def slot_of(self, f_thz: float) -> int:
        """Slot index whose band contains f_thz, or -1."""
        lo, hi = self.slot_edges
        i = int(np.searchsorted(lo, f_thz, side="right")) - 1
        if i >= 0 and f_thz <= hi[i]:
            return i
        return -1


def cl_band_grid() -> ChannelGrid:
    """Fully populated C+L layout: 251 x 40 GBd on a 40 GHz grid (10.04 THz)."""
    return ChannelGrid(channel_count=251, spacing_thz=0.04, symbol_rate_gbd=40.0)


@dataclass(frozen=True)
class SpectralLoad:
    """Per-slot occupancy and launch powers; implies a piecewise-constant PSD.

    The PSD is P_i / B_i on each occupied slot band and 0 elsewhere.
    """

    grid: ChannelGrid
    occupancy: np.ndarray       # bool per slot
    launch_power_w: np.ndarray  # W per slot, 0 where unoccupied

    def __post_init__(self):
        occ = _readonly(np.asarray(self.occupancy, dtype=bool))
        pw = _readonly(np.asarray(self.launch_power_w, dtype=float))
        object.__setattr__(self, "occupancy", occ)
        object.__setattr__(self, "launch_power_w", pw)
        if occ.shape != (self.grid.channel_count,) or pw.shape != occ.shape:
            raise ScenarioError("occupancy/power arrays must match the grid")
        if np.any(pw[occ] <= 0) or np.any(pw[~occ] != 0):
            raise ScenarioError("launch power must be positive exactly on occupied slots")

    @classmethod
    def full(cls, grid: ChannelGrid, power_dbm: float) -> "SpectralLoad":
        p = float(dbm_to_w(power_dbm))
        if p <= 0:
            raise ScenarioError("per-channel power must be positive")
        occ = np.ones(grid.channel_count, dtype=bool)
        return cls(grid, occ, np.full(grid.channel_count, p))

    @property
    def total_power_w(self) -> float:
        return float(self.launch_power_w.sum())

    @property
    def occupied_count(self) -> int:
        return int(self.occupancy.sum())

    @property
    def psd_values(self) -> np.ndarray:
        """PSD on each slot (W/THz); 0 on unoccupied slots."""
        return self.launch_power_w / self.grid.bandwidth_thz

    def psd_at(self, f_thz) -> np.ndarray:
        """PSD sampled at arbitrary frequencies (0 outside occupied bands)."""
        f = np.asarray(f_thz, dtype=float)
        lo, hi = self.grid.slot_edges
        idx = np.clip(np.searchsorted(lo, f, side="right") - 1, 0, len(lo) - 1)
        inside = (f >= lo[idx]) & (f <= hi[idx]) & self.occupancy[idx]
        return np.where(inside, self.psd_values[idx], 0.0)

    def occupied_band(self) -> tuple[float, float]:
        """(lo, hi) edges of the outermost occupied slots."""
        if self.occupied_count == 0:
            raise ScenarioError("empty load has no occupied band")
        lo, hi = self.grid.slot_edges
        occ = np.nonzero(self.occupancy)[0]
        return float(lo[occ[0]]), float(hi[occ[-1]])


@dataclass(frozen=True)
class Span:
    """One fiber span with its input spectral load."""

    length_km: float
    fiber: FiberSpec
    load: SpectralLoad

    def __post_init__(self):
        if self.length_km <= 0:
            raise ScenarioError("span length must be positive")


@dataclass(frozen=True)
class Link:
    """Ordered spans; cumulative_km[k] is the distance to the input of span k."""

    spans: tuple[Span, ...]

    def __post_init__(self):
        spans = tuple(self.spans)
        object.__setattr__(self, "spans", spans)
        if not spans:
            raise ScenarioError("link needs at least one span")

    @property
    def cumulative_km(self) -> np.ndarray:
        lengths = np.array([s.length_km for s in self.spans])
        return _readonly(np.concatenate(([0.0], np.cumsum(lengths)[:-1])))

    @property
    def total_length_km(self) -> float:
        return float(sum(s.length_km for s in self.spans))

    @property
    def grid(self) -> ChannelGrid:
        return self.spans[0].load.grid

    def occupied_band_union(self) -> tuple[float, float]:
        bands = [s.load.occupied_band() for s in self.spans]
        return min(b[0] for b in bands), max(b[1] for b in bands)

    def psd_value_edges(self) -> np.ndarray:
        """Frequencies where any span's PSD jumps (quadrature breakpoints)."""
        lo, hi = self.grid.slot_edges
        cands = np.unique(np.concatenate([lo, hi]))
        keep = []
        eps = 1e-9 * self.grid.bandwidth_thz
        for e in cands:
            for s in self.spans:
                left, right = s.load.psd_at(e - eps), s.load.psd_at(e + eps)
                if not np.isclose(left, right, rtol=1e-12, atol=0.0):
                    keep.append(e)
                    break
        return np.asarray(keep)


def build_ptp_scenario(grid: ChannelGrid, per_channel_power_dbm: float,
                       span_lengths_km, fiber: FiberSpec) -> Link:
    """Fully loaded point-to-point link: every slot occupied at equal power
    at the input of every span (ideal per-channel gain equalization)."""
    lengths = list(span_lengths_km)
    if not lengths:
        raise ScenarioError("span list must not be empty")
    load = SpectralLoad.full(grid, per_channel_power_dbm)
    return Link(tuple(Span(L, fiber, load) for L in lengths))


# Default link length when a scenario leaves span lengths open: six even spans
# covering a 742 km path.
DEFAULT_SPAN_LENGTHS_KM = tuple([742.0 / 6.0] * 6)


@dataclass(frozen=True)
class NetworkLoadPlan:
    """Seeded add/drop state per span.

    Signal channels (every `signal_stride`-th slot) stay occupied end-to-end
    at zero offset; interferers carry a power offset in [-1, +1] dB and a
    pre-dispersion distance in [0, 1000] km, both drawn when the channel is
    added.
    """

    grid: ChannelGrid
    seed: int
    signal_stride: int
    drop_fraction: float
    utilization: float
    occupancy: np.ndarray        # (spans, slots) bool
    power_offset_db: np.ndarray  # (spans, slots)
    predispersion_km: np.ndarray  # (spans, slots)
    rng_algorithm: str = RNG_ALGORITHM

    def __post_init__(self):
        for name in ("occupancy", "power_offset_db", "predispersion_km"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))

    @property
    def span_count(self) -> int:
        return self.occupancy.shape[0]

    @property
    def signal_channel_indices(self) -> np.ndarray:
        return _readonly(np.arange(0, self.grid.channel_count, self.signal_stride))

    def to_dict(self) -> dict:
        return {
            "grid": {
                "count": self.grid.channel_count,
                "spacing_thz": self.grid.spacing_thz,
                "symbol_rate_gbd": self.grid.symbol_rate_gbd,
            },
            "seed": self.seed,
            "signal_stride": self.signal_stride,
            "drop_fraction": self.drop_fraction,
            "utilization": self.utilization,
            "rng_algorithm": self.rng_algorithm,
            "spans": [
                {
                    "occupied": np.nonzero(self.occupancy[k])[0].tolist(),
                    "power_offset_db": [repr(float(x)) for x in
                                        self.power_offset_db[k][self.occupancy[k]]],
                    "predispersion_km": [repr(float(x)) for x in
                                         self.predispersion_km[k][self.occupancy[k]]],
                }
                for k in range(self.span_count)
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkLoadPlan":
        grid = ChannelGrid(d["grid"]["count"], d["grid"]["spacing_thz"],
                           d["grid"]["symbol_rate_gbd"])
        n_spans = len(d["spans"])
        n = grid.channel_count
        occ = np.zeros((n_spans, n), dtype=bool)
        off = np.zeros((n_spans, n))
        pre = np.zeros((n_spans, n))
        for k, s in enumerate(d["spans"]):
            idx = np.asarray(s["occupied"], dtype=int)
            occ[k, idx] = True
            off[k, idx] = [float(x) for x in s["power_offset_db"]]
            pre[k, idx] = [float(x) for x in s["predispersion_km"]]
        return cls(grid, d["seed"], d["signal_stride"], d["drop_fraction"],
                   d["utilization"], occ, off, pre,
                   rng_algorithm=d.get("rng_algorithm", RNG_ALGORITHM))


def build_network_plan(grid: ChannelGrid, signal_stride: int, drop_fraction: float,
                       utilization: float, seed: int, span_count: int) -> NetworkLoadPlan:
    """Randomized add/drop plan.

    At the link input and after every ROADM, occupied slots are filled to
    round(utilization * channel_count).  At each ROADM,
    floor(drop_fraction * interferer_count) interferers are removed
    uniformly at random before refilling.
    """
    if not (0 <= drop_fraction <= 1):
        raise ScenarioError("drop_fraction must lie in [0, 1]")
    if not (0 < utilization <= 1):
        raise ScenarioError("utilization must lie in (0, 1]")
    if signal_stride < 1 or span_count < 1:
        raise ScenarioError("signal_stride and span_count must be >= 1")

    n = grid.channel_count
    signal = np.arange(0, n, signal_stride)
    target = int(round(utilization * n))
    if target < len(signal):
        raise ScenarioError(
            f"utilization target {target} cannot hold all {len(signal)} signal channels")

    rng = np.random.default_rng(seed)
    occ = np.zeros((span_count, n), dtype=bool)
    off = np.zeros((span_count, n))
    pre = np.zeros((span_count, n))

    occupied = np.zeros(n, dtype=bool)
    occupied[signal] = True
    offsets = np.zeros(n)
    predisp = np.zeros(n)

    def add_until_target():
        empty = np.nonzero(~occupied)[0]
        n_add = target - int(occupied.sum())
        if n_add > 0:
            chosen = rng.choice(empty, size=n_add, replace=False)
            occupied[chosen] = True
            offsets[chosen] = rng.uniform(-1.0, 1.0, size=n_add)
            predisp[chosen] = rng.uniform(0.0, 1000.0, size=n_add)

    add_until_target()
    occ[0], off[0], pre[0] = occupied, offsets, predisp
    for k in range(1, span_count):
        interferers = np.nonzero(occupied & ~np.isin(np.arange(n), signal))[0]
        n_drop = int(np.floor(drop_fraction * len(interferers)))
        if n_drop > 0:
            dropped = rng.choice(interferers, size=n_drop, replace=False)
            occupied[dropped] = False
            offsets[dropped] = 0.0
            predisp[dropped] = 0.0
        add_until_target()
        occ[k], off[k], pre[k] = occupied, offsets, predisp

    return NetworkLoadPlan(grid, seed, signal_stride, drop_fraction, utilization,
                           occ, off, pre)


def load_at_span(plan: NetworkLoadPlan, k: int, base_power_dbm: float) -> SpectralLoad:
    """Materialize the plan state at span k into a SpectralLoad."""
    if not (0 <= k < plan.span_count):
        raise IndexError(f"span index {k} out of range [0, {plan.span_count})")
    power = np.where(plan.occupancy[k],
                     dbm_to_w(base_power_dbm + plan.power_offset_db[k]), 0.0)
    return SpectralLoad(plan.grid, plan.occupancy[k], power)


def build_network_link(plan: NetworkLoadPlan, base_power_dbm: float,
                       span_lengths_km, fiber: FiberSpec) -> Link:
    lengths = list(span_lengths_km)
    if len(lengths) != plan.span_count:
        raise ScenarioError("span length list must match the plan's span count")
    return Link(tuple(Span(L, fiber, load_at_span(plan, k, base_power_dbm))
                      for k, L in enumerate(lengths)))


# ---------------------------------------------------------------------------
# Scenario files (JSON)

@dataclass(frozen=True)
class ScenarioConfig:
    """Parsed scenario file: fiber + grid + spans + loading mode."""

    fiber: FiberSpec
    grid: ChannelGrid
    span_lengths_km: tuple[float, ...]
    mode: str                    # "full" | "network"
    power_dbm: float
    seed: int = 0
    stride: int = 5
    drop_fraction: float = 0.8
    utilization: float = 0.8
    plan: NetworkLoadPlan | None = field(default=None, compare=False)

    def build_link(self) -> Link:
        if self.mode == "full":
            return build_ptp_scenario(self.grid, self.power_dbm,
                                      self.span_lengths_km, self.fiber)
        plan = self.plan or build_network_plan(
            self.grid, self.stride, self.drop_fraction, self.utilization,
            self.seed, len(self.span_lengths_km))
        return build_network_link(plan, self.power_dbm, self.span_lengths_km, self.fiber)


def scenario_to_dict(cfg: ScenarioConfig) -> dict:
    d = {
        "fiber": {
            "alpha_db_per_km": cfg.fiber.alpha_db_per_km,
            "D": cfg.fiber.dispersion_D,
            "S": cfg.fiber.slope_S,
            "gamma": cfg.fiber.gamma,
            "Cr": cfg.fiber.raman_slope_Cr,
        },
        "grid": {
            "count": cfg.grid.channel_count,
            "spacing_thz": cfg.grid.spacing_thz,
            "symbol_rate_gbd": cfg.grid.symbol_rate_gbd,
        },
        "spans": {"lengths_km": list(cfg.span_lengths_km)},
        "load": {
            "mode": cfg.mode,
            "power_dbm": cfg.power_dbm,
            "seed": cfg.seed,
            "stride": cfg.stride,
            "drop_fraction": cfg.drop_fraction,
            "utilization": cfg.utilization,
        },
    }
    if cfg.plan is not None:
        d["plan"] = cfg.plan.to_dict()
    return d


def scenario_from_dict(d: dict) -> ScenarioConfig:
    try:
        f = d["fiber"]
        g = d["grid"]
        fiber = FiberSpec(alpha_db_per_km=f["alpha_db_per_km"], dispersion_D=f["D"],
                          slope_S=f["S"], gamma=f["gamma"], raman_slope_Cr=f["Cr"],
                          ref_wavelength_nm=f.get("ref_wavelength_nm", 1550.0))
        grid = ChannelGrid(g["count"], g["spacing_thz"], g["symbol_rate_gbd"])
        lengths = tuple(float(x) for x in
                        d.get("spans", {}).get("lengths_km", [])) \
            or DEFAULT_SPAN_LENGTHS_KM
        load = d["load"]
        mode = load["mode"]
        if mode not in ("full", "network"):
            raise ScenarioError(f"unknown load mode {mode!r}")
        plan = NetworkLoadPlan.from_dict(d["plan"]) if "plan" in d else None
        return ScenarioConfig(
            fiber=fiber, grid=grid, span_lengths_km=lengths, mode=mode,
            power_dbm=float(load["power_dbm"]), seed=int(load.get("seed", 0)),
            stride=int(load.get("stride", 5)),
            drop_fraction=float(load.get("drop_fraction", 0.8)),
            utilization=float(load.get("utilization", 0.8)), plan=plan)
    except KeyError as e:
        raise ScenarioError(f"scenario file missing key: {e}") from e


def load_scenario(path) -> ScenarioConfig:
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as e:
            raise ScenarioError(f"invalid JSON in {path}: {e}") from e
    return scenario_from_dict(d)


def dump_scenario(cfg: ScenarioConfig, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(cfg), indent=2, sort_keys=True) + "\n")
