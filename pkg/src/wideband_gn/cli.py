"""Command-line front end: scenario ingestion, model/oracle/comparison jobs,
CSV reports and reproducibility manifests.

Exit codes: 0 success, 2 malformed configuration, 3 quadrature
non-convergence, 4 oracle aliasing.  Worker-process count for per-channel
model evaluation comes from the WBGN_THREADS environment variable.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .gn_engine import integrate_channel, edfa_noise_psd, snr_report
from .quadrature import ConvergenceError, QuadratureSpec, convergence_estimate
from .raman import RamanProfileParams, tilt_db
from .report import NliReport, write_manifest
from .scenario import (ChannelGrid, ScenarioConfig, ScenarioError, build_network_plan,
                       dump_scenario, load_scenario, scenario_to_dict)
from .ssfm import AliasingError, ModulationSpec, SimulationSpec
from .units import C_NM_PS, dbm_to_w, w_to_dbm

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3
EXIT_ALIASING = 4


@dataclass(frozen=True)
class JobSpec:
    """One CLI invocation, validated."""

    command: str
    scenario_path: Path
    out_path: Path
    seed: int | None = None
    quad_preset: str = "production"
    quad_nodes: int | None = None
    span_lengths: tuple | None = None
    channels: int | None = None
    desk_scale: bool = False

    def __post_init__(self):
        if not self.scenario_path.exists():
            raise ScenarioError(f"scenario file not found: {self.scenario_path}")
        out_dir = self.out_path.parent
        if not out_dir.exists():
            raise ScenarioError(f"output directory does not exist: {out_dir}")


def _apply_overrides(cfg: ScenarioConfig, job: JobSpec) -> ScenarioConfig:
    if job.seed is not None:
        cfg = replace(cfg, seed=job.seed, plan=None)
    if job.span_lengths is not None:
        cfg = replace(cfg, span_lengths_km=tuple(job.span_lengths), plan=None)
    if job.channels is not None:
        grid = ChannelGrid(job.channels, cfg.grid.spacing_thz, cfg.grid.symbol_rate_gbd)
        cfg = replace(cfg, grid=grid, plan=None)
    return cfg


def _quad_for(job: JobSpec) -> QuadratureSpec:
    preset = "reduced" if job.desk_scale else job.quad_preset
    quad = {"production": QuadratureSpec.production,
            "reduced": QuadratureSpec.reduced,
            "desk": QuadratureSpec.desk}[preset]()
    if job.quad_nodes is not None:
        quad = replace(quad, nodes_radial=job.quad_nodes,
                       nodes_angular=max(8, job.quad_nodes))
    return quad


def _manifest_path(out_path: Path) -> Path:
    return out_path.with_suffix(out_path.suffix + ".manifest.json")


def run_gn(job: JobSpec, check_convergence: bool = True) -> int:
    cfg = _apply_overrides(load_scenario(job.scenario_path), job)
    link = cfg.build_link()
    quad = _quad_for(job)
    channels = np.nonzero(link.spans[0].load.occupancy)[0]
    if cfg.mode == "network":
        stride = cfg.stride
        channels = [c for c in channels if c % stride == 0]
    if check_convergence:
        from .gn_engine import nli_psd
        f0 = float(link.grid.center_frequencies[channels[len(channels) // 2]])
        drift = convergence_estimate(nli_psd, link, f0, quad)
        if drift > max(0.05, 10.0 * quad.rel_tol):
            raise ConvergenceError(
                f"quadrature drift {drift:.2e} at {f0} THz; raise the node budget")
    rep = snr_report(link, quad, channels=channels)
    rep.to_csv(job.out_path, with_source=True)
    tilts = []
    for span in link.spans:
        try:
            tilts.append(round(tilt_db(RamanProfileParams.from_span(span),
                                       span.length_km), 4))
        except ValueError:
            tilts.append(None)      # fewer than two occupied channels
    write_manifest(_manifest_path(job.out_path), scenario_to_dict(cfg), cfg.seed,
                   extra={"command": "gn-run", "quad": quad.scheme,
                          "nodes_radial": quad.nodes_radial,
                          "channels": len(channels),
                          "isrs_tilt_db_per_span": tilts})
    return EXIT_OK


def run_ssfm(job: JobSpec, symbols: int | None = None, realizations: int | None = None,
             steps: int | None = None, sps: int | None = None,
             modulation: str = "gaussian") -> int:
    from . import ssfm

    cfg = _apply_overrides(load_scenario(job.scenario_path), job)
    sim = SimulationSpec(
        symbols_per_run=symbols or (2**12 if job.desk_scale else 2**14),
        realizations=realizations or (2 if job.desk_scale else 4),
        samples_per_symbol=sps or 16,
        steps_per_span=steps or (100 if job.desk_scale else 200),
        seed=cfg.seed)
    mod = ModulationSpec(modulation)
    if cfg.mode == "network":
        plan = cfg.plan or build_network_plan(
            cfg.grid, cfg.stride, cfg.drop_fraction, cfg.utilization, cfg.seed,
            len(cfg.span_lengths_km))
        snrs = ssfm.measure_network_snr(plan, cfg.power_dbm, cfg.span_lengths_km,
                                        cfg.fiber, mod, sim)
    else:
        link = cfg.build_link()
        snrs = ssfm.measure_link_snr(link, mod, sim)
    idx = np.array(sorted(snrs))
    p = np.full(len(idx), float(dbm_to_w(cfg.power_dbm)))
    snr_db = np.array([snrs[i] for i in idx])
    sigma2 = p / 10.0 ** (snr_db / 10.0)
    rep = NliReport(channel_index=idx, f_thz=cfg.grid.center_frequencies[idx],
                    power_w=p, sigma2_nli_w=sigma2, snr_nli_db=snr_db, source="ssfm")
    rep.to_csv(job.out_path, with_source=True)
    write_manifest(_manifest_path(job.out_path), scenario_to_dict(cfg), sim.seed,
                   extra={"command": "ssfm-run", "symbols": sim.symbols_per_run,
                          "realizations": sim.realizations,
                          "modulation": mod.kind})
    return EXIT_OK


def run_scenario_gen(job: JobSpec) -> int:
    cfg = _apply_overrides(load_scenario(job.scenario_path), job)
    if cfg.mode != "network":
        raise ScenarioError("scenario-gen requires a network-mode scenario")
    plan = build_network_plan(cfg.grid, cfg.stride, cfg.drop_fraction,
                              cfg.utilization, cfg.seed, len(cfg.span_lengths_km))
    dump_scenario(replace(cfg, plan=plan), job.out_path)
    write_manifest(_manifest_path(job.out_path), scenario_to_dict(cfg), cfg.seed,
                   extra={"command": "scenario-gen"})
    return EXIT_OK


def run_compare(model_csv: Path, ssfm_csv: Path, out_path: Path) -> int:
    a = NliReport.from_csv(model_csv)
    b = NliReport.from_csv(ssfm_csv)
    common, ia, ib = np.intersect1d(a.channel_index, b.channel_index,
                                    return_indices=True)
    if len(common) == 0:
        raise ScenarioError("reports share no channels")
    if not np.allclose(a.f_thz[ia], b.f_thz[ib], rtol=0, atol=1e-9):
        raise ScenarioError("reports use different frequency grids")
    dev = a.snr_nli_db[ia] - b.snr_nli_db[ib]
    mean_abs = float(np.mean(np.abs(dev)))
    lines = ["channel_index,f_thz,snr_model_db,snr_ssfm_db,deviation_db,mean_abs_dev_db"]
    for k in range(len(common)):
        lines.append(",".join([
            str(int(common[k])), repr(float(a.f_thz[ia[k]])),
            repr(float(a.snr_nli_db[ia[k]])), repr(float(b.snr_nli_db[ib[k]])),
            repr(float(dev[k])), repr(mean_abs)]))
    Path(out_path).write_text("\n".join(lines) + "\n")
    write_manifest(_manifest_path(Path(out_path)),
                   {"model": str(model_csv), "ssfm": str(ssfm_csv)}, None,
                   extra={"command": "compare", "mean_abs_dev_db": mean_abs})
    print(f"mean |deviation| = {mean_abs:.3f} dB over {len(common)} channels")
    return EXIT_OK


def run_launch_opt(job: JobSpec, nf_db: float, channel: int | None,
                   p_min: float, p_max: float, p_step: float) -> int:
    cfg = _apply_overrides(load_scenario(job.scenario_path), job)
    if cfg.mode != "full":
        raise ScenarioError("launch-opt sweeps the fully loaded scenario")
    quad = _quad_for(job)
    grid = cfg.grid
    if channel is None:
        channel = grid.channel_count // 2
    powers = np.arange(p_min, p_max + 0.5 * p_step, p_step)
    f_abs_hz = (C_NM_PS / cfg.fiber.ref_wavelength_nm
                + grid.center_frequencies[channel]) * 1e12
    bw_hz = grid.bandwidth_thz * 1e12
    ase = sum(edfa_noise_psd(cfg.fiber.alpha_db_per_km * L, nf_db, f_abs_hz) * bw_hz
              for L in cfg.span_lengths_km)
    lines = ["power_dbm,sigma2_ase_dbm,sigma2_nli_dbm,snr_db"]
    best_p, best_snr = None, -np.inf
    for p_dbm in powers:
        link = replace(cfg, power_dbm=float(p_dbm)).build_link()
        sigma2 = integrate_channel(link, channel, quad)
        snr = 10.0 * np.log10(dbm_to_w(p_dbm) / (ase + sigma2))
        if snr > best_snr:
            best_p, best_snr = float(p_dbm), float(snr)
        lines.append(",".join([repr(float(p_dbm)), repr(float(w_to_dbm(ase))),
                               repr(float(w_to_dbm(sigma2))), repr(float(snr))]))
    Path(job.out_path).write_text("\n".join(lines) + "\n")
    write_manifest(_manifest_path(job.out_path), scenario_to_dict(cfg), cfg.seed,
                   extra={"command": "launch-opt", "optimum_dbm": best_p,
                          "channel": channel, "nf_db": nf_db})
    print(f"optimum launch power: {best_p:+.1f} dBm (channel {channel})")
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wbgn", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--scenario", required=True, type=Path)
        p.add_argument("--out", required=True, type=Path)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--spans", type=str, default=None,
                       help="comma-separated span lengths in km")
        p.add_argument("--quad-nodes", type=int, default=None)
        p.add_argument("--channels", type=int, default=None,
                       help="override the grid's channel count")
        p.add_argument("--preset", choices=["production", "reduced", "desk"],
                       default="production")
        p.add_argument("--desk-scale", action="store_true")

    p = sub.add_parser("gn-run", help="evaluate the analytic model")
    common(p)
    p.add_argument("--no-convergence-check", action="store_true")

    p = sub.add_parser("ssfm-run", help="run the split-step oracle")
    common(p)
    p.add_argument("--symbols", type=int, default=None)
    p.add_argument("--realizations", type=int, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--sps", type=int, default=None,
                   help="samples per symbol (raises the simulated bandwidth)")
    p.add_argument("--modulation", default="gaussian",
                   choices=["gaussian", "uniform_64qam", "mb_64qam"])

    p = sub.add_parser("scenario-gen", help="materialize a replayable network plan")
    common(p)

    p = sub.add_parser("compare", help="join model and oracle reports")
    p.add_argument("--model", required=True, type=Path)
    p.add_argument("--ssfm", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("launch-opt", help="uniform launch-power sweep")
    common(p)
    p.add_argument("--nf-db", type=float, default=5.0)
    p.add_argument("--channel", type=int, default=None)
    p.add_argument("--p-min", type=float, default=-3.0)
    p.add_argument("--p-max", type=float, default=3.0)
    p.add_argument("--p-step", type=float, default=0.5)
    return ap


def _job_from(ns) -> JobSpec:
    spans = None
    if ns.spans:
        spans = tuple(float(x) for x in ns.spans.split(","))
    return JobSpec(command=ns.command, scenario_path=ns.scenario, out_path=ns.out,
                   seed=ns.seed, quad_preset=ns.preset, quad_nodes=ns.quad_nodes,
                   span_lengths=spans, channels=ns.channels,
                   desk_scale=ns.desk_scale)


def main(argv=None) -> int:
    ns = _parser().parse_args(argv)
    try:
        if ns.command == "compare":
            return run_compare(ns.model, ns.ssfm, ns.out)
        job = _job_from(ns)
        if ns.command == "gn-run":
            return run_gn(job, check_convergence=not ns.no_convergence_check)
        if ns.command == "ssfm-run":
            return run_ssfm(job, symbols=ns.symbols, realizations=ns.realizations,
                            steps=ns.steps, sps=ns.sps, modulation=ns.modulation)
        if ns.command == "scenario-gen":
            return run_scenario_gen(job)
        if ns.command == "launch-opt":
            return run_launch_opt(job, ns.nf_db, ns.channel, ns.p_min, ns.p_max,
                                  ns.p_step)
        raise ScenarioError(f"unknown command {ns.command!r}")
    except (ScenarioError, FileNotFoundError, json.JSONDecodeError, KeyError) as e:
        print(f"error: configuration: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as e:
        print(f"error: quadrature: {e}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except AliasingError as e:
        print(f"error: oracle: {e}", file=sys.stderr)
        return EXIT_ALIASING


if __name__ == "__main__":
    sys.exit(main())
