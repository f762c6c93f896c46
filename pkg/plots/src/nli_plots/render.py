"""Render SNR-vs-frequency comparison charts from report CSVs.

Accepts the per-channel report CSVs written by the `wbgn` CLI: either raw
reports (header channel_index,f_thz,power_dbm,sigma2_nli_dbm,snr_nli_db with
an optional `source` column) or joined comparison files (snr_model_db /
snr_ssfm_db columns).  Each input file becomes one panel; the analytic model
is drawn as a line and split-step results as markers, on a shared y range.

Rendering is a pure function of the input files: fixed style, a fixed SVG
hash salt and no date metadata, so rerunning on the same inputs reproduces
the output byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("svg")
import matplotlib.pyplot as plt  # noqa: E402

VALID_SOURCES = ("model", "ssfm")


class RenderError(ValueError):
    """Unusable or inconsistent report input."""


@dataclass(frozen=True)
class ReportFrame:
    """One panel's data: per-channel rows for one or both sources."""

    label: str
    f_thz: np.ndarray
    series: dict    # source -> snr_nli_db array aligned with f_thz

    def __post_init__(self):
        if len(self.f_thz) == 0:
            raise RenderError(f"{self.label}: empty report")
        if np.any(np.diff(self.f_thz) <= 0):
            raise RenderError(f"{self.label}: frequencies must be sorted")
        for src in self.series:
            if src not in VALID_SOURCES:
                raise RenderError(f"{self.label}: unknown source {src!r}")


def _read_rows(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise RenderError(f"{path}: empty report")
    return rows


def load_frame(path) -> ReportFrame:
    path = Path(path)
    rows = _read_rows(path)
    cols = rows[0].keys()
    order = np.argsort([float(r["f_thz"]) for r in rows], kind="stable")
    rows = [rows[i] for i in order]
    f = np.array([float(r["f_thz"]) for r in rows])
    if "snr_model_db" in cols and "snr_ssfm_db" in cols:
        series = {"model": np.array([float(r["snr_model_db"]) for r in rows]),
                  "ssfm": np.array([float(r["snr_ssfm_db"]) for r in rows])}
    elif "snr_nli_db" in cols:
        src = rows[0].get("source", "model") or "model"
        series = {src: np.array([float(r["snr_nli_db"]) for r in rows])}
    else:
        raise RenderError(f"{path}: unrecognized report header: {sorted(cols)}")
    return ReportFrame(label=path.stem, f_thz=f, series=series)


def render_comparison(csv_paths, out_path) -> Path:
    """One panel per input CSV; model as line, split-step as markers.

    Returns the written path.  Raises RenderError before creating the file
    if any input is empty or the panels' frequency grids are incompatible.
    """
    paths = [Path(p) for p in csv_paths]
    if not paths:
        raise RenderError("no input reports")
    frames = [load_frame(p) for p in paths]
    n0 = len(frames[0].f_thz)
    for fr in frames[1:]:
        if len(fr.f_thz) != n0 or not np.allclose(fr.f_thz, frames[0].f_thz,
                                                  rtol=0, atol=1e-9):
            raise RenderError(
                f"panel {fr.label!r} uses a different frequency grid than "
                f"{frames[0].label!r}")

    matplotlib.rcParams["svg.hashsalt"] = "nli-plots"
    fig, axes = plt.subplots(1, len(frames), figsize=(4.2 * len(frames), 3.2),
                             sharey=True, squeeze=False)
    lo = min(min(s.min() for s in fr.series.values()) for fr in frames)
    hi = max(max(s.max() for s in fr.series.values()) for fr in frames)
    pad = 0.05 * max(hi - lo, 1.0)
    for ax, fr in zip(axes[0], frames):
        if "model" in fr.series:
            ax.plot(fr.f_thz, fr.series["model"], "-", color="#1f77b4",
                    lw=1.4, label="model")
        if "ssfm" in fr.series:
            ax.plot(fr.f_thz, fr.series["ssfm"], "o", color="#d62728",
                    ms=3.5, mfc="none", label="split-step")
        ax.set_xlabel("channel frequency (THz)")
        ax.set_title(fr.label, fontsize=9)
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=8, loc="lower center")
    axes[0][0].set_ylabel("nonlinear SNR (dB)")
    axes[0][0].set_ylim(lo - pad, hi + pad)
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return out_path


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="nli-plots", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render panels from report CSVs")
    p.add_argument("--in", dest="inputs", nargs="+", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--panels", choices=["by-scenario"], default="by-scenario")
    ns = ap.parse_args(argv)
    try:
        out = render_comparison(ns.inputs, ns.out)
    except (RenderError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
