"""Per-channel result tables, CSV serialization and run manifests."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .units import w_to_dbm

CSV_HEADER = ["channel_index", "f_thz", "power_dbm", "sigma2_nli_dbm", "snr_nli_db"]


@dataclass(frozen=True)
class NliReport:
    """Per-channel NLI variance and SNR, ordered by channel index."""

    channel_index: np.ndarray
    f_thz: np.ndarray
    power_w: np.ndarray
    sigma2_nli_w: np.ndarray
    snr_nli_db: np.ndarray
    source: str = "model"   # "model" | "ssfm"

    def __post_init__(self):
        n = len(self.channel_index)
        for name in ("f_thz", "power_w", "sigma2_nli_w", "snr_nli_db"):
            if len(getattr(self, name)) != n:
                raise ValueError("report columns must have equal length")
        if np.any(np.diff(self.channel_index) <= 0):
            raise ValueError("rows must be strictly ordered by channel index")

    def to_csv(self, path=None, with_source=False) -> str:
        buf = io.StringIO()
        header = CSV_HEADER + (["source"] if with_source else [])
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for k in range(len(self.channel_index)):
            row = [int(self.channel_index[k]),
                   repr(float(self.f_thz[k])),
                   repr(float(w_to_dbm(self.power_w[k]))),
                   repr(float(w_to_dbm(self.sigma2_nli_w[k]))),
                   repr(float(self.snr_nli_db[k]))]
            if with_source:
                row.append(self.source)
            writer.writerow(row)
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, path) -> "NliReport":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            raise ValueError(f"empty report: {path}")
        idx = np.array([int(r["channel_index"]) for r in rows])
        f = np.array([float(r["f_thz"]) for r in rows])
        p = 1e-3 * 10 ** (np.array([float(r["power_dbm"]) for r in rows]) / 10)
        s = 1e-3 * 10 ** (np.array([float(r["sigma2_nli_dbm"]) for r in rows]) / 10)
        snr = np.array([float(r["snr_nli_db"]) for r in rows])
        source = rows[0].get("source", "model") or "model"
        return cls(idx, f, p, s, snr, source=source)


def config_hash(config_dict: dict) -> str:
    payload = json.dumps(config_dict, sort_keys=True).encode()
    return hashlib.sha256(payload).hexdigest()


def write_manifest(path, config_dict: dict, seed, extra=None) -> None:
    """Reproducibility sidecar: config hash, seed and versions (no timestamps,
    so reruns are byte-identical)."""
    from . import __version__

    manifest = {
        "config_sha256": config_hash(config_dict),
        "seed": seed,
        "versions": {"wideband_gn": __version__, "numpy": np.__version__},
    }
    if extra:
        manifest.update(extra)
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
