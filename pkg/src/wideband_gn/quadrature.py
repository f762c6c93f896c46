"""Node construction for the two-dimensional mixing integral.

The production scheme works in coordinates aligned with the hyperbolae
(f1 - f)(f2 - f) = const: with nu1 = f1 - f, nu2 = f2 - f it integrates
over p = nu1 nu2 (the hyperbola label, which fixes the oscillatory phase
rate) and t = nu1 (the position along a hyperbola), using
d nu1 d nu2 = dp dt / t.  Along a hyperbola the integrand varies only
through the piecewise-constant coupling factor, the smooth Raman term and
a slow third-order-dispersion phase drift, so a handful of nodes per
segment suffices; all fast oscillation lives in the one-dimensional
p direction where panels are sized against the known phase rate.

Quadrant pieces and their exact symmetry folds:

    PP  nu1, nu2 > 0      t in [sqrt(p), t+(W+)]          weight x2
    MM  nu1, nu2 < 0      t in [sqrt(p), t+(W-)]          weight x2
    PM  nu1 > 0 > nu2     t in [p/W-, W+]                 weight x2 (PM<->MP)

where W+ = hi - f, W- = f - lo and t+(W) = (W + sqrt(W^2 - 4p))/2 clips
the region where f1 + f2 - f leaves the band.  Channel-edge crossings of
all three mixing frequencies are explicit in t, so the coupling factor is
exactly piecewise constant between split points.

A plain tensor-product Cartesian scheme over (nu1, nu2) is retained as a
brute-force oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


class ConvergenceError(RuntimeError):
    """The quadrature failed its self-consistency check."""


@dataclass(frozen=True)
class OscillationScales:
    """Phase-rate bounds the node builder sizes its panels against.

    phi_scale  : max |d phi / dp| in rad per THz^2 (full link length)
    p_alpha    : hyperbola label where the span kernel rolls off (THz^2)
    drift_scale: rad of in-band phase drift per THz^2 of p, from beta3
    """

    phi_scale: float
    p_alpha: float
    drift_scale: float


@dataclass(frozen=True)
class QuadratureSpec:
    """Controls for the mixing-integral evaluation.

    scheme        : "hyperbolic" (production) or "cartesian-oracle"
    nodes_radial  : hyperbolic: max panels across the hyperbola family;
                    cartesian: Gauss nodes per axis
    nodes_angular : max nodes along one hyperbola
    rel_tol       : target relative error (drives panel sizing)
    band          : (lo, hi) THz integration limits; None = occupied band
    """

    scheme: str = "hyperbolic"
    nodes_radial: int = 4000
    nodes_angular: int = 4000
    rel_tol: float = 1e-3
    band: tuple | None = None
    # tuning knobs; presets pick consistent bundles
    raman_segments: int = 12
    tail_coverage: float = 300.0   # resolved-oscillation extent, units of p_alpha
    gl_radial: int = 3
    gl_angular: int = 3
    drift_tol_rad: float = 0.4
    log_step: float = 0.2
    channel_points: int = 3
    p_floor: float = 1e-8

    def __post_init__(self):
        if self.scheme not in ("hyperbolic", "cartesian-oracle"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.nodes_radial < 8 or self.nodes_angular < 8:
            raise ValueError("node counts must be at least 8 per dimension")
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be positive")

    @classmethod
    def production(cls) -> "QuadratureSpec":
        return cls(nodes_radial=9000, nodes_angular=6000, rel_tol=1e-3,
                   raman_segments=14, tail_coverage=300.0, gl_radial=3,
                   gl_angular=3, drift_tol_rad=0.4, log_step=0.18)

    @classmethod
    def reduced(cls) -> "QuadratureSpec":
        """Cheaper settings for channel sweeps at desk scale."""
        return cls(nodes_radial=2500, nodes_angular=1500, rel_tol=5e-3,
                   raman_segments=8, tail_coverage=60.0, gl_radial=3,
                   gl_angular=2, drift_tol_rad=0.9, log_step=0.3)

    @classmethod
    def desk(cls) -> "QuadratureSpec":
        """Well-converged settings for few-channel test configurations."""
        return cls(nodes_radial=4000, nodes_angular=3000, rel_tol=1e-3,
                   raman_segments=12, tail_coverage=400.0, gl_radial=3,
                   gl_angular=3, drift_tol_rad=0.3, log_step=0.15)


_CHUNK = 200_000


def _gl(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w  # on [0, 1]


def _p_panels(p_min, p_max, scales: OscillationScales, spec: QuadratureSpec):
    """Panel edges in p: log-spaced, refined to half an oscillation period
    inside the resolved region, capped at nodes_radial panels."""
    if p_max <= p_min:
        return np.array([])
    cov = scales.p_alpha * spec.tail_coverage
    half_period = np.pi / max(scales.phi_scale, 1e-12)
    edges = [p_min]
    p = p_min
    while p < p_max and len(edges) <= spec.nodes_radial:
        dp = spec.log_step * p
        if p < cov:
            dp = min(dp, half_period)
        p = min(p_max, p + dp)
        edges.append(p)
    if p < p_max:
        # budget exhausted: cover the rest with coarse log panels
        rest = np.geomspace(p, p_max, 32)[1:]
        edges.extend(rest.tolist())
    return np.asarray(edges)


def _expand_segments(u_edges, n_subs, xg, wg):
    """Vectorized composite Gauss nodes: split segment i into n_subs[i] equal
    sub-intervals and place the [0,1] rule on each."""
    counts = np.asarray(n_subs, dtype=int)
    widths = (u_edges[1:] - u_edges[:-1]) / counts
    seg_idx = np.repeat(np.arange(len(counts)), counts)
    within = np.arange(counts.sum()) - np.repeat(
        np.concatenate(([0], np.cumsum(counts)[:-1])), counts)
    lo = u_edges[:-1][seg_idx] + within * widths[seg_idx]
    w = widths[seg_idx]
    u = lo[:, None] + xg[None, :] * w[:, None]
    return u.ravel(), (w[:, None] * wg[None, :]).ravel()


def _piece_nodes(piece, p, edges_rel, wp, wm, scales, spec, xg, wg):
    """t-direction nodes/weights for one hyperbola; returns (nu1, nu2, w_t)."""
    if piece == "PP":
        w_band = wp
        if p >= 0.25 * w_band**2:
            return None
        t_lo = np.sqrt(p)
        t_hi = 0.5 * (w_band + np.sqrt(w_band**2 - 4.0 * p))
    elif piece == "MM":
        w_band = wm
        if p >= 0.25 * w_band**2:
            return None
        t_lo = np.sqrt(p)
        t_hi = 0.5 * (w_band + np.sqrt(w_band**2 - 4.0 * p))
    else:  # PM
        t_lo = p / wm
        t_hi = wp
        if t_lo >= t_hi:
            return None

    splits = [t_lo, t_hi]
    if piece == "PP":
        e = edges_rel[(edges_rel > t_lo) & (edges_rel < t_hi)]
        splits.append(e)                       # nu1 crossings
        e2 = edges_rel[(edges_rel > p / t_hi) & (edges_rel < t_lo)]
        if len(e2):
            splits.append(p / e2)              # nu2 crossings
        u = edges_rel[(edges_rel > 2.0 * t_lo) & (edges_rel < t_hi + p / t_hi)]
        if len(u):
            splits.append(0.5 * (u + np.sqrt(u**2 - 4.0 * p)))  # nu3 crossings
    elif piece == "MM":
        e = -edges_rel
        e1 = e[(e > t_lo) & (e < t_hi)]
        splits.append(e1)
        e2 = e[(e > p / t_hi) & (e < t_lo)]
        if len(e2):
            splits.append(p / e2)
        u = e[(e > 2.0 * t_lo) & (e < t_hi + p / t_hi)]
        if len(u):
            splits.append(0.5 * (u + np.sqrt(u**2 - 4.0 * p)))
    else:  # PM: nu1 = t, nu2 = -p/t, s = t - p/t
        e1 = edges_rel[(edges_rel > t_lo) & (edges_rel < t_hi)]
        splits.append(e1)
        e2 = -edges_rel
        e2 = e2[(e2 > p / t_hi) & (e2 < p / t_lo)]
        if len(e2):
            splits.append(p / e2)
        u = edges_rel
        root = 0.5 * (u + np.sqrt(u**2 + 4.0 * p))
        splits.append(root[(root > t_lo) & (root < t_hi)])

    t_splits = np.unique(np.clip(np.concatenate(
        [np.atleast_1d(np.asarray(s, dtype=float)) for s in splits]), t_lo, t_hi))
    if len(t_splits) < 2:
        return None
    u_edges = np.log(t_splits)

    # sub-segment count per piecewise-smooth stretch: resolve the 1/t measure,
    # the Raman variation and the beta3 phase drift along the hyperbola
    t_a, t_b = t_splits[:-1], t_splits[1:]
    if piece == "PM":
        s_a, s_b = t_a - p / t_a, t_b - p / t_b
    else:
        s_a, s_b = t_a + p / t_a, t_b + p / t_b
    drift = scales.drift_scale * p * np.abs(s_b - s_a)
    # beyond the kernel roll-off the contribution shrinks like (p_alpha/p)^2,
    # so the drift phase may be resolved proportionally more coarsely
    drift_tol = spec.drift_tol_rad * max(1.0, p / (8.0 * scales.p_alpha))
    n_sub = np.maximum(
        np.ceil((u_edges[1:] - u_edges[:-1]) / spec.log_step),
        np.ceil(drift / drift_tol)).astype(int)
    n_sub = np.maximum(n_sub, 1)
    total = int(n_sub.sum()) * len(xg)
    if total > spec.nodes_angular:
        scale = spec.nodes_angular / total
        n_sub = np.maximum(1, np.floor(n_sub * scale).astype(int))

    u, w_u = _expand_segments(u_edges, n_sub, xg, wg)
    t = np.exp(u)
    if piece == "PP":
        nu1, nu2 = t, p / t
    elif piece == "MM":
        nu1, nu2 = -t, -p / t
    else:
        nu1, nu2 = t, -p / t
    return nu1, nu2, 2.0 * w_u  # every piece carries an exact x2 symmetry fold


def hyperbolic_integrate(kernel_sq, f: float, band, edges, scales, spec) -> float:
    """Integrate kernel_sq(f, nu1, nu2) over the band-limited plane."""
    lo, hi = band
    wp, wm = hi - f, f - lo
    edges_rel = np.sort(np.asarray(edges, dtype=float) - f)
    xg_p, wg_p = _gl(spec.gl_radial)
    xg_t, wg_t = _gl(spec.gl_angular)

    total = 0.0
    buf_n1, buf_n2, buf_w = [], [], []
    buffered = 0

    def flush():
        nonlocal total, buffered, buf_n1, buf_n2, buf_w
        if buffered:
            n1 = np.concatenate(buf_n1)
            n2 = np.concatenate(buf_n2)
            w = np.concatenate(buf_w)
            total += float(np.dot(w, kernel_sq(f, n1, n2)))
            buf_n1, buf_n2, buf_w = [], [], []
            buffered = 0

    for piece, p_cap in (("PP", 0.25 * wp**2), ("MM", 0.25 * wm**2), ("PM", wp * wm)):
        if p_cap <= 0:
            continue
        p_min = min(spec.p_floor, 1e-4 * p_cap)
        panels = _p_panels(p_min, p_cap, scales, spec)
        for a, b in zip(panels[:-1], panels[1:]):
            for x, w in zip(xg_p, wg_p):
                p = a + x * (b - a)
                nodes = _piece_nodes(piece, p, edges_rel, wp, wm, scales, spec,
                                     xg_t, wg_t)
                if nodes is None:
                    continue
                nu1, nu2, w_t = nodes
                buf_n1.append(nu1)
                buf_n2.append(nu2)
                buf_w.append(w * (b - a) * w_t)
                buffered += len(nu1)
                if buffered >= _CHUNK:
                    flush()
    flush()
    return total


def cartesian_integrate(kernel_sq, f: float, band, edges, spec) -> float:
    """Brute-force tensor-product Gauss quadrature over (nu1, nu2)."""
    lo, hi = band
    pts = np.sort(np.unique(np.concatenate(
        [np.asarray(edges, dtype=float), [lo, hi]]))) - f
    pts = pts[(pts >= lo - f) & (pts <= hi - f)]
    deg = 4
    n_panels = max(len(pts) - 1, spec.nodes_radial // deg)
    lengths = np.diff(pts)
    counts = np.maximum(1, np.round(lengths / lengths.sum() * n_panels).astype(int))
    xg, wg = _gl(deg)
    u, w = _expand_segments(pts, counts, xg, wg)
    order = np.argsort(u, kind="stable")
    u, w = u[order], w[order]

    total = 0.0
    rows = max(1, _CHUNK // len(u))
    for start in range(0, len(u), rows):
        n1 = u[start:start + rows]
        w1 = w[start:start + rows]
        nu1 = np.repeat(n1, len(u))
        nu2 = np.tile(u, len(n1))
        ww = np.repeat(w1, len(u)) * np.tile(w, len(n1))
        total += float(np.dot(ww, kernel_sq(f, nu1, nu2)))
    return total


def convergence_estimate(nli_psd_fn, link, f: float, quad: QuadratureSpec) -> float:
    """Relative change of G(f) when the node budget shrinks by 25%; large
    values indicate an unconverged configuration."""
    coarse = replace(quad,
                     nodes_radial=max(8, int(quad.nodes_radial * 0.75)),
                     nodes_angular=max(8, int(quad.nodes_angular * 0.75)),
                     tail_coverage=quad.tail_coverage * 0.75,
                     log_step=quad.log_step * 1.3)
    a = nli_psd_fn(link, f, quad)
    b = nli_psd_fn(link, f, coarse)
    return abs(a - b) / max(abs(a), 1e-300)
