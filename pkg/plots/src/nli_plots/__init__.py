"""Figure scripts for per-channel nonlinear-SNR CSV reports."""

__version__ = "0.1.0"

from .render import ReportFrame, render_comparison

__all__ = ["ReportFrame", "render_comparison"]
