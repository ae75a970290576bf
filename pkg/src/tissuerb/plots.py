"""Deterministic SVG error curves (relative error vs basis size, log scale)."""
import math

import matplotlib

matplotlib.use("svg")
import matplotlib.pyplot as plt  # noqa: E402

_RC = {"svg.hashsalt": "tissuerb", "svg.fonttype": "none", "font.family": "DejaVu Sans"}


def error_curves(records, path, title=None):
    """Plot error vs N_V per method for one scenario; writes an SVG to ``path``.

    Rows without a finite positive error (failed or not stabilisable) are left out.
    """
    records = list(records)
    if not records:
        raise ValueError("no records to plot")
    series = {}
    for r in records:
        if math.isfinite(r.error) and r.error > 0:
            series.setdefault(r.method, []).append((r.N_V, r.error))
    if not series:
        raise ValueError("no record has a finite error")
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for method in sorted(series):
            pts = sorted(series[method])
            ax.semilogy([p[0] for p in pts], [p[1] for p in pts], marker="o", label=method)
        ax.set_xlabel("basis size $N_V$")
        ax.set_ylabel("relative error")
        ax.set_title(title or records[0].scenario)
        ax.grid(True, which="both", alpha=0.3)
        ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path


def plot_records(records, outdir):
    """One SVG per scenario present in ``records``; returns the written paths."""
    records = list(records)
    if not records:
        raise ValueError("no records to plot")
    paths = []
    for scenario in sorted({r.scenario for r in records}):
        rs = [r for r in records if r.scenario == scenario]
        paths.append(error_curves(rs, f"{outdir}/{scenario}_errors.svg"))
    return paths
