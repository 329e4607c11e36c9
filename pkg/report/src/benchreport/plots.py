"""Distribution and throughput plots from benchmark CSV frames.

Every plot is written as both SVG and PNG next to the requested output path,
with fixed hash salt and no date metadata so rendering is deterministic for
fixed inputs.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .fom import fom_axis_label, recompute_fom  # noqa: E402
from .io import NoDataError, ResultFrame, require_kind  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "benchreport"

VIOLIN_MIN_N = 50


def _outputs(out_path, suffix: str = "") -> list[Path]:
    base = Path(out_path)
    stem = base.with_suffix("")
    return [Path(f"{stem}{suffix}.svg"), Path(f"{stem}{suffix}.png")]


def _save(fig, paths: list[Path]) -> None:
    for p in paths:
        p.parent.mkdir(parents=True, exist_ok=True)
        meta = {"Date": None} if p.suffix == ".svg" else None
        fig.savefig(p, metadata=meta)
    plt.close(fig)


def plot_bandwidth(frame: ResultFrame, workload: str, out_path) -> list[Path]:
    """Distribution of per-iteration bandwidth per kernel, grouped by
    backend; one figure per dtype.  Violin for n >= 50 samples per group,
    box-with-points below that."""
    if workload not in ("stencil", "stream"):
        raise NoDataError(f"bandwidth plots cover stencil/stream, not {workload!r}")
    table = require_kind(frame, "raw")
    rows = table[table["workload"] == workload]
    if rows.empty:
        raise NoDataError(f"no raw rows for workload {workload!r}")
    written: list[Path] = []
    for dtype in sorted(rows["dtype"].unique()):
        sel = rows[rows["dtype"] == dtype]
        groups = sorted(sel.groupby(["kernel", "backend"]).groups)
        values = []
        for kernel, backend in groups:
            g = sel[(sel["kernel"] == kernel) & (sel["backend"] == backend)]
            values.append(np.array([
                recompute_fom(workload, kernel, dtype, p, t)
                for p, t in zip(g["params"], g["time_s"])]))
        fig, ax = plt.subplots(figsize=(1.2 * len(groups) + 3, 4))
        pos = np.arange(1, len(groups) + 1)
        if min(len(v) for v in values) >= VIOLIN_MIN_N:
            ax.violinplot(values, positions=pos, showmedians=True)
        else:
            ax.boxplot(values, positions=pos, widths=0.5)
            rng = np.random.RandomState(0)  # fixed jitter, deterministic
            for x, v in zip(pos, values):
                ax.plot(x + rng.uniform(-0.12, 0.12, len(v)), v, ".",
                        markersize=3, alpha=0.6)
        ax.set_xticks(pos)
        ax.set_xticklabels([f"{k}\n{b}" for k, b in groups], fontsize=8)
        ax.set_ylabel(fom_axis_label(workload))
        ax.set_title(f"{workload} per-iteration bandwidth ({dtype})")
        ax.grid(True, axis="y", alpha=0.3)
        paths = _outputs(out_path, f"_{dtype}")
        _save(fig, paths)
        written += paths
    return written


def plot_throughput(frame: ResultFrame, out_path) -> list[Path]:
    """Docking throughput (GFLOP/s) versus poses-per-work-item, one panel
    per work-group size, one series per backend."""
    table = require_kind(frame, "summary")
    rows = table[table["workload"] == "bude"].copy()
    if rows.empty:
        raise NoDataError("no bude summary rows")
    from .fom import parse_params
    rows["ppwi"] = [int(parse_params(p)["ppwi"]) for p in rows["params"]]
    rows["wg"] = [int(parse_params(p)["wg"]) for p in rows["params"]]
    wgs = sorted(rows["wg"].unique())
    fig, axes = plt.subplots(1, len(wgs), figsize=(4.5 * len(wgs), 4),
                             squeeze=False, sharey=True)
    for ax, wg in zip(axes[0], wgs):
        panel = rows[rows["wg"] == wg]
        for backend in sorted(panel["backend"].unique()):
            series = panel[panel["backend"] == backend].sort_values("ppwi")
            ax.plot(series["ppwi"], series["fom_value"], "o-", label=backend)
        ax.set_xscale("log", base=2)
        ax.set_xlabel("poses per work-item")
        ax.set_title(f"wg = {wg}")
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=8)
    axes[0][0].set_ylabel(fom_axis_label("bude"))
    fig.suptitle("docking kernel throughput")
    paths = _outputs(out_path)
    _save(fig, paths)
    return paths
