"""Markdown portability tables joining candidate and baseline summaries."""

from __future__ import annotations

import statistics
from pathlib import Path

from .io import NoDataError, ResultFrame, SchemaError, require_kind

WALL_CLOCK_FOM = "wall_clock_s"
FOOTNOTE = ("[^wc]: wall-clock case; efficiency uses the inverted ratio "
            "baseline/candidate so that larger is better.")


def format_e(e: float) -> str:
    """Two decimals, or milli notation for tiny ratios (paper style)."""
    if 0 < e < 0.02:
        return f"{e * 1e3:.0f}E-3"
    return f"{e:.2f}"


def render_phi_table(candidate_frame: ResultFrame, baseline_frame: ResultFrame,
                     out_path=None) -> str:
    """Per-workload sections with one efficiency row per matched case and an
    arithmetic-mean row; returns (and optionally writes) markdown text."""
    cand = require_kind(candidate_frame, "summary")
    base = require_kind(baseline_frame, "summary")
    key_cols = ["workload", "kernel", "dtype", "params"]
    for name, tab in (("candidate", cand), ("baseline", base)):
        dup = tab.duplicated(subset=key_cols)
        if dup.any():
            offender = ",".join(str(v) for v in tab[dup].iloc[0][key_cols])
            raise SchemaError(
                f"{name} holds several rows for the same comparison key "
                f"({offender}); write one summary per implementation")
    joined = cand.merge(base, on=key_cols + ["fom_name"],
                        suffixes=("_cand", "_base"))
    if joined.empty:
        cand_keys = {tuple(r) for r in cand[key_cols].itertuples(index=False)}
        base_keys = {tuple(r) for r in base[key_cols].itertuples(index=False)}
        missing = sorted(cand_keys.symmetric_difference(base_keys))
        raise NoDataError("no matching keys; unmatched: "
                          + "; ".join(map(str, missing)))
    lines = ["# Performance portability", ""]
    used_footnote = False
    for workload, grp in joined.groupby("workload", sort=True):
        lines += [f"## {workload}", "",
                  "| case | candidate | baseline | e |",
                  "|------|-----------|----------|---|"]
        es = []
        for row in grp.itertuples(index=False):
            inverted = row.fom_name == WALL_CLOCK_FOM
            e = (row.fom_value_base / row.fom_value_cand if inverted
                 else row.fom_value_cand / row.fom_value_base)
            es.append(e)
            mark = "[^wc]" if inverted else ""
            case = f"{row.kernel} {row.dtype} {row.params}"
            lines.append(f"| {case} | {row.fom_value_cand:.6g} "
                         f"| {row.fom_value_base:.6g} | {format_e(e)}{mark} |")
            used_footnote |= inverted
        phi = statistics.fmean(es)
        lines.append(f"| **mean** | | | **{format_e(phi)}** |")
        lines.append("")
    if used_footnote:
        lines += [FOOTNOTE, ""]
    text = "\n".join(lines)
    if out_path is not None:
        Path(out_path).parent.mkdir(parents=True, exist_ok=True)
        Path(out_path).write_text(text)
    return text
