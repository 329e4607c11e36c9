"""Typed loading of benchmark CSVs.

The two file kinds are identified by their header line, which must match the
harness contract byte for byte; anything else is rejected with the offending
column named.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import pandas as pd

RAW_HEADER = "workload,kernel,backend,dtype,params,iter,time_s"
SUMMARY_HEADER = ("workload,kernel,backend,dtype,params,fom_name,fom_value,"
                  "time_min_s,time_mean_s,time_max_s,time_stddev_s")

RAW_KEY = ["workload", "kernel", "backend", "dtype", "params", "iter"]
SUMMARY_KEY = ["workload", "kernel", "backend", "dtype", "params"]


class SchemaError(ValueError):
    """A file does not follow the benchmark CSV contract."""


class NoDataError(ValueError):
    """A selection matched no rows."""


@dataclass
class ResultFrame:
    kind: str                 # "raw" | "summary"
    table: pd.DataFrame

    def __len__(self) -> int:
        return len(self.table)


def _classify_header(line: str, path) -> str:
    if line == RAW_HEADER:
        return "raw"
    if line == SUMMARY_HEADER:
        return "summary"
    got = line.split(",")
    # Name the first offending column against the closer contract.
    expected = (RAW_HEADER if len(got) <= 8 else SUMMARY_HEADER).split(",")
    for pos, (e, g) in enumerate(zip(expected, got)):
        if e != g:
            raise SchemaError(
                f"{path}: header column {pos + 1} is {g!r}, expected {e!r}")
    raise SchemaError(
        f"{path}: header has {len(got)} columns, expected "
        f"{len(expected)} ({expected[min(len(got), len(expected) - 1)]!r} "
        f"boundary)")


def load_results(paths: Sequence | str | Path) -> ResultFrame:
    """Load and concatenate one or more benchmark CSVs of a single kind."""
    if isinstance(paths, (str, Path)):
        paths = [paths]
    if not paths:
        raise NoDataError("no input files given")
    kinds, frames = [], []
    for path in paths:
        with open(path, newline="") as fh:
            first = fh.readline().rstrip("\n")
        kinds.append(_classify_header(first, path))
        frames.append(pd.read_csv(path, dtype=str, keep_default_na=False))
    if len(set(kinds)) > 1:
        raise SchemaError(
            "mixed raw and summary files cannot be loaded together: "
            + ", ".join(f"{p} ({k})" for p, k in zip(paths, kinds)))
    kind = kinds[0]
    table = pd.concat(frames, ignore_index=True)
    if kind == "raw":
        table["iter"] = table["iter"].astype(int)
        table["time_s"] = table["time_s"].astype(float)
        key = RAW_KEY
    else:
        for col in ("fom_value", "time_min_s", "time_mean_s", "time_max_s",
                    "time_stddev_s"):
            table[col] = table[col].astype(float)
        key = SUMMARY_KEY
    dup = table.duplicated(subset=key)
    if dup.any():
        first_dup = table[dup].iloc[0]
        raise SchemaError(
            "duplicate key rows: " + ",".join(str(first_dup[c]) for c in key))
    return ResultFrame(kind=kind, table=table)


def require_kind(frame: ResultFrame, kind: str) -> pd.DataFrame:
    if frame.kind != kind:
        raise SchemaError(f"need {kind} rows, got a {frame.kind} frame")
    return frame.table
