"""Rendering companion for spmdbench CSV outputs: distribution plots,
throughput charts and portability tables."""

from .io import (RAW_HEADER, SUMMARY_HEADER, NoDataError, ResultFrame,
                 SchemaError, load_results)
from .plots import plot_bandwidth, plot_throughput
from .tables import render_phi_table

__version__ = "0.1.0"
