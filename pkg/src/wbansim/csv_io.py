"""CSV export of per-round metrics and run summaries.

Output is byte-stable for identical inputs: fixed header, \n line ends,
floats printed with nine significant digits.
"""

from __future__ import annotations

import os

from .engine import MetricsRow, RunSummary

CSV_HEADER = ("round,alive,dead,total_energy_j,generated,received,"
              "dropped,pdr,hot_links,handovers")
SUMMARY_HEADER = "protocol,stability_period,lifetime,instability_period,final_pdr"
COMPARISON_HEADER = "protocol,seed," + CSV_HEADER


def _fmt(value: float) -> str:
    return f"{value:.9g}"


def format_row(row: MetricsRow) -> str:
    return ",".join([
        str(row.round), str(row.alive), str(row.dead),
        _fmt(row.total_energy), str(row.generated), str(row.received),
        str(row.dropped_total), _fmt(row.pdr), str(row.hot_links),
        str(row.handovers),
    ])


def write_metrics_csv(rows: list, summary: RunSummary, path: str) -> None:
    """Write one CSV (header plus a row per round) and the companion
    `<path>.summary` file."""
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        for row in rows:
            fh.write(format_row(row) + "\n")
    with open(path + ".summary", "w", encoding="utf-8", newline="") as fh:
        fh.write(SUMMARY_HEADER + "\n")
        fh.write(",".join([
            summary.protocol,
            str(summary.stability_period),
            str(summary.lifetime),
            str(summary.instability_period),
            _fmt(summary.final_pdr),
        ]) + "\n")


def write_comparison_csv(entries: list, path: str) -> None:
    """Merged long-format CSV: entries are (protocol, seed, rows)."""
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(COMPARISON_HEADER + "\n")
        for protocol, seed, rows in entries:
            for row in rows:
                fh.write(f"{protocol},{seed},{format_row(row)}\n")
