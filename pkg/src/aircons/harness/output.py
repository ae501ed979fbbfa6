"""Deterministic CSV emission. Floats are written with ``repr`` so files round-trip exactly."""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from aircons.platoon import PlatoonTrace

TRACE_CSV_COLUMNS = ("t", "av_index", "position", "velocity", "accel", "alpha",
                     "spacing_error", "gamma_used", "gamma_truth")


def _cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return "" if np.isnan(value) else repr(float(value))
    if isinstance(value, (np.integer, np.bool_)):
        return str(int(value))
    return str(value)


def rows_to_csv(rows, columns) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row[c]) for c in columns])
    return buf.getvalue()


def trace_rows(trace: PlatoonTrace):
    """One row per tick and AV, leader included (its alpha and error are 0)."""
    alphas = trace.alphas
    err = trace.spacing_error
    T, M = trace.positions.shape
    gu = trace.gamma_used if trace.gamma_used is not None else np.full((T, M), np.nan)
    gt = trace.gamma_truth if trace.gamma_truth is not None else np.full((T, M), np.nan)
    for i in range(T):
        t = float(trace.t[i])
        for n in range(M):
            yield {
                "t": t,
                "av_index": n,
                "position": float(trace.positions[i, n]),
                "velocity": float(trace.velocities[i, n]),
                "accel": float(trace.accels[i, n]),
                "alpha": float(alphas[i, n]),
                "spacing_error": float(err[i, n]),
                "gamma_used": float(gu[i, n]),
                "gamma_truth": float(gt[i, n]),
            }


def trace_to_csv(trace: PlatoonTrace) -> str:
    return rows_to_csv(trace_rows(trace), TRACE_CSV_COLUMNS)


def write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path
