"""Simulation and analysis of a space-like separated Bell test."""

import csv
import io
import json

from ._core import (  # noqa: F401
    ConfigError,
    DegenerateFitError,
    InsufficientSpanError,
    InvalidValueError,
    ParseError,
    UndefinedCollapseError,
    UnreachableDisplacementError,
    __version__,
    analyze,
    bell_figures,
    budget,
    chsh_s,
    correlation,
    diosi_collapse_time,
    displacement_from_fringe,
    fit_fringe,
    parse_quantity,
    penrose_collapse_time,
    presets,
    s_from_visibility,
    scenario_text,
    subtract_accidentals,
)
from ._core import simulate as _simulate


def simulate(scenario="paper-2008", seed=None, duration=None, workers=1):
    """Run the pipeline; returns (scan rows, report dict)."""
    out = _simulate(scenario, seed, duration, workers)
    rows = list(csv.DictReader(io.StringIO(out["scan_csv"])))
    for r in rows:
        r["bin_index"] = int(r["bin_index"])
        r["phase_rad"] = float(r["phase_rad"])
        for k in ("singles_a", "singles_b", "coincidences"):
            r[k] = int(r[k])
    return rows, json.loads(out["report_json"])
