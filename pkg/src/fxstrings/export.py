"""Plot-ready CSV and JSON writers with fixed column headers.

Floats are written with ``repr`` so output is exact and byte-stable.
"""

from __future__ import annotations

import json
import math

import numpy as np

SWEEP_COLUMNS = ("l_s", "T_seconds", "mean", "dispersion", "n")
SWEEP_CI_COLUMNS = SWEEP_COLUMNS + ("ci_low", "ci_high")
PROFILE_COLUMNS = ("h", "mean", "dispersion")
DFT_COLUMNS = ("k", "re", "im")
CORRSUM_COLUMNS = ("epsilon", "C")
POLARIZATION_COLUMNS = ("tau", "t", "g_window", "distance")
ROTATION_COLUMNS = ("t", "d", "M")
SERIES_COLUMNS = ("t", "value")
STRING_COLUMNS = ("h", "value")
BRANE_COLUMNS = ("h1", "h2", "value")
SCATTER_COLUMNS = ("sigma", "amplitude")


def _cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return ""
    return repr(float(x) + 0.0)  # no "-0.0"


def _json_cell(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if x is None:
        return None
    x = float(x) + 0.0
    return None if math.isnan(x) or math.isinf(x) else x


class Table:
    """Column header plus rows, and optional scalar metadata for JSON."""

    def __init__(self, columns, rows, meta=None):
        self.columns = tuple(columns)
        self.rows = [tuple(r) for r in rows]
        self.meta = dict(meta or {})
        for r in self.rows:
            if len(r) != len(self.columns):
                raise ValueError("row width does not match the header")

    @classmethod
    def from_columns(cls, columns, arrays, meta=None):
        arrays = [np.asarray(a) for a in arrays]
        return cls(columns, zip(*[a.tolist() for a in arrays]), meta)

    def write_csv(self, fh) -> None:
        fh.write(",".join(self.columns) + "\n")
        for r in self.rows:
            fh.write(",".join(_cell(x) for x in r) + "\n")

    def write_json(self, fh) -> None:
        doc = {"columns": list(self.columns),
               "rows": [[_json_cell(x) for x in r] for r in self.rows]}
        if self.meta:
            doc["meta"] = {k: _json_cell(v) if not isinstance(v, (str, dict, list)) else v
                           for k, v in self.meta.items()}
        json.dump(doc, fh, sort_keys=True, allow_nan=False)
        fh.write("\n")

    def write(self, fh, fmt: str = "csv") -> None:
        if fmt == "json":
            self.write_json(fh)
        else:
            self.write_csv(fh)


def sweep_table(res) -> Table:
    cols = [res.lengths, res.real_time, res.mean, res.dispersion, res.sample_count]
    if res.ci_low is not None:
        return Table.from_columns(SWEEP_CI_COLUMNS, cols + [res.ci_low, res.ci_high])
    return Table.from_columns(SWEEP_COLUMNS, cols)


def profile_table(prof) -> Table:
    return Table.from_columns(PROFILE_COLUMNS, [prof.h_axis, prof.mean, prof.dispersion],
                              {"windows": prof.windows})


def dft_table(modes) -> Table:
    modes = np.asarray(modes)
    return Table.from_columns(DFT_COLUMNS, [np.arange(len(modes)), modes.real, modes.imag])


def corrsum_table(cs, fit=None) -> Table:
    meta = fit.to_dict() if fit is not None else None
    return Table.from_columns(CORRSUM_COLUMNS, [cs.epsilon, cs.C], meta)


def polarization_table(ps) -> Table:
    t = ps.t if ps.t is not None else np.full(len(ps.tau), -1, dtype=np.int64)
    meta = {"excluded": ps.excluded, "cold": ps.cold}
    try:
        meta["g"] = ps.g
    except ArithmeticError:
        meta["g"] = None
    return Table.from_columns(POLARIZATION_COLUMNS, [ps.tau, t, ps.ratio, ps.distance], meta)


def rotation_table(rs, time_unit_seconds: float = 3600.0) -> Table:
    alpha = rs.alpha(time_unit_seconds)
    return Table.from_columns(ROTATION_COLUMNS, [rs.t, rs.d, rs.M],
                              {"alpha": alpha, "alpha_2pi": 2.0 * math.pi * alpha, "l_s": rs.l_s})


def series_table(t, values, meta=None) -> Table:
    return Table.from_columns(SERIES_COLUMNS, [t, values], meta)
