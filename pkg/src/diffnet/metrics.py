"""Performance metrics, operation accounting and run summaries."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .theory import op_cost

__all__ = [
    "SERIES",
    "CSV_COLUMNS",
    "RunSummary",
    "nmsd",
    "nmse",
    "to_db",
    "moving_average",
    "steady_state_summary",
    "accumulate_ops",
]

SERIES = ("nmsd", "nmse", "v_s", "v_t", "mults", "sums", "divs", "comparisons")
CSV_COLUMNS = ("n", "nmsd_db", "nmse_db", "v_s", "v_t", "mults", "sums", "divs", "comparisons",
               "nmsd_db_smooth", "nmse_db_smooth", "v_s_smooth", "v_t_smooth")


def nmsd(w_all, w_o):
    """Network mean-square deviation, averaged over nodes (last-but-one axis)."""
    dev = np.asarray(w_o)[..., None, :] - w_all
    return np.einsum("...km,...km->...", dev, dev) / dev.shape[-2]


def nmse(errors):
    errors = np.asarray(errors)
    return np.mean(errors * errors, axis=-1)


def to_db(x):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(x)


def moving_average(series, window=64):
    """Causal mean over the last ``window`` points (shorter during warm-up)."""
    if window < 1:
        raise ValueError("window must be at least 1")
    x = np.asarray(series, dtype=float)
    c = np.cumsum(np.concatenate([[0.0], x]))
    n = np.arange(1, len(x) + 1)
    lo = np.maximum(n - window, 0)
    return (c[n] - c[lo]) / (n - lo)


def accumulate_ops(algorithm, M, sizes, sbar):
    """Network totals of modelled operations for one iteration.

    ``sbar`` is ``(..., V)``; returns four arrays of shape ``(...)``.
    """
    counts = op_cost(algorithm, M, np.asarray(sizes), np.asarray(sbar, dtype=np.int64))
    shape = np.shape(sbar)
    return tuple(np.broadcast_to(c, shape).sum(axis=-1) for c in counts)


@dataclass
class RunSummary:
    """Realization-averaged series of one algorithm in one scenario.

    ``series[name]`` has one entry per iteration (linear scale for NMSD and
    NMSE). ``diverged`` lists realizations dropped for non-finite metrics.
    """

    label: str
    series: dict[str, np.ndarray]
    realizations: int
    diverged: list[dict] = field(default_factory=list)
    steady_state: dict[str, float] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return len(self.series["nmsd"])

    def table(self, window=64) -> dict[str, np.ndarray]:
        s = self.series
        nmsd_db, nmse_db = to_db(s["nmsd"]), to_db(s["nmse"])
        return {
            "n": np.arange(self.iterations),
            "nmsd_db": nmsd_db,
            "nmse_db": nmse_db,
            "v_s": s["v_s"],
            "v_t": s["v_t"],
            "mults": s["mults"],
            "sums": s["sums"],
            "divs": s["divs"],
            "comparisons": s["comparisons"],
            "nmsd_db_smooth": to_db(moving_average(s["nmsd"], window)),
            "nmse_db_smooth": to_db(moving_average(s["nmse"], window)),
            "v_s_smooth": moving_average(s["v_s"], window),
            "v_t_smooth": moving_average(s["v_t"], window),
        }

    def to_csv(self) -> str:
        cols = self.table()
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for i in range(self.iterations):
            writer.writerow([_fmt(cols[c][i]) for c in CSV_COLUMNS])
        return buf.getvalue()


def _fmt(v):
    if isinstance(v, (np.integer, int)):
        return str(int(v))
    v = float(v)
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def steady_state_summary(records, window=600):
    """Mean of every metric over the final ``window`` iterations.

    ``records`` maps metric names to arrays shaped ``(N,)`` or
    ``(R, N)``; realization axes are averaged after the time window.
    """
    out = {}
    for name, values in records.items():
        values = np.asarray(values, dtype=float)
        if values.shape[-1] < window:
            raise ValueError(f"series {name!r} has {values.shape[-1]} points, window is {window}")
        out[name] = float(np.mean(values[..., -window:]))
    return out
