"""Render relative-efficiency sweep charts from harness CSV output.

Input is the experiment harness's raw.csv schema; one line is drawn per
(algorithm, series value) pair showing mean eta versus snapshot count,
with an optional +/-1 std band. Aggregation happens here from the raw
rows so bands always match the plotted means, and rows are sorted before
grouping so the plotted series are independent of CSV row order.
"""

from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import pandas as pd

SERIES_KEYS = ("m", "grid", "algorithm")

_BASE_COLUMNS = ["grid_rx", "grid_tx", "T", "m", "snr_db", "algorithm", "trial", "eta"]

_SERIES_COLUMNS = {
    "m": ["m"],
    "grid": ["grid_rx", "grid_tx"],
    "algorithm": [],
}


@dataclass(frozen=True)
class PlotSpec:
    """What to read, how to group the lines, and where to write the image."""

    csv_path: str
    series: str
    out_path: str
    band: bool = False

    def __post_init__(self):
        if self.series not in SERIES_KEYS:
            raise ValueError(f"series must be one of {SERIES_KEYS}")


def load_rows(csv_path, series):
    """Read raw sweep rows, checking schema and non-emptiness."""
    df = pd.read_csv(csv_path)
    needed = _BASE_COLUMNS + _SERIES_COLUMNS[series]
    missing = [c for c in dict.fromkeys(needed) if c not in df.columns]
    if missing:
        raise ValueError(f"CSV is missing required columns: {missing}")
    if len(df) == 0:
        raise ValueError("CSV has no data rows")
    return df


def _series_label(series, alg, key):
    if series == "m":
        return f"{alg}, m={key}"
    if series == "grid":
        return f"{alg}, grid={key[0]}x{key[1]}"
    return str(alg)


def aggregate_series(df, series):
    """Mean/std eta per (algorithm, series value, T), keyed by legend label.

    Returns an ordered mapping label -> {"T": [...], "eta_mean": [...],
    "eta_std": [...]}; std uses population normalization.
    """
    df = df.sort_values(list(df.columns), kind="mergesort").reset_index(drop=True)
    if series == "m":
        group_cols = ["algorithm", "m"]
    elif series == "grid":
        group_cols = ["algorithm", "grid_rx", "grid_tx"]
    else:
        group_cols = ["algorithm"]
    out = {}
    for key, chunk in df.groupby(group_cols, sort=True):
        alg = key[0]
        series_key = key[1] if series == "m" else (key[1], key[2]) if series == "grid" else None
        label = _series_label(series, alg, series_key)
        stats = chunk.groupby("T", sort=True)["eta"].agg(
            eta_mean="mean", eta_std=lambda x: float(pd.Series(x).std(ddof=0)) if len(x) else 0.0
        )
        out[label] = {
            "T": [int(t) for t in stats.index],
            "eta_mean": [float(v) for v in stats["eta_mean"]],
            "eta_std": [0.0 if pd.isna(v) else float(v) for v in stats["eta_std"]],
        }
    return out


def render(spec):
    """Draw the chart described by spec and return the plotted series."""
    df = load_rows(spec.csv_path, spec.series)
    series = aggregate_series(df, spec.series)
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for label, data in series.items():
        line, = ax.plot(data["T"], data["eta_mean"], marker="o", label=label)
        if spec.band:
            lo = [m - s for m, s in zip(data["eta_mean"], data["eta_std"])]
            hi = [m + s for m, s in zip(data["eta_mean"], data["eta_std"])]
            ax.fill_between(data["T"], lo, hi, color=line.get_color(), alpha=0.15)
    ax.set_xlabel("snapshots T")
    ax.set_ylabel("relative efficiency")
    ax.set_ylim(0.0, 1.0)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(spec.out_path, dpi=150)
    plt.close(fig)
    return series
