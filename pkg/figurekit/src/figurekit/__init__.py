"""Chart rendering for covariance-estimation sweep CSVs."""

__version__ = "0.1.0"

from .plotting import PlotSpec, SERIES_KEYS, aggregate_series, load_rows, render

__all__ = ["PlotSpec", "SERIES_KEYS", "aggregate_series", "load_rows", "render"]
