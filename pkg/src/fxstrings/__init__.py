"""String-theory inspired maps of FX tick data: maps, statistics and derivatives."""

__version__ = "0.1.0"

from .errors import DataError, FxStringsError, NumericError  # noqa: E402
from .ingest import GridSeries, TickSeries, parse_ticks, read_ticks, resample_grid  # noqa: E402
from .maps import Channel, StringConfig, Topology, evaluate, string_1end, string_2end  # noqa: E402

__all__ = [
    "Channel", "DataError", "FxStringsError", "GridSeries", "NumericError", "StringConfig",
    "TickSeries", "Topology", "evaluate", "parse_ticks", "read_ticks", "resample_grid",
    "string_1end", "string_2end",
]
