"""Day x hour panels of prices / point forecasts, CSV ingestion, error computation.

A panel is a T x 24 matrix of finite values indexed by strictly increasing
calendar dates.  Dates are opaque labels; no timezone logic lives here.
"""
from __future__ import annotations

import csv
import datetime
import warnings
from dataclasses import dataclass

import numpy as np

N_HOURS = 24


class PanelError(ValueError):
    """Malformed panel data (CSV structure, shapes, dates, non-finite cells)."""


@dataclass(frozen=True)
class HourlyPanel:
    """Aligned day x hour matrix of realized or predicted values.

    Parameters
    ----------
    dates : tuple of datetime.date
        Strictly increasing, no duplicates, length T.
    values : numpy.ndarray
        T x 24 array of finite floats.  Stored read-only.
    """

    dates: tuple
    values: np.ndarray

    def __post_init__(self):
        dates = tuple(self.dates)
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[1] != N_HOURS:
            raise PanelError(f"panel values must be T x {N_HOURS}, got shape {values.shape}")
        if len(dates) != values.shape[0] or len(dates) < 1:
            raise PanelError("number of dates must match number of rows and be >= 1")
        for a, b in zip(dates, dates[1:]):
            if not a < b:
                raise PanelError(f"dates must be strictly increasing, got {a} before {b}")
        if not np.all(np.isfinite(values)):
            raise PanelError("panel contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", values)

    @property
    def n_days(self) -> int:
        return len(self.dates)

    def restrict(self, start=None, end=None) -> "HourlyPanel":
        """Sub-panel with dates in [start, end] (either bound may be None)."""
        keep = [i for i, d in enumerate(self.dates)
                if (start is None or d >= start) and (end is None or d <= end)]
        if not keep:
            raise PanelError("restriction leaves no days")
        return type(self)(tuple(self.dates[i] for i in keep), self.values[keep])


class ErrorPanel(HourlyPanel):
    """Panel of forecast errors (realization minus forecast)."""


def load_panel(path, role: str = "realization") -> HourlyPanel:
    """Parse a long-format CSV (``date,hour,value``) into an :class:`HourlyPanel`.

    Days are sorted ascending regardless of file order.  Days with fewer than
    24 distinct hours are dropped with a warning; duplicate cells, hours
    outside 1..24 and non-finite values raise :class:`PanelError`.
    """
    cells: dict = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip().lower() for c in header] != ["date", "hour", "value"]:
            raise PanelError(f"{path}: expected header 'date,hour,value', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                raise PanelError(f"{path}:{lineno}: expected 3 columns, got {len(row)}")
            try:
                date = datetime.date.fromisoformat(row[0].strip())
            except ValueError as exc:
                raise PanelError(f"{path}:{lineno}: bad date {row[0]!r}: {exc}") from None
            try:
                hour = int(row[1])
            except ValueError:
                raise PanelError(f"{path}:{lineno}: bad hour {row[1]!r}") from None
            if not 1 <= hour <= N_HOURS:
                raise PanelError(f"{path}:{lineno}: hour {hour} outside 1..{N_HOURS}")
            try:
                value = float(row[2])
            except ValueError:
                raise PanelError(f"{path}:{lineno}: bad value {row[2]!r}") from None
            if not np.isfinite(value):
                raise PanelError(f"{path}:{lineno}: non-finite value {row[2]!r}")
            day = cells.setdefault(date, {})
            if hour in day:
                raise PanelError(f"{path}:{lineno}: duplicate cell ({date}, hour {hour})")
            day[hour] = value

    if not cells:
        raise PanelError(f"{path}: no data rows")

    dates, rows = [], []
    for date in sorted(cells):
        day = cells[date]
        if len(day) < N_HOURS:
            missing = sorted(set(range(1, N_HOURS + 1)) - set(day))
            warnings.warn(
                f"{path}: dropping {role} day {date}: missing hours {missing}",
                stacklevel=2,
            )
            continue
        dates.append(date)
        rows.append([day[h] for h in range(1, N_HOURS + 1)])
    if not dates:
        raise PanelError(f"{path}: no complete {N_HOURS}-hour days")
    return HourlyPanel(tuple(dates), np.array(rows))


def save_panel(panel: HourlyPanel, path) -> None:
    """Serialize a panel to the long CSV format accepted by :func:`load_panel`."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "hour", "value"])
        for i, date in enumerate(panel.dates):
            for h in range(N_HOURS):
                writer.writerow([date.isoformat(), h + 1, repr(float(panel.values[i, h]))])


def compute_errors(real: HourlyPanel, fc: HourlyPanel) -> ErrorPanel:
    """Cell-wise forecast errors, realization minus forecast."""
    if real.dates != fc.dates:
        raise PanelError("realization and forecast panels have different dates")
    return ErrorPanel(real.dates, real.values - fc.values)
