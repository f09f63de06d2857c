"""Forecasting phase: univariate quantile ensembles and their reordering.

Each hour's ensemble holds the m equally spaced quantiles of the predicted
error distribution around the bias-corrected point forecast.  Pairing the 24
hourly ensembles row-wise through a rank matrix transfers the learned
dependence onto the forecast (the Schaake shuffle); the independence variant
pairs them through random permutations instead.
"""
from __future__ import annotations

import csv
import datetime
from dataclasses import dataclass

import numpy as np

from .copula import CopulaError, is_rank_matrix
from .margins import MarginModel, quantile


@dataclass(frozen=True)
class EnsembleForecast:
    """m x H matrix of simulated prices for one target day (row = scenario)."""

    date: datetime.date
    members: np.ndarray

    def __post_init__(self):
        members = np.array(self.members, dtype=float)
        if members.ndim != 2:
            raise ValueError("members must be an m x H matrix")
        if not np.all(np.isfinite(members)):
            raise ValueError("members must be finite")
        members.setflags(write=False)
        object.__setattr__(self, "members", members)

    @property
    def m(self) -> int:
        return self.members.shape[0]


def make_univariate_ensemble(point_fc: float, one_step, margin: MarginModel,
                             m: int) -> np.ndarray:
    """m-member quantile ensemble for one hour, sorted ascending.

    Member i is (point forecast + mu) + F^{-1}(i/(m+1)) * sigma, with (mu,
    sigma) the filter's one-step forecast and F the margin.  The raw variant
    corresponds to (mu, sigma) = (0, 1).
    """
    mu, sigma = one_step
    if not sigma > 0:
        raise ValueError(f"one-step sigma must be positive, got {sigma}")
    if m < 1:
        raise ValueError("ensemble size must be >= 1")
    if not np.isfinite(point_fc):
        raise ValueError("point forecast must be finite")
    levels = np.arange(1, m + 1) / (m + 1)
    return (point_fc + mu) + quantile(margin, levels) * sigma


def _stack_sorted(ensembles) -> np.ndarray:
    members = np.column_stack([np.asarray(e, dtype=float) for e in ensembles])
    if np.any(np.diff(members, axis=0) < 0):
        raise ValueError("univariate ensembles must be sorted ascending")
    return members


def shuffle(ensembles, rank_matrix: np.ndarray, date=None) -> EnsembleForecast:
    """Reorder sorted hourly ensembles by a rank matrix.

    Scenario row t, hour h is the rank_matrix[t, h]-th smallest member of
    hour h's ensemble, so every column keeps its marginal member multiset.
    """
    members = _stack_sorted(ensembles)
    rank_matrix = np.asarray(rank_matrix)
    if rank_matrix.shape != members.shape:
        raise CopulaError(
            f"rank matrix shape {rank_matrix.shape} does not match "
            f"ensemble shape {members.shape}")
    if not is_rank_matrix(rank_matrix):
        raise CopulaError("rank matrix columns must be permutations of 1..m")
    paired = np.take_along_axis(members, rank_matrix - 1, axis=0)
    return EnsembleForecast(date, paired)


def independence_forecast(ensembles, seed: int, date=None) -> EnsembleForecast:
    """Pair hourly ensembles by independent seeded random permutations."""
    members = _stack_sorted(ensembles)
    m, n_hours = members.shape
    rng = np.random.Generator(np.random.Philox(seed))
    ranks = np.column_stack([rng.permutation(m) + 1 for _ in range(n_hours)])
    paired = np.take_along_axis(members, ranks - 1, axis=0)
    return EnsembleForecast(date, paired)


def write_forecasts_csv(forecasts, path) -> None:
    """Serialize forecasts to CSV with columns ``date,member,h1..h24``."""
    forecasts = list(forecasts)
    n_hours = forecasts[0].members.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "member"] + [f"h{h + 1}" for h in range(n_hours)])
        for fc in forecasts:
            for i in range(fc.m):
                writer.writerow([fc.date.isoformat(), i + 1]
                                + [repr(float(v)) for v in fc.members[i]])


def read_forecasts_csv(path) -> list:
    """Parse a forecasts CSV written by :func:`write_forecasts_csv`."""
    by_date: dict = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:2] != ["date", "member"]:
            raise ValueError(f"{path}: expected header 'date,member,h1..'")
        for row in reader:
            if not row:
                continue
            date = datetime.date.fromisoformat(row[0])
            by_date.setdefault(date, []).append((int(row[1]), [float(v) for v in row[2:]]))
    out = []
    for date in sorted(by_date):
        rows = sorted(by_date[date])
        out.append(EnsembleForecast(date, np.array([r[1] for r in rows])))
    return out
