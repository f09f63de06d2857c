"""Load-profile price aggregation: weighted daily sums of hourly prices."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .forecast import EnsembleForecast
from .panel import N_HOURS

# Synthetic, illustrative commercial-style profile (kW per normalized
# consumer): low overnight, plateau across working hours.  Not measured
# data; supply a real profile via CSV for any substantive use.
_DEFAULT_WEIGHTS = (
    0.055, 0.050, 0.048, 0.047, 0.048, 0.055,
    0.075, 0.110, 0.150, 0.170, 0.180, 0.185,
    0.180, 0.175, 0.170, 0.165, 0.160, 0.150,
    0.135, 0.115, 0.095, 0.080, 0.070, 0.060,
)


@dataclass(frozen=True)
class LoadProfile:
    """Fixed hourly consumption weights used to price a daily demand.

    Normally 24 weights; shorter profiles are accepted for reduced-dimension
    examples and must match the priced vector's length.
    """

    weights: np.ndarray

    def __post_init__(self):
        weights = np.array(self.weights, dtype=float)
        if weights.ndim != 1 or weights.size < 1:
            raise ValueError("weights must be a non-empty vector")
        if np.any(weights < 0) or not np.any(weights > 0):
            raise ValueError("weights must be nonnegative with at least one positive")
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)


def default_profile() -> LoadProfile:
    """Bundled synthetic commercial-style profile (illustrative only)."""
    return LoadProfile(np.array(_DEFAULT_WEIGHTS))


def daily_price(prices, profile: LoadProfile) -> float:
    """Weighted sum of the hourly prices."""
    prices = np.asarray(prices, dtype=float)
    if prices.shape != profile.weights.shape:
        raise ValueError(f"need exactly {profile.weights.size} hourly prices")
    return float(prices @ profile.weights)


def scenario_daily_prices(fc: EnsembleForecast, profile: LoadProfile) -> np.ndarray:
    """Daily price of each scenario row, order preserved."""
    if fc.members.shape[1] != profile.weights.size:
        raise ValueError(f"forecast must cover {profile.weights.size} hours")
    return fc.members @ profile.weights


def load_profile_csv(path) -> LoadProfile:
    """Parse a profile CSV with header ``hour,weight`` and 24 rows."""
    weights = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip().lower() for c in header] != ["hour", "weight"]:
            raise ValueError(f"{path}: expected header 'hour,weight'")
        for row in reader:
            if not row:
                continue
            hour, weight = int(row[0]), float(row[1])
            if not 1 <= hour <= N_HOURS:
                raise ValueError(f"{path}: hour {hour} outside 1..{N_HOURS}")
            if hour in weights:
                raise ValueError(f"{path}: duplicate hour {hour}")
            weights[hour] = weight
    if len(weights) != N_HOURS:
        raise ValueError(f"{path}: expected {N_HOURS} hours, got {len(weights)}")
    return LoadProfile(np.array([weights[h] for h in range(1, N_HOURS + 1)]))


def write_profile_csv(profile: LoadProfile, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["hour", "weight"])
        for h in range(N_HOURS):
            writer.writerow([h + 1, repr(float(profile.weights[h]))])
