"""Dependence learning: rank matrices from PIT history or a fitted Gaussian copula.

A rank matrix is an m x H integer matrix whose columns are permutations of
1..m; it is the discrete copula representation that drives the reordering of
univariate ensembles.  The nonparametric route ranks the PIT history
directly; the parametric route fits a Gaussian copula by rank correlation
and ranks a fresh sample from it.
"""
from __future__ import annotations

import csv

import numpy as np
from scipy import stats

from .margins import norm_ppf

_EIG_FLOOR = 1e-8


class CopulaError(ValueError):
    """Invalid PIT history, correlation matrix or rank matrix."""


def check_pit_history(pits: np.ndarray) -> np.ndarray:
    pits = np.asarray(pits, dtype=float)
    if pits.ndim != 2 or pits.shape[0] < 2:
        raise CopulaError("PIT history must be an m x H matrix with m >= 2")
    if not np.all((pits > 0.0) & (pits < 1.0)):
        raise CopulaError("PIT levels must lie strictly in (0, 1)")
    return pits


def is_rank_matrix(ranks: np.ndarray) -> bool:
    """True when every column is a permutation of 1..m."""
    ranks = np.asarray(ranks)
    if ranks.ndim != 2:
        return False
    m = ranks.shape[0]
    expected = np.arange(1, m + 1)
    return all(np.array_equal(np.sort(ranks[:, h]), expected)
               for h in range(ranks.shape[1]))


def _ordinal_ranks(column: np.ndarray) -> np.ndarray:
    # stable ordinal ranks: ties go to the earlier day
    order = np.argsort(column, kind="stable")
    ranks = np.empty(column.size, dtype=np.int64)
    ranks[order] = np.arange(1, column.size + 1)
    return ranks


def empirical_rank_matrix(pits: np.ndarray) -> np.ndarray:
    """Column-wise ranks of the PIT history (1 = smallest, stable ties)."""
    pits = check_pit_history(pits)
    return np.column_stack([_ordinal_ranks(pits[:, h]) for h in range(pits.shape[1])])


def empirical_copula(ranks: np.ndarray, indices) -> float:
    """Value of the empirical copula at the grid point (i_1/m, ..., i_H/m).

    ``indices`` holds the integer thresholds i_h in 0..m; the value is the
    fraction of training rows whose ranks are simultaneously below them.
    """
    ranks = np.asarray(ranks)
    indices = np.asarray(indices)
    if indices.shape != (ranks.shape[1],):
        raise CopulaError("need one threshold per column")
    return float(np.mean(np.all(ranks <= indices, axis=1)))


def fit_gaussian_copula(pits: np.ndarray) -> np.ndarray:
    """Correlation matrix of a Gaussian copula fitted by rank correlation.

    Pairwise Spearman correlations are mapped to Pearson via
    2*sin(pi*rho/6) and the result is repaired to a positive semi-definite
    correlation matrix by eigenvalue flooring.
    """
    pits = check_pit_history(pits)
    if np.any(np.ptp(pits, axis=0) == 0.0):
        raise CopulaError("degenerate PIT column (all values equal)")
    rho = stats.spearmanr(pits).statistic
    if pits.shape[1] == 2:
        rho = np.array([[1.0, rho], [rho, 1.0]])
    sigma = 2.0 * np.sin(np.pi * np.asarray(rho) / 6.0)
    np.fill_diagonal(sigma, 1.0)
    return _nearest_correlation(sigma)


def _nearest_correlation(sigma: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((sigma + sigma.T) / 2.0)
    if w.min() < _EIG_FLOOR:
        sigma = (v * np.maximum(w, _EIG_FLOOR)) @ v.T
        d = np.sqrt(np.diag(sigma))
        sigma = sigma / np.outer(d, d)
        sigma = (sigma + sigma.T) / 2.0
        np.fill_diagonal(sigma, 1.0)
    return sigma


def check_correlation_matrix(sigma: np.ndarray) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise CopulaError("correlation matrix must be square")
    if not np.allclose(sigma, sigma.T, atol=1e-10):
        raise CopulaError("correlation matrix must be symmetric")
    if not np.allclose(np.diag(sigma), 1.0, atol=1e-10):
        raise CopulaError("correlation matrix must have unit diagonal")
    if np.any(np.abs(sigma) > 1.0 + 1e-10):
        raise CopulaError("correlations must lie in [-1, 1]")
    return sigma


def sample_gaussian_rank_matrix(sigma: np.ndarray, m: int, seed: int) -> np.ndarray:
    """Rank matrix from m Gaussian-copula draws; deterministic given seed.

    Draws use a counter-based Philox generator and the inverse normal CDF so
    results are reproducible across platforms.  Cholesky factorization is
    attempted first, falling back to an eigendecomposition square root.
    """
    sigma = check_correlation_matrix(sigma)
    if m < 2:
        raise CopulaError("need m >= 2 samples")
    try:
        root = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(sigma)
        if w.min() < -1e-8:
            raise CopulaError("correlation matrix is not positive semi-definite")
        root = v * np.sqrt(np.maximum(w, 0.0))
    rng = np.random.Generator(np.random.Philox(seed))
    u = rng.random((m, sigma.shape[0]))
    u = np.clip(u, 1e-12, 1.0 - 1e-12)
    draws = norm_ppf(u) @ root.T
    return np.column_stack([_ordinal_ranks(draws[:, h]) for h in range(draws.shape[1])])


def write_rank_matrix_csv(ranks: np.ndarray, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"h{h + 1}" for h in range(ranks.shape[1])])
        writer.writerows(ranks.tolist())


def read_rank_matrix_csv(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise CopulaError(f"{path}: empty rank matrix file")
    try:
        ranks = np.array([[int(x) for x in row] for row in rows[1:]], dtype=np.int64)
    except ValueError as exc:
        raise CopulaError(f"{path}: non-integer rank entry: {exc}") from None
    if not is_rank_matrix(ranks):
        raise CopulaError(f"{path}: columns are not permutations of 1..m")
    return ranks
