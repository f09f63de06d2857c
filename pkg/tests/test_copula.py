import itertools

import numpy as np
import pytest

from _simulate import equicorrelated_normals, rng_for
from schaake.backtest import TOY_RANK_MATRIX
from schaake.copula import (
    CopulaError,
    empirical_copula,
    empirical_rank_matrix,
    fit_gaussian_copula,
    is_rank_matrix,
    read_rank_matrix_csv,
    sample_gaussian_rank_matrix,
    write_rank_matrix_csv,
)
from schaake.margins import norm_cdf


def test_single_column_ranks():
    pits = np.array([[0.9, 0.1], [0.1, 0.2], [0.5, 0.3]])
    ranks = empirical_rank_matrix(pits)
    assert list(ranks[:, 0]) == [3, 1, 2]


def test_reproduces_toy_rank_matrix():
    m = TOY_RANK_MATRIX.shape[0]
    pits = TOY_RANK_MATRIX / (m + 1)  # PIT history consistent with the reference ranks
    assert np.array_equal(empirical_rank_matrix(pits), TOY_RANK_MATRIX)


def test_invariance_under_monotone_transform():
    pits = rng_for(1).uniform(0.01, 0.99, size=(50, 4))
    transformed = pits.copy()
    transformed[:, 2] = transformed[:, 2] ** 3  # strictly increasing on (0,1)
    assert np.array_equal(empirical_rank_matrix(pits), empirical_rank_matrix(transformed))


def test_rank_columns_are_permutations():
    pits = rng_for(2).uniform(0.001, 0.999, size=(90, 24))
    assert is_rank_matrix(empirical_rank_matrix(pits))


def test_ties_break_to_earlier_day():
    pits = np.array([[0.5], [0.5], [0.2]])
    assert list(empirical_rank_matrix(pits)[:, 0]) == [2, 3, 1]


def test_empirical_copula_matches_brute_force():
    rng = rng_for(3)
    pits = rng.uniform(0.01, 0.99, size=(5, 3))
    ranks = empirical_rank_matrix(pits)
    m = 5
    for idx in itertools.product(range(m + 1), repeat=3):
        # brute force: count training rows dominated at every coordinate
        count = sum(all(ranks[t, d] <= idx[d] for d in range(3)) for t in range(m))
        assert empirical_copula(ranks, np.array(idx)) == pytest.approx(count / m)


def test_gaussian_fit_under_independence():
    pits = rng_for(4).uniform(1e-6, 1 - 1e-6, size=(2000, 24))
    sigma = fit_gaussian_copula(pits)
    off = sigma[~np.eye(24, dtype=bool)]
    assert np.max(np.abs(off)) < 0.08


def test_gaussian_fit_comonotone_pair():
    u = rng_for(5).uniform(0.01, 0.99, 100)
    sigma = fit_gaussian_copula(np.column_stack([u, u]))
    # the positive-definiteness repair pulls the singular case just inside 1
    assert sigma[0, 1] == pytest.approx(1.0, abs=1e-6)


def test_gaussian_fit_recovers_equicorrelation():
    z = equicorrelated_normals(5000, rho=0.7, seed=6)
    sigma = fit_gaussian_copula(norm_cdf(z))
    off = sigma[~np.eye(24, dtype=bool)]
    assert np.max(np.abs(off - 0.7)) < 0.05


def test_gaussian_fit_output_is_correlation_matrix():
    pits = rng_for(7).uniform(0.01, 0.99, size=(30, 24))
    sigma = fit_gaussian_copula(pits)
    assert np.allclose(sigma, sigma.T)
    assert np.allclose(np.diag(sigma), 1.0)
    assert np.linalg.eigvalsh(sigma).min() > 0


def test_gaussian_fit_rejects_degenerate_column():
    pits = rng_for(8).uniform(0.01, 0.99, size=(20, 3))
    pits[:, 1] = 0.4
    with pytest.raises(CopulaError, match="degenerate"):
        fit_gaussian_copula(pits)


def test_sampling_identity_correlation():
    ranks = sample_gaussian_rank_matrix(np.eye(24), 2000, seed=11)
    assert is_rank_matrix(ranks)
    corr = np.corrcoef(ranks, rowvar=False)
    off = corr[~np.eye(24, dtype=bool)]
    assert np.max(np.abs(off)) < 0.1


def test_sampling_comonotone_degenerate():
    sigma = np.ones((24, 24))
    ranks = sample_gaussian_rank_matrix(sigma, 50, seed=12)
    assert np.all(ranks == ranks[:, [0]])


def test_sampling_is_deterministic():
    sigma = fit_gaussian_copula(norm_cdf(equicorrelated_normals(200, 0.5, seed=13)))
    a = sample_gaussian_rank_matrix(sigma, 90, seed=99)
    b = sample_gaussian_rank_matrix(sigma, 90, seed=99)
    assert np.array_equal(a, b)
    c = sample_gaussian_rank_matrix(sigma, 90, seed=100)
    assert not np.array_equal(a, c)


def test_pit_history_validation():
    with pytest.raises(CopulaError):
        empirical_rank_matrix(np.array([[0.5, 0.5]]))  # m < 2
    with pytest.raises(CopulaError):
        empirical_rank_matrix(np.array([[0.5, 1.0], [0.2, 0.3]]))  # boundary level


def test_rank_matrix_csv_roundtrip(tmp_path):
    ranks = empirical_rank_matrix(rng_for(14).uniform(0.01, 0.99, size=(7, 4)))
    path = tmp_path / "ranks.csv"
    write_rank_matrix_csv(ranks, path)
    assert np.array_equal(read_rank_matrix_csv(path), ranks)


def test_rank_matrix_csv_rejects_bad_columns(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("h1,h2\n1,1\n1,2\n")
    with pytest.raises(CopulaError, match="permutations"):
        read_rank_matrix_csv(path)
