import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import codes, normalized_panel
from fxmst.ingest import PanelError
from fxmst.returns import ReturnPanel
from fxmst.spectrum import (
    CorrelationMatrix,
    correlation_matrix,
    eigen,
    jacobi_eigh,
    rmt_bound,
    spectrum_to_csv,
    zero_modes,
)


def cm(entries, n_obs=100):
    entries = np.asarray(entries, dtype=float)
    return CorrelationMatrix(None, tuple(codes(len(entries))), entries, n_obs)


def test_identical_rows_fully_correlated():
    c = correlation_matrix(normalized_panel([[1.0, 2.0, 4.0], [1.0, 2.0, 4.0]]))
    np.testing.assert_allclose(c.entries, [[1, 1], [1, 1]], atol=1e-15)


def test_orthogonal_rows():
    c = correlation_matrix(normalized_panel([[1, -1, 1, -1], [1, 1, -1, -1]]))
    assert c.entries[0, 1] == pytest.approx(0.0, abs=1e-15)


def test_matches_double_loop_oracle(rng):
    g = rng.standard_normal((5, 100))
    c = correlation_matrix(normalized_panel(g)).entries
    oracle = np.empty((5, 5))
    for a in range(5):
        for b in range(5):
            xa, xb = g[a] - g[a].mean(), g[b] - g[b].mean()
            cov = sum(xa[t] * xb[t] for t in range(100)) / 100
            oracle[a, b] = cov / np.sqrt(np.mean(xa**2) * np.mean(xb**2))
    np.testing.assert_allclose(c, oracle, rtol=0, atol=1e-12)


def test_unnormalized_input_rejected():
    with pytest.raises(PanelError, match="normalized"):
        correlation_matrix(ReturnPanel(None, ("EUR", "JPY"), [[1.0, 2.0], [3.0, 5.0]]))


def test_eigen_identity():
    s = eigen(cm(np.eye(3)))
    np.testing.assert_allclose(s.eigenvalues, [1, 1, 1], atol=1e-15)
    assert s.zero_mode_count == 0


def test_eigen_rank_one():
    s = eigen(cm([[1, 1], [1, 1]]))
    np.testing.assert_allclose(s.eigenvalues, [2, 0], atol=1e-15)
    assert s.lambda_max == pytest.approx(2.0)
    assert s.lambda_second == pytest.approx(0.0, abs=1e-15)
    assert s.zero_mode_count == 1
    assert zero_modes(s) == 1


def test_eigen_random_six(rng):
    c = correlation_matrix(normalized_panel(rng.standard_normal((6, 40))))
    s = eigen(c)
    assert s.eigenvalues.sum() == pytest.approx(6.0, abs=1e-8)
    resid = np.linalg.norm(c.entries @ s.eigenvectors - s.eigenvectors * s.eigenvalues, axis=0)
    assert resid.max() <= 1e-10 * 6
    assert np.all(np.diff(s.eigenvalues) <= 0)


@pytest.mark.parametrize("n", [1, 2, 3, 7, 16, 33, 60])
def test_jacobi_agrees_with_lapack(rng, n):
    # independent oracle: LAPACK symmetric eigensolver
    a = rng.standard_normal((n, n))
    a = a + a.T
    values, vectors = jacobi_eigh(a)
    np.testing.assert_allclose(values, np.linalg.eigvalsh(a), rtol=0, atol=1e-11 * max(1, np.abs(a).max()))
    np.testing.assert_allclose(vectors.T @ vectors, np.eye(n), atol=1e-12)


def test_jacobi_is_deterministic(rng):
    a = np.corrcoef(rng.standard_normal((20, 50)))
    v1, w1 = jacobi_eigh(a)
    v2, w2 = jacobi_eigh(a.copy())
    np.testing.assert_array_equal(v1, v2)
    np.testing.assert_array_equal(w1, w2)


def test_eigen_rejects_asymmetric():
    with pytest.raises(PanelError, match="symmetric"):
        eigen(cm([[1.0, 0.5], [0.4, 1.0]]))


def test_lapack_method_agrees(rng):
    c = correlation_matrix(normalized_panel(rng.standard_normal((12, 80))))
    np.testing.assert_allclose(eigen(c).eigenvalues, eigen(c, method="lapack").eigenvalues, atol=1e-12)


def test_rmt_bound_reference_value():
    assert rmt_bound(1657, 59) == pytest.approx(1.413, abs=1e-3)


def test_rmt_bound_square():
    assert rmt_bound(100, 100) == 4.0


def test_rmt_bound_long_series_limit():
    assert rmt_bound(10**9, 1) == pytest.approx(1 + 1e-9 + 2 / np.sqrt(1e9), rel=1e-12)
    assert rmt_bound(10**9, 1) == pytest.approx(1.0000632, abs=1e-7)


def test_zero_modes_from_duplicated_series(rng):
    g = rng.standard_normal((5, 200))
    g[4] = g[1]
    s = eigen(correlation_matrix(normalized_panel(g)))
    assert s.zero_mode_count >= 1


def test_spectrum_q_and_bound(rng):
    s = eigen(correlation_matrix(normalized_panel(rng.standard_normal((4, 100)))))
    assert s.Q == 25.0
    assert s.lambda_rm == rmt_bound(100, 4)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 15), st.integers(3, 60), st.integers(0, 2**32 - 1))
def test_correlation_invariants(n, t, seed):
    g = np.random.default_rng(seed).standard_normal((n, t))
    c = correlation_matrix(normalized_panel(g))
    e = c.entries
    assert np.max(np.abs(e - e.T)) <= 1e-12
    np.testing.assert_allclose(np.diag(e), 1.0, atol=1e-10)
    assert np.trace(e) == pytest.approx(n, abs=1e-8)
    assert np.all(np.abs(e) <= 1 + 1e-10)
    s = eigen(c)
    assert s.eigenvalues.min() >= -1e-8
    assert s.eigenvalues.sum() == pytest.approx(n, abs=1e-6)


def test_lambda_max_grows_with_factor_loading():
    rng = np.random.default_rng(5)
    n, t = 20, 500
    f = rng.standard_normal(t)
    e = rng.standard_normal((n, t))
    lams = []
    for rho in np.arange(0.1, 0.91, 0.1):
        g = rho * f + np.sqrt(1 - rho**2) * e
        lams.append(eigen(correlation_matrix(normalized_panel(g))).lambda_max)
    assert np.all(np.diff(lams) > 0)


def test_eigenvalues_invariant_under_row_permutation(rng):
    g = rng.standard_normal((10, 60))
    perm = rng.permutation(10)
    a = eigen(correlation_matrix(normalized_panel(g))).eigenvalues
    b = eigen(correlation_matrix(normalized_panel(g[perm]))).eigenvalues
    np.testing.assert_allclose(a, b, atol=1e-8)


def test_spectrum_csv():
    s = eigen(cm([[1, 1], [1, 1]], n_obs=10))
    lines = spectrum_to_csv("USD", s).decode().splitlines()
    assert lines[0] == "base,rank,eigenvalue"
    assert lines[1] == "USD,1,2"
    assert lines[3] == "base,lambda_max,lambda_second,zero_mode_count,lambda_rm"
    assert lines[4].startswith("USD,2,")
    assert lines[4].split(",")[3] == "1"
