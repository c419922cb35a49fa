import numpy as np
import pytest

from ndpcast.ols_baseline import RankDeficiencyError, design_matrix, fit_ols, predict_ols


def test_exactly_determined_interpolates():
    rng = np.random.default_rng(0)
    X = design_matrix(rng.uniform(size=(4, 3)))
    y = rng.normal(size=4)
    m = fit_ols(X, y)
    assert np.max(np.abs(X @ m.coefficients - y)) < 1e-10


def test_noiseless_recovery():
    rng = np.random.default_rng(1)
    X = design_matrix(rng.uniform(size=(50, 4)))
    beta = np.array([0.3, -1.0, 2.0, 0.5, -0.25])
    m = fit_ols(X, X @ beta)
    np.testing.assert_allclose(m.coefficients, beta, rtol=0, atol=1e-10)
    assert m.in_sample_rmse < 1e-12


def test_intercept_only_is_mean():
    m = fit_ols(np.ones((3, 1)), [1.0, 2.0, 3.0])
    assert m.coefficients.tolist() == pytest.approx([2.0], abs=1e-14)


def test_residual_orthogonality():
    rng = np.random.default_rng(2)
    X = design_matrix(rng.uniform(size=(60, 5)))
    y = rng.normal(size=60)
    m = fit_ols(X, y)
    assert np.max(np.abs(X.T @ (y - X @ m.coefficients))) <= 1e-8 * np.linalg.norm(y)


def test_row_permutation_invariance():
    rng = np.random.default_rng(3)
    X = design_matrix(rng.uniform(size=(40, 3)))
    y = rng.normal(size=40)
    perm = rng.permutation(40)
    a = fit_ols(X, y).coefficients
    b = fit_ols(X[perm], y[perm]).coefficients
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)


def test_duplicated_column_named():
    rng = np.random.default_rng(4)
    S = rng.uniform(size=(30, 3))
    X = design_matrix(np.column_stack([S, S[:, 1]]))
    with pytest.raises(RankDeficiencyError) as exc:
        fit_ols(X, rng.normal(size=30), ["intercept", "a", "b", "c", "b_copy"])
    assert exc.value.column == 4 and exc.value.name == "b_copy"
    assert "b_copy" in str(exc.value)


def test_linear_combination_detected():
    rng = np.random.default_rng(5)
    S = rng.uniform(size=(30, 2))
    X = design_matrix(np.column_stack([S, 2 * S[:, 0] - S[:, 1] + 0.5]))
    with pytest.raises(RankDeficiencyError):
        fit_ols(X, rng.normal(size=30))


def test_too_few_rows():
    with pytest.raises(ValueError):
        fit_ols(np.ones((2, 3)), [1.0, 2.0])


def test_predict_examples():
    from ndpcast.ols_baseline import OlsModel

    zero = OlsModel(np.zeros(3), ("intercept", "a", "b"), 0.0, 1.0)
    assert predict_ols(zero, [0.4, 0.9]) == 0.0
    flat = OlsModel(np.array([0.5, 0.0, 0.0]), ("intercept", "a", "b"), 0.0, 1.0)
    assert predict_ols(flat, [0.1, 0.7]) == 0.5
    m = OlsModel(np.array([0.0, 1.0, -1.0]), ("intercept", "a", "b"), 0.0, 1.0)
    assert predict_ols(m, [0.7, 0.2]) == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(ValueError):
        predict_ols(m, [0.7])


def test_coefficients_csv(tmp_path):
    X = design_matrix(np.arange(10.0)[:, None])
    m = fit_ols(X, 1.0 + 2.0 * np.arange(10.0), ["intercept", "ip"])
    path = tmp_path / "ols.csv"
    m.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "term,estimate"
    assert [line.split(",")[0] for line in lines[1:]] == ["intercept", "ip"]
