"""Numbered acceptance criteria.

Each test carries ``@pytest.mark.acceptance(id, title)``; conftest prints one
PASS/FAIL line per criterion at the end of the run.
"""

import math
import re
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import make_transition, tabular_mrp
from ndpcast.cli import EXIT_OK, EXIT_RUNTIME, cmd_run, main
from ndpcast.config import load_config
from ndpcast.experiment import run_experiment
from ndpcast.features import FeatureSpec, encode
from ndpcast.forecast_eval import ForecastRule, evaluate
from ndpcast.ols_baseline import RankDeficiencyError, design_matrix, fit_ols
from ndpcast.panel_data import (
    CountrySeries,
    DegenerateSeriesError,
    PanelDataset,
    Quarter,
    inverse_regularize,
    regularize,
    write_panel_csv,
)
from ndpcast.synthetic import SyntheticSpec, gdp_coefficient_map, generate_synthetic_panel
from ndpcast.td_learning import TrainConfig, solve_finite_mrp, td_step_linear, td_step_network, train
from ndpcast.value_approx import LinearModel, NetworkModel, network_eval, network_gradients

acceptance = pytest.mark.acceptance
NON_FINITE = re.compile(r"\b[+-]?(nan|inf|infinity)\b", re.IGNORECASE)


def write(path: Path, text: str) -> Path:
    path.write_text(text)
    return path


def _summary_rows(path: Path):
    lines = path.read_text().splitlines()
    assert lines[0] == "model,mae,rmse"
    return [(m, float(a), float(b)) for m, a, b in (line.split(",") for line in lines[1:])]


@acceptance("AC-1", "user panel in CSV format runs end to end to a three-row summary")
def test_ac1_csv_panel_end_to_end(tmp_path):
    panel = generate_synthetic_panel(SyntheticSpec(countries=5, quarters=48, seed=11))
    write_panel_csv(panel, tmp_path / "panel.csv")
    cfg = write(
        tmp_path / "run.conf",
        "data = panel.csv\ntest_country = PT\nols_cutoff = 2008Q4\nepochs = 5\noutput_dir = out\n",
    )
    assert main(["run", "--config", str(cfg)]) == EXIT_OK
    rows = _summary_rows(tmp_path / "out" / "summary.csv")
    assert [m for m, _, _ in rows] == ["ols", "td_network", "td_linear"]
    for _, mae, rmse in rows:
        assert math.isfinite(mae) and math.isfinite(rmse)
        assert mae <= rmse


@acceptance("AC-2", "tabular TD(0) converges to the exact MRP solution")
def test_ac2_tabular_convergence():
    start = time.perf_counter()
    worst = []
    for seed in (0, 1, 2):
        P, g, trs = tabular_mrp(seed)
        exact = solve_finite_mrp(P, g, 0.9)
        cfg = TrainConfig(architecture="linear", feature_kind="raw", alpha=0.9, gamma0=0.5,
                          decay_tau=2000.0, epochs=200, seed=seed)
        model, _ = train(trs, cfg)
        worst.append(float(np.max(np.abs(model.weights - exact))))
    elapsed = time.perf_counter() - start
    print(f"max-norm errors {worst}, {elapsed:.2f}s")
    assert max(worst) < 1e-2
    assert elapsed < 5.0


def _random_network(rng, activation):
    s = int(rng.integers(1, 9))
    raw_dim = int(rng.integers(1, 5))
    kind = rng.choice(["raw", "raw_with_bias", "tensor_degree2"])
    spec = FeatureSpec(str(kind), raw_dim)
    while True:
        W = rng.normal(0, 1, (s, spec.dim))
        r = rng.normal(0, 1, s)
        x = encode(rng.uniform(0, 1, raw_dim), spec)
        if activation != "relu" or np.all(np.abs(W @ x) > 1e-3):
            return NetworkModel(W, r, activation, spec), x


@acceptance("AC-3", "network gradients match central finite differences")
def test_ac3_gradient_check():
    rng = np.random.default_rng(2024)
    eps = 1e-5
    start = time.perf_counter()
    worst = 0.0
    for k in range(100):
        model, x = _random_network(rng, "relu" if k % 2 else "logistic")
        d_out, d_hid = network_gradients(model, x)
        W, r = model.hidden_weights.copy(), model.output_weights.copy()

        def score(W_, r_, m=model, x=x):
            return network_eval(NetworkModel(W_, r_, m.activation, m.features), x).score

        for idx in np.ndindex(r.shape):
            rp, rm = r.copy(), r.copy()
            rp[idx] += eps
            rm[idx] -= eps
            worst = max(worst, abs((score(W, rp) - score(W, rm)) / (2 * eps) - d_out[idx]))
        for idx in np.ndindex(W.shape):
            Wp, Wm = W.copy(), W.copy()
            Wp[idx] += eps
            Wm[idx] -= eps
            worst = max(worst, abs((score(Wp, r) - score(Wm, r)) / (2 * eps) - d_hid[idx]))
    elapsed = time.perf_counter() - start
    print(f"max abs deviation {worst:.3e}, {elapsed:.2f}s")
    assert worst < 1e-6
    assert elapsed < 10.0


@acceptance("AC-4", "hand-computed single TD steps match exactly")
def test_ac4_single_step_arithmetic():
    lin = LinearModel([1.0], FeatureSpec("raw", 1))
    new, delta = td_step_linear(lin, make_transition([1.0], [1.0], u=0.5), alpha=0.5, gamma=0.1)
    assert delta == 0.25
    assert new.weights.tolist() == [0.975]

    net = NetworkModel([[1.0]], [2.0], "relu", FeatureSpec("raw", 1))
    new, delta = td_step_network(net, make_transition([1.0], [0.0], u=0.0), alpha=0.9, gamma=0.1)
    assert delta == 2.0
    assert new.output_weights.tolist() == [1.8]
    assert new.hidden_weights.tolist() == [[0.6]]


@acceptance("AC-5", "OLS recovers noiseless generator coefficients; rank deficiency detected")
def test_ac5_ols_oracle():
    spec = SyntheticSpec(countries=3, quarters=48, seed=3, structure="linear", noise=0.0)
    raw = generate_synthetic_panel(spec)
    truth = gdp_coefficient_map(spec)
    res = run_experiment(raw, "PT", [], "2008Q4")
    ols = res.ols

    # coefficients on the regularized scale follow from the native ones by the affine maps
    reg = res.dataset.regularization
    y = reg[("PT", raw.target_name)]
    yr = y.max - y.min
    expected = [truth["intercept"] - y.min]
    for name in raw.indicators:
        p = reg[("PT", name)]
        expected[0] += truth[name] * p.min
        expected.append(truth[name] * (p.max - p.min) / yr)
    expected[0] /= yr
    np.testing.assert_allclose(ols.coefficients, expected, rtol=0, atol=1e-8)
    assert res.reports[0].mae < 1e-6

    # and directly in native units
    s = raw["PT"]
    native = fit_ols(design_matrix(s.states[:36]), s.target[:36], ("intercept",) + raw.indicators)
    np.testing.assert_allclose(native.coefficients, [truth[t] for t in native.terms], rtol=0, atol=1e-8)

    dup = design_matrix(np.column_stack([s.states, s.states[:, 2]]))
    with pytest.raises(RankDeficiencyError) as exc:
        fit_ols(dup, s.target, ("intercept",) + raw.indicators + ("copy",))
    assert exc.value.name == "copy"


@acceptance("AC-6", "protocol shape: 2470 training transitions and a 36-quarter test window")
def test_ac6_protocol_shape():
    ds = generate_synthetic_panel(SyntheticSpec(countries=27, quarters=96, seed=0))
    cfg = TrainConfig(architecture="linear", epochs=1)
    res = run_experiment(ds, "PT", [(cfg, ForecastRule())], "2014Q4")
    assert len(ds.countries) - 1 == 26
    assert res.n_transitions == 2470
    assert len(res.test_quarters) == 36
    assert res.test_quarters[0] == Quarter(2015, 1) and res.test_quarters[-1] == Quarter(2023, 4)
    assert res.trained[0].log.update_count == 2470


def _random_panel(rng, countries, indicators):
    series = {}
    names = tuple(f"x{k}" for k in range(indicators - 1))
    for c in range(countries):
        n = int(rng.integers(2, 60))
        scale = 10 ** rng.uniform(-2, 2)
        mat = rng.uniform(-5, 5, (n, indicators)) * scale + rng.uniform(-100, 100, indicators)
        q = tuple(Quarter(2000, 1).shift(k) for k in range(n))
        series[f"C{c:03d}"] = CountrySeries(f"C{c:03d}", q, mat[:, :-1].copy(), mat[:, -1].copy())
    return PanelDataset("y", names, series)


@acceptance("AC-7", "regularization: exact endpoints, round trip, degenerate series rejected")
def test_ac7_regularization_suite():
    rng = np.random.default_rng(7)
    raw = _random_panel(rng, countries=100, indicators=10)
    reg = regularize(raw)
    checked = 0
    for c in raw.countries:
        before = np.column_stack([raw[c].states, raw[c].target])
        after = np.column_stack([reg[c].states, reg[c].target])
        for k, name in enumerate(raw.indicators + ("y",)):
            x, v = before[:, k], after[:, k]
            assert np.all(v[x == x.min()] == 0.0) and np.all(v[x == x.max()] == 1.0)
            assert np.all((v >= 0.0) & (v <= 1.0))
            back = inverse_regularize(v, reg.regularization[(c, name)])
            assert np.max(np.abs(back - x)) <= 1e-12
            checked += 1
    assert checked == 1000

    for _ in range(1000):
        n = int(rng.integers(2, 30))
        mat = rng.uniform(0, 100, (n, 3))
        col = int(rng.integers(0, 3))
        mat[:, col] = rng.uniform(-100, 100)
        q = tuple(Quarter(2000, 1).shift(k) for k in range(n))
        ds = PanelDataset("y", ("a", "b"), {"PT": CountrySeries("PT", q, mat[:, :2].copy(), mat[:, 2].copy())})
        with pytest.raises(DegenerateSeriesError) as exc:
            regularize(ds)
        assert exc.value.indicator == ("a", "b", "y")[col]


@acceptance("AC-8", "two runs of the same config give byte-identical outputs")
def test_ac8_determinism(tmp_path):
    base = (
        "synth_countries = 5\nsynth_quarters = 32\nols_cutoff = 2005Q4\n"
        "epochs = 5\nhidden_width = 8\nseed = 3\n"
    )
    outs = []
    for k in range(2):
        cfg = load_config(write(tmp_path / f"run{k}.conf", base + f"output_dir = out{k}\n"))
        assert cmd_run(cfg) == EXIT_OK
        outs.append(tmp_path / f"out{k}")
    names = ["summary.csv", "model_td_network.txt", "model_td_linear.txt"]
    for name in names:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), name


@acceptance("AC-9", "metric identities on random error vectors")
def test_ac9_metric_identities():
    rng = np.random.default_rng(9)
    for _ in range(1000):
        n = int(rng.integers(1, 60))
        errors = rng.normal(0, rng.uniform(0.01, 2.0), n)
        actual = rng.uniform(0, 1, n)
        q = [Quarter(2015, 1).shift(k) for k in range(n)]
        r = evaluate(zip(q, actual + errors), zip(q, actual))
        assert r.rmse >= r.mae
        assert abs(r.cumulative_abs_error[-1] - r.mae * n) <= 1e-12


@acceptance("AC-10", "large step size stops with the divergence error and no non-finite files")
@pytest.mark.parametrize("arch", ["network", "linear"])
def test_ac10_divergence_guard(tmp_path, capsys, arch):
    out = tmp_path / "out"
    code = main([
        "run", "--synth-structure", "nonlinear", "--synth-countries", "8", "--synth-quarters", "48",
        "--ols-cutoff", "2008Q4", "--architectures", arch, "--gamma0", "50", "--epochs", "20",
        "--output-dir", str(out),
    ])  # fmt: skip
    assert code == EXIT_RUNTIME
    assert "diverged" in capsys.readouterr().err
    for path in out.iterdir():
        assert not NON_FINITE.search(path.read_text()), path.name
    assert not (out / "summary.csv").exists()
