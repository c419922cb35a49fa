import numpy as np
import pytest

from ndpcast.panel_data import Quarter, Transition, parse_panel_csv

_acceptance: dict[str, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(id, title): numbered acceptance criterion")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    crit = dict(report.user_properties).get("acceptance")
    if crit is None:
        return
    cid, title = crit
    prev = _acceptance.get(cid, (title, "PASS"))[1]
    status = "PASS" if report.outcome == "passed" and prev == "PASS" else "FAIL"
    _acceptance[cid] = (title, status)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_acceptance, key=lambda c: int(c.split("-")[1])):
        title, status = _acceptance[cid]
        terminalreporter.write_line(f"{cid:<6} {status}  {title}")


@pytest.fixture(autouse=True)
def _tag_acceptance(request):
    m = request.node.get_closest_marker("acceptance")
    if m is not None:
        request.node.user_properties.append(("acceptance", m.args))


def panel_csv(rows, header=True) -> bytes:
    lines = ["country,quarter,indicator,value"] if header else []
    lines += [",".join(str(c) for c in r) for r in rows]
    return ("\n".join(lines) + "\n").encode()


def long_rows(country, start, table):
    """``table`` maps indicator -> list of values for consecutive quarters from ``start``."""
    q0 = Quarter.parse(start)
    rows = []
    for ind, values in table.items():
        for t, v in enumerate(values):
            rows.append((country, str(q0.shift(t)), ind, v))
    return rows


@pytest.fixture
def small_panel():
    rows = long_rows("AT", "2000Q1", {"GDP": [1, 2], "ip": [10, 20]})
    rows += long_rows("PT", "2000Q1", {"GDP": [3, 5], "ip": [7, 9]})
    return parse_panel_csv(panel_csv(rows))


def make_transition(x_i, x_j, u=0.0, g=None, country="XX"):
    g = u * u if g is None else g
    return Transition(np.asarray(x_i, float), np.asarray(x_j, float), u, g, country, Quarter(2000, 1))


def tabular_mrp(seed, n=5, samples=100):
    """Seeded MRP whose transition probabilities are multiples of 1/samples,
    plus the transition list that realizes those probabilities exactly."""
    rng = np.random.default_rng(seed)
    counts = np.vstack([rng.multinomial(samples, rng.dirichlet(np.ones(n))) for _ in range(n)])
    P = counts / samples
    g = rng.uniform(0, 1, n)
    eye = np.eye(n)
    trs = [
        make_transition(eye[i], eye[j], u=float(np.sqrt(g[i])), g=float(g[i]))
        for i in range(n)
        for j in range(n)
        for _ in range(counts[i, j])
    ]
    return P, g, trs
