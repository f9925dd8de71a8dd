import numpy as np
import pytest

from robin.datasets import football_path
from robin.graph import Graph, parse_gml, simplify


FOOTBALL_SHAPE = (10,) * 7 + (9,) * 5  # 115 nodes in 12 groups


def planted_partition(sizes=FOOTBALL_SHAPE, m=613, p_out=0.045, seed=1):
    """Football-sized surrogate: dense groups, sparse links between them."""
    rng = np.random.default_rng(seed)
    truth = np.repeat(np.arange(len(sizes)), sizes)
    n = truth.size
    edges = set()
    while len(edges) < m:
        u, v = (int(x) for x in rng.integers(n, size=2))
        if u == v:
            continue
        if truth[u] == truth[v] or rng.random() < p_out:
            edges.add((min(u, v), max(u, v)))
    return simplify(n, edges, ground_truth=truth.tolist())


def clique_union(sizes):
    pairs, offset, truth = [], 0, []
    for c, k in enumerate(sizes):
        pairs += [(offset + i, offset + j) for i in range(k) for j in range(i + 1, k)]
        truth += [c] * k
        offset += k
    return simplify(offset, pairs, ground_truth=truth)


def random_graph(rng, n, p):
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return simplify(n, pairs)


@pytest.fixture(scope="session")
def surrogate():
    return planted_partition()


@pytest.fixture(scope="session")
def football() -> Graph:
    # No skip: a missing dataset is a real, reported failure.
    return parse_gml(football_path().read_bytes())


@pytest.fixture
def barbell():
    return simplify(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)])


def smooth_curves(rng, n, levels):
    """Random increasing curves on ``levels``: amplitude, low-frequency wiggle and noise."""
    levels = np.asarray(levels)
    amp = rng.uniform(0.4, 0.6, size=(n, 1))
    wiggle = 0.03 * rng.standard_normal((n, 1)) * np.sin(2 * np.pi * levels / levels[-1])
    return (amp * (1 - np.exp(-levels / 0.2)) + wiggle
            + 0.02 * rng.standard_normal((n, levels.size)))


# Acceptance reporting: one PASS/FAIL line per test marked ``criterion``.
_CRITERIA: dict[str, list] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    key, title = mark.args
    entry = _CRITERIA.setdefault(key, [title, None, ""])
    if rep.failed:
        crash = getattr(rep.longrepr, "reprcrash", None)
        message = crash.message if crash is not None else str(rep.longrepr)
        entry[1], entry[2] = "FAIL", message.strip().splitlines()[0][:160]
    elif rep.when == "call" and entry[1] is None:
        entry[1] = "PASS"
    details = [p[1] for p in item.user_properties if p[0] == "detail"]
    if details and entry[1] == "PASS":
        entry[2] = details[-1]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for key in sorted(_CRITERIA, key=lambda k: (int("".join(c for c in k if c.isdigit())), k)):
        title, status, detail = _CRITERIA[key]
        line = f"criterion {key:<3} {status or 'NOT RUN':<5} {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
