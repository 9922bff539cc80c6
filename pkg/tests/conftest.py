import sys

import numpy as np
import pytest

from opconvex.measure import INF
from opconvex.ocfun import combination, linear

XGRID = np.geomspace(1e-3, 1e3, 257)


def random_member(rng, max_atoms=4, with_inf=True):
    """Random atom-sparse cone member: a few extreme elements plus a linear part."""
    terms = []
    for _ in range(int(rng.integers(1, max_atoms + 1))):
        alpha = float(rng.choice([0.0, rng.uniform(0.0, 5.0), INF]))
        lam = float(10 ** rng.uniform(-2, 2))
        terms.append((float(rng.uniform(0.1, 2.0)), alpha, lam))
    if with_inf and rng.random() < 0.5:
        terms.append((float(rng.uniform(0.1, 1.0)), float(rng.uniform(0.0, 3.0)), INF))
    return combination(terms) + linear(float(rng.uniform(0, 1)), float(rng.uniform(0, 1)))


def random_members(count, seed):
    rng = np.random.default_rng(seed)
    return [random_member(rng) for _ in range(count)]


@pytest.fixture
def members():
    return random_members(20, 2024)


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    results = getattr(acceptance, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
