import sys
import numpy as np
import pytest

from subsetqubo.model import new_instance


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_instance(rng, n_max=12, mag=1000, feasible_bias=0.5):
    """Small random instance; about half the time the target is a planted subset sum."""
    n = int(rng.integers(1, n_max + 1))
    vals = [int(v) for v in rng.integers(-mag, mag + 1, size=n)]
    if rng.random() < feasible_bias:
        k = int(rng.integers(1, n + 1))
        idx = rng.choice(n, size=k, replace=False)
        target = sum(vals[i] for i in idx)
    else:
        target = int(rng.integers(-mag * n, mag * n + 1))
    return new_instance(vals, target)


def all_masks(n):
    bits = (np.arange(1 << n)[:, None] >> np.arange(n)[None, :]) & 1
    return bits.astype(bool)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
