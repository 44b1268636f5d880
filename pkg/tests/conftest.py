import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from truncgraph.pairlik import ZeroInflatedMatrix
from truncgraph.truncdist import TruncationScheme

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def simulate_pair(sigma, n, seed, bounds=(-0.5, 2.0, -0.5, 2.0)):
    """Truncated sample of a standard couple with correlation ``sigma``."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, 2))
    x = np.column_stack([z[:, 0], sigma * z[:, 0] + np.sqrt(1 - sigma ** 2) * z[:, 1]])
    lower = np.array(bounds[0::2])
    upper = np.array(bounds[1::2])
    y = np.where((x >= lower) & (x <= upper), x, 0.0)
    return ZeroInflatedMatrix(y, TruncationScheme(lower, upper))


@pytest.fixture
def pair_sampler():
    return simulate_pair


ACCEPTANCE_LINES = []


@pytest.fixture
def report_criterion():
    """Record one pass/fail line per acceptance criterion and return the verdict."""
    def record(number, passed, detail):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
