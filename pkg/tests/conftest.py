import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def counts(index, n):
    return np.bincount(np.asarray(index).reshape(-1), minlength=n)


@pytest.fixture
def three_class():
    from gumbelkit import CategoricalParams

    return CategoricalParams.from_probs([0.5, 0.3, 0.2])


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
