import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from snnpde.network import MlpConfig, Params, init_xavier

settings.register_profile("default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_params(rng, d, hidden, M, scale=0.8):
    """Small network with random weights AND biases (Xavier leaves biases at zero)."""
    params = Params.zeros(MlpConfig(d=d, hidden_widths=hidden, M=M).layer_shapes())
    for w, b in zip(params.weights, params.biases):
        w[...] = rng.normal(scale=scale, size=w.shape)
        b[...] = rng.normal(scale=0.5, size=b.shape)
    return params


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def small_params(rng):
    return random_params(rng, 2, (5, 4), 3)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
