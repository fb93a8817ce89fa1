import numpy as np
import pytest

from shiftmetrics import Alphabet, BINARY, MarkovMeasure

ALPHABETS = {2: BINARY, 3: Alphabet(["a", "b", "c"]), 4: Alphabet(["0", "1", "2", "3"])}


def random_kernel(rng, k, order=1, floor=0.05):
    K = rng.uniform(floor, 1.0, (k**order, k))
    return K / K.sum(axis=1, keepdims=True)


def random_chain(rng, k=2, order=1, floor=0.05):
    return MarkovMeasure.stationary_from_kernel(ALPHABETS[k], random_kernel(rng, k, order, floor))


def perturbed_chain(rng, m, scale=0.2):
    K = m.kernel * np.exp(rng.normal(0.0, scale, m.kernel.shape))
    K /= K.sum(axis=1, keepdims=True)
    return MarkovMeasure.stationary_from_kernel(m.alphabet, K)


def random_column_stochastic(rng, n, floor=0.0):
    M = rng.uniform(floor, 1.0, (n, n))
    return M / M.sum(axis=0, keepdims=True)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def ber_half():
    return MarkovMeasure.iid(BINARY, [0.5, 0.5])


@pytest.fixture
def ber_third():
    # P(1) = 1/3
    return MarkovMeasure.iid(BINARY, [2 / 3, 1 / 3])


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
