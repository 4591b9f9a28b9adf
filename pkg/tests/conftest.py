import pytest

from ordex.model import SubsetMseCache
from ordex.ordering import run_sampled
from ordex.geometry import score_matrix
from ordex.synthgen import gen_independent, gen_redundancy, gen_synergy, gen_triple

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


class Run:
    def __init__(self, dataset, n_trials=200, seed=42):
        self.dataset = dataset
        self.cache = SubsetMseCache()
        self.trials = run_sampled(dataset, n_trials=n_trials, seed=seed, cache=self.cache)
        self.scores = score_matrix(self.trials)


@pytest.fixture(scope="session")
def synergy_run():
    return Run(gen_synergy("asymmetric_cubic", 2000, 3, 0.05, 42))


@pytest.fixture(scope="session")
def redundancy_run():
    return Run(gen_redundancy("cubic", 2000, 3, 0.05, 42))


@pytest.fixture(scope="session")
def triple_run():
    return Run(gen_triple(2000, 2, 0.05, 42))


@pytest.fixture(scope="session")
def independent_run():
    return Run(gen_independent(2000, 5, 1.0, 42))
