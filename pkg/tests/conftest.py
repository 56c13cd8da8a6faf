import numpy as np
import pytest

from bcbounds.probcore import BroadcastChannel, JointPmf

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_channel(rng, nx, ny1=None, ny2=None):
    ny1 = ny1 or int(rng.integers(2, 4))
    ny2 = ny2 or int(rng.integers(2, 4))
    return BroadcastChannel.from_rows(rng.dirichlet(np.ones(ny1), nx), rng.dirichlet(np.ones(ny2), nx))


def random_joint(rng, labels, shape, sparsity=0.0):
    t = rng.dirichlet(np.ones(int(np.prod(shape)))).reshape(shape)
    if sparsity:
        t = np.where(rng.random(shape) < sparsity, 0.0, t)
        if t.sum() == 0:
            t.flat[0] = 1.0
        t = t / t.sum()
    return JointPmf(labels, t)
