import numpy as np
import pytest

from argda.data_io import generate_synthetic
from argda.domain import DomainSplit

# Seeded 3-class shift task used by the end-to-end checks.  The shift is
# spread over 60 dimensions so that a 2-D projection can discard it.
SHIFT_TASK = dict(kind="gaussian_shift", n_classes=3, per_class=40, offset=0.2,
                  rotation=20.0, dim=60, separation=2.5, noise=1.0, seed=42)
SHIFT_CONFIG = dict(k=2, n_neighbors=10)


@pytest.fixture(scope="session")
def shift_task():
    return generate_synthetic(**SHIFT_TASK)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_split(rng, n_classes=3, max_per=4, pseudo=True, allow_empty_target=True):
    """Random split where every source class has at least one sample."""
    ns = [int(rng.integers(1, max_per + 1)) for _ in range(n_classes)]
    src = np.repeat(np.arange(1, n_classes + 1), ns)
    rng.shuffle(src)
    n_t = int(rng.integers(1, n_classes * max_per + 1))
    tgt = None
    if pseudo:
        tgt = rng.integers(1, n_classes + 1, size=n_t)
        if not allow_empty_target:
            tgt[:n_classes] = np.arange(1, n_classes + 1)[: min(n_classes, n_t)]
    return DomainSplit(len(src), n_t, n_classes, src, tgt)


# (number, title, passed, detail) for each acceptance criterion that ran
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, ok, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {num:>2}. {title}: {detail}")
