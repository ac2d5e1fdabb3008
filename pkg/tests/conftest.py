import pytest

from lazysparse.data import generate_synthetic


@pytest.fixture(scope="session")
def small_dataset():
    dataset, _ = generate_synthetic(n=300, d=2000, p=10, weight_sparsity=0.1, rng_seed=7)
    return dataset


@pytest.fixture(scope="session")
def tiny_dataset():
    dataset, _ = generate_synthetic(n=40, d=50, p=5, weight_sparsity=0.3, rng_seed=3)
    return dataset


@pytest.fixture(scope="session")
def acceptance_dataset():
    """The n=2000, d=10000, p=20 synthetic set shared by several acceptance criteria."""
    dataset, _ = generate_synthetic(n=2000, d=10000, p=20, weight_sparsity=0.1, rng_seed=2024)
    return dataset


_ACCEPTANCE = pytest.StashKey[dict]()


class _Recorder:
    def __init__(self, store, key, title):
        self.store, self.key, self.title = store, key, title
        store[key] = (title, False, "did not complete")

    def __call__(self, ok, detail):
        self.store[self.key] = (self.title, bool(ok), detail)
        return ok


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion's outcome: ``criterion(ok, detail)``."""
    marker = request.node.get_closest_marker("criterion")
    number, title = marker.args
    store = request.config.stash.setdefault(_ACCEPTANCE, {})
    return _Recorder(store, number, title)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_ACCEPTANCE, None)
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(store):
        title, ok, detail = store[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] C{number} {title}: {detail}")
