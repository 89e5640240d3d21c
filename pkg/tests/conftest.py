import os
import time

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("ci", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=400, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("quick", max_examples=8, deadline=None)
settings.load_profile(os.environ.get("THERMOFORM_HYPOTHESIS", "ci"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = {}


class _Criterion:
    """Times one acceptance criterion and records its verdict line."""

    def __init__(self, store, number, title, limit):
        self.store, self.number, self.title, self.limit = store, number, title, limit
        self.details = []

    def note(self, text):
        self.details.append(text)

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.t0
        slow = elapsed >= self.limit
        ok = exc_type is None and not slow
        why = "; ".join(self.details)
        if exc_type is not None:
            why = f"{why}; {exc_type.__name__}: {str(exc).splitlines()[0] if str(exc) else ''}".strip("; ")
        if slow:
            why = f"{why}; runtime over {self.limit:g} s".strip("; ")
        self.store[self.number] = (f"criterion {self.number:>2} {'PASS' if ok else 'FAIL'}  "
                                   f"{self.title}  [{elapsed:.2f}s < {self.limit:g}s]  {why}")
        if exc_type is None and slow:
            pytest.fail(f"criterion {self.number}: {elapsed:.1f} s exceeds {self.limit:g} s")
        return False


@pytest.fixture
def criterion(request):
    store = request.config.stash[_ACCEPTANCE]

    def make(number, title, limit):
        return _Criterion(store, number, title, limit)

    return make


def pytest_terminal_summary(terminalreporter, config):
    store = config.stash.get(_ACCEPTANCE, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(store):
        terminalreporter.write_line(store[k])
