import functools

import pytest

from zerotemp.cli import load_spec
from zerotemp.renorm import zero_temperature_limit


@functools.lru_cache(maxsize=None)
def example(name):
    """(graph, phi, psi, limit) for a bundled example."""
    g, phi, psi = load_spec(name).system()
    return g, phi, psi, zero_temperature_limit(g, phi, psi)


@pytest.fixture(params=["example1", "example2", "example3"])
def bundled(request):
    return (request.param, *example(request.param))


def pytest_terminal_summary(terminalreporter):
    import test_acceptance
    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
