import os

import pytest
from hypothesis import HealthCheck, settings

import nbgraph

settings.register_profile(
    "default",
    deadline=None,
    max_examples=int(os.environ.get("NBGRAPH_HYPOTHESIS_EXAMPLES", "60")),
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")

HAVE_NATIVE = nbgraph.NativeLockFreeGraph is not None
BACKENDS = ["native", "python"]


def skip_without_native():
    if not HAVE_NATIVE:
        pytest.skip(f"compiled core unavailable: {nbgraph.NATIVE_ERROR}")


@pytest.fixture(params=BACKENDS)
def backend(request):
    if request.param == "native":
        skip_without_native()
    return request.param


@pytest.fixture
def eng(backend):
    return nbgraph.engines(backend)


@pytest.fixture
def make(eng):
    """Factory for a lock-free graph on the current backend."""
    return eng["lockfree"]


@pytest.fixture
def g(make):
    return make(8)


def build(graph, vertices=(), edges=()):
    for k in vertices:
        assert graph.add_vertex(k)
    for k, l in edges:
        assert graph.add_edge(k, l) is nbgraph.EdgeOutcome.EDGE_ADDED
    return graph


# acceptance results, one line per criterion, echoed at the end of the run
ACCEPTANCE: list[str] = []


def report(n, status, detail):
    line = f"ACCEPTANCE {n}: {status} - {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
