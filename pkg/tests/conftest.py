import numpy as np
import pytest

from diffsample.cascade import Cascade, CascadeSet, build_diffusion_network
from diffsample.graph import from_edges
from diffsample.sampling import LocalView


def ring_with_chords(n=10):
    """Strongly connected digraph: a directed ring plus a few chords."""
    pairs = [(i, (i + 1) % n) for i in range(n)]
    pairs += [(i, (i + 3) % n) for i in range(0, n, 2)]
    return from_edges(n, pairs)


def undirected(n, pairs):
    both = list(pairs) + [(b, a) for a, b in pairs]
    return from_edges(n, both)


@pytest.fixture
def path3():
    return from_edges(3, [(0, 1), (1, 2)], labels=["A", "B", "C"])


@pytest.fixture
def path3_cascade(path3):
    # A infected at 0, B at 1, C at 2, along both arcs
    c = Cascade.from_dense([0.0, 1.0, 2.0], seed=0, g=path3, parents=[-1, 0, 1])
    cs = CascadeSet(3, [c])
    return cs, build_diffusion_network(path3, cs.cascades)


@pytest.fixture
def path3_view(path3, path3_cascade):
    return LocalView.from_cascades(path3, path3_cascade[0])


@pytest.fixture
def star10():
    return from_edges(11, [(0, i) for i in range(1, 11)])


@pytest.fixture
def triangle():
    return undirected(3, [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def cycle4():
    return undirected(4, [(0, 1), (1, 2), (2, 3), (3, 0)])


@pytest.fixture
def strong10():
    return ring_with_chords(10)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE_LINES = []


@pytest.fixture
def report(request):
    """Print a verdict line for an acceptance criterion straight to the terminal."""
    tr = request.config.pluginmanager.get_plugin("terminalreporter")

    def emit(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE_LINES.append(line)
        if tr is not None:
            tr.write_line("")
            tr.write_line(line)
        else:
            print(line)

    return emit


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
