import itertools

import pytest
from hypothesis import settings

from rigidgraph.digraph import DigraphBuilder
from rigidgraph.gadgets import GadgetGraph

settings.register_profile("repo", deadline=None)
settings.load_profile("repo")


def plain_graph(n, arrows, kind="graph"):
    b = DigraphBuilder()
    vs = [b.add("Plain", i) for i in range(n)]
    for a, c in arrows:
        b.arrow(vs[a], vs[c])
    return GadgetGraph(b.build(), {"U": tuple(vs)}, {"kind": kind})


def cycle(n):
    return plain_graph(n, [(i, (i + 1) % n) for i in range(n)], "cycle")


def complete(n):
    return plain_graph(n, [(i, j) for i in range(n) for j in range(n) if i != j], "complete")


def transitive_tournament(n):
    return plain_graph(n, list(itertools.combinations(range(n), 2)), "tournament")


@pytest.fixture
def three_cycle():
    return cycle(3)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    lines = [test_acceptance.RESULTS[k] for k in sorted(test_acceptance.RESULTS)]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
