import itertools

import pytest
from hypothesis import settings

from graphbandit.graph import FeedbackGraph, build_graph

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def brute_force_independent_sets(g: FeedbackGraph):
    """Every independent set of ``g`` (as a tuple), by enumerating all subsets."""
    out = []
    for r in range(g.k + 1):
        for combo in itertools.combinations(range(g.k), r):
            if all(not g.adjacent(a, b) for a, b in itertools.combinations(combo, 2)):
                out.append(combo)
    return out


@pytest.fixture
def path3():
    return build_graph(3, [(0, 1), (1, 2)])
