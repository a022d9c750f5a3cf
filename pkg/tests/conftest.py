import itertools
import random
from fractions import Fraction

import pytest

from exclusion.graph import Graph

# multiples of 1/4 between 1/4 and 4
RATE_CHOICES = [Fraction(i, 4) for i in range(1, 17)]


def brute_weight(g, subset):
    w = Fraction(1)
    for z in subset:
        w *= Fraction(g.degrees[z]) / Fraction(g.rates[z])
    return w


def brute_sigma(g, k, include=(), exclude=()):
    """Class weight by direct enumeration over itertools.combinations."""
    total = Fraction(0)
    for c in itertools.combinations(range(g.num_vertices), k):
        s = set(c)
        if set(include) <= s and not (set(exclude) & s):
            total += brute_weight(g, c)
    return total


def brute_profile(g, k):
    full = brute_sigma(g, k)
    return tuple(brute_sigma(g, k, include=(x,)) / full for x in range(g.num_vertices))


def random_connected_graph(rng: random.Random, n: int, extra_edge_prob: float = 0.3) -> Graph:
    """Random spanning tree plus random extra edges, random rates from RATE_CHOICES."""
    order = list(range(n))
    rng.shuffle(order)
    edges = set()
    for i in range(1, n):
        u, v = order[i], order[rng.randrange(i)]
        edges.add((min(u, v), max(u, v)))
    for u in range(n):
        for v in range(u + 1, n):
            if (u, v) not in edges and rng.random() < extra_edge_prob:
                edges.add((u, v))
    rates = [rng.choice(RATE_CHOICES) for _ in range(n)]
    return Graph(n, tuple(sorted(edges)), tuple(rates))


def random_graph_corpus(seed: int = 20240, count: int = 50, max_n: int = 8) -> list[Graph]:
    rng = random.Random(seed)
    return [random_connected_graph(rng, rng.randint(2, max_n)) for _ in range(count)]


@pytest.fixture(scope="session")
def corpus():
    return random_graph_corpus()
