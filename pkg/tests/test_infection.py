import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import ball, union_find_components
from pdpsearch.graph import Graph, gnp_random_graph, random_geometric_graph
from pdpsearch.infection import InfectionConfig, infect


def star(leaves):
    return Graph(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def test_no_spread_no_immunity():
    g = gnp_random_graph(30, 0.2, seed=1)
    assert infect(g, InfectionConfig(4, 0.0, 0.0, 5)) == {4}


@pytest.mark.parametrize("rounds", [1, 2, 3, 5])
def test_certain_spread_is_a_ball(rounds):
    g = random_geometric_graph(200, 0.12, seed=2)
    assert infect(g, InfectionConfig(0, 1.0, 0.0, rounds)) == ball(g, 0, rounds)


def test_full_immunity_keeps_only_protected_seed():
    g = star(10)
    assert infect(g, InfectionConfig(0, 1.0, 1.0, 1)) == {0}
    assert infect(g, InfectionConfig(0, 1.0, 1.0, 1, protect_seed=False)) == set()


def independent_star_mean(leaves, p, q, trials, seed):
    """Direct simulation of the star case with a separate generator."""
    rng = np.random.default_rng(seed)
    infected = 1 + rng.binomial(leaves, p, size=trials)
    return rng.binomial(infected, 1 - q).mean()


@pytest.mark.parametrize("p,q", [(0.3, 0.2), (0.7, 0.5), (0.5, 0.9)])
def test_star_expectation(p, q):
    leaves, trials = 12, 10_000
    sizes = np.array(
        [len(infect(star(leaves), InfectionConfig(0, p, q, 1, rng_seed=s, protect_seed=False))) for s in range(trials)]
    )
    mean = (1 + leaves * p) * (1 - q)
    # Var|T| = E[I] q(1-q) + (1-q)^2 Var[I] with I = 1 + Bin(leaves, p)
    var = (1 + leaves * p) * q * (1 - q) + (1 - q) ** 2 * leaves * p * (1 - p)
    assert abs(sizes.mean() - mean) <= 3 * math.sqrt(var / trials)
    assert abs(independent_star_mean(leaves, p, q, trials, 1) - mean) <= 3 * math.sqrt(var / trials)


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.integers(0, 1000))
def test_coupled_monotone_in_p(p1, p2, rng_seed):
    g = gnp_random_graph(40, 0.1, seed=3)
    lo, hi = sorted((p1, p2))
    a = infect(g, InfectionConfig(0, lo, 0.0, 4, rng_seed=rng_seed), immune_phase=False)
    b = infect(g, InfectionConfig(0, hi, 0.0, 4, rng_seed=rng_seed), immune_phase=False)
    assert a <= b


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 1), st.integers(1, 6), st.integers(0, 1000))
def test_pre_immunity_set_is_connected(p, rounds, rng_seed):
    g = gnp_random_graph(40, 0.08, seed=4)
    infected = infect(g, InfectionConfig(0, p, 0.3, rounds, rng_seed=rng_seed), immune_phase=False)
    assert 0 in infected
    assert len(union_find_components(g.n, g.edges, infected)) == 1


def test_immunity_can_split_the_population():
    g = random_geometric_graph(500, 0.08, seed=5)
    survivors = infect(g, InfectionConfig(0, 0.8, 0.5, 6, rng_seed=2))
    assert len(union_find_components(g.n, g.edges, survivors)) > 1


def test_replay():
    g = gnp_random_graph(60, 0.08, seed=6)
    cfg = InfectionConfig(1, 0.5, 0.3, 5, rng_seed=9)
    assert infect(g, cfg) == infect(g, cfg)


def test_config_validation():
    with pytest.raises(ValueError):
        InfectionConfig(0, 1.5, 0.0, 1)
    with pytest.raises(ValueError):
        InfectionConfig(0, 0.5, -0.1, 1)
    with pytest.raises(ValueError):
        InfectionConfig(0, 0.5, 0.5, 0)
    with pytest.raises(ValueError):
        infect(star(3), InfectionConfig(9, 0.5, 0.5, 1))
    cfg = InfectionConfig.from_dict({"seed_vertex": 2, "p": 0.4, "q": 0.1, "rounds": 3})
    assert cfg == InfectionConfig(2, 0.4, 0.1, 3, 0, True)
