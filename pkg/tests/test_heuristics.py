import math

import numpy as np
from hypothesis import given, settings, strategies as st

from disenlink.heuristics import (
    HeuristicScorer,
    adamic_adar,
    adamic_adar_scores,
    common_neighbor_scores,
    common_neighbors,
)
from toy import random_graph, toy_graph


def _sets(graph):
    return [set(graph.neighbors(i).tolist()) for i in range(graph.num_nodes)]


@settings(max_examples=40, deadline=None)
@given(n=st.integers(3, 30), p=st.floats(0.05, 0.8), seed=st.integers(0, 10_000))
def test_vectorised_scores_match_set_oracle(n, p, seed):
    g = random_graph(n, p, 2, seed)
    nb = _sets(g)
    rng = np.random.default_rng(seed)
    pairs = rng.integers(0, n, size=(15, 2))
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    cn = common_neighbor_scores(g, pairs)
    aa = adamic_adar_scores(g, pairs)
    for (u, v), c, a in zip(pairs.tolist(), cn, aa):
        shared = nb[u] & nb[v]
        assert c == len(shared) == common_neighbors(g, (u, v))
        want = sum(1.0 / math.log(len(nb[w])) for w in shared)
        assert abs(a - want) < 1e-12
        assert abs(adamic_adar(g, (u, v)) - want) < 1e-12


def test_toy_values():
    g = toy_graph()
    # 0 and 1 share node 2 (degree 3); 3 and 5 share node 4 (degree 3)
    assert common_neighbors(g, (0, 1)) == 1
    assert adamic_adar(g, (3, 5)) == 1.0 / math.log(3)
    assert HeuristicScorer(g, "cn")([[0, 7]]).tolist() == [0.0]
