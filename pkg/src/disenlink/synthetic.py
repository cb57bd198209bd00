"""Planted latent-factor graphs for desk-scale experiments.

Each node belongs to one community in every latent factor. An edge is
created by picking a factor and joining two nodes that share a community
in it, so every link has a single explaining factor. Features are binary
bag-of-words blocks, one block per factor, with community-specific
vocabularies. Labels are the communities of one factor, which makes the
graph heterophilic when there are several factors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import AttributedGraph


@dataclass
class PlantedGraph:
    graph: AttributedGraph
    memberships: np.ndarray  # N x num_factors community ids
    edge_factor: np.ndarray  # planted factor of each edge in graph.edges


def planted_factor_graph(
    num_nodes=300,
    num_factors=4,
    communities=5,
    avg_degree=6.0,
    words_per_factor=40,
    vocab_fraction=0.3,
    signal=0.35,
    noise=0.03,
    seed=0,
    label_factor=0,
) -> PlantedGraph:
    rng = np.random.default_rng(seed)
    memb = rng.integers(0, communities, size=(num_nodes, num_factors))

    blocks = []
    for f in range(num_factors):
        vocab = rng.random((communities, words_per_factor)) < vocab_fraction
        p = np.where(vocab[memb[:, f]], signal, noise)
        blocks.append((rng.random(p.shape) < p).astype(np.float64))
    features = np.concatenate(blocks, axis=1)

    members = [[np.flatnonzero(memb[:, f] == c) for c in range(communities)] for f in range(num_factors)]
    target = int(round(num_nodes * avg_degree / 2))
    seen = {}
    attempts = 0
    while len(seen) < target and attempts < 50 * target:
        attempts += 1
        f = int(rng.integers(num_factors))
        u = int(rng.integers(num_nodes))
        pool = members[f][memb[u, f]]
        if len(pool) < 2:
            continue
        v = int(pool[rng.integers(len(pool))])
        if u == v:
            continue
        key = (min(u, v), max(u, v))
        seen.setdefault(key, f)
    keys = sorted(seen)
    edges = np.asarray(keys, dtype=np.int64).reshape(-1, 2)
    edge_factor = np.asarray([seen[k] for k in keys], dtype=np.int64)
    graph = AttributedGraph(num_nodes, edges, features, memb[:, label_factor].copy())
    return PlantedGraph(graph, memb, edge_factor)
