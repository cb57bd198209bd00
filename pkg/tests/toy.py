"""Small graphs and plain-loop reference implementations used as test oracles."""

from __future__ import annotations

import math

import numpy as np

from disenlink.graph import AttributedGraph

# 8 nodes, two triangles bridged by a path, one isolated node
TOY_EDGES = [(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (4, 5), (4, 6), (5, 6)]


def toy_graph(num_features=6, seed=0, scale=0.5, labels=True) -> AttributedGraph:
    rng = np.random.default_rng(seed)
    x = rng.normal(0.0, scale, size=(8, num_features))
    lab = np.array([0, 0, 1, 1, 0, 1, 1, 0]) if labels else None
    return AttributedGraph.from_edge_list(8, np.array(TOY_EDGES), x, lab)


def random_graph(n, p, num_features, seed, labels=3) -> AttributedGraph:
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < p
    edges = np.stack([iu[keep], ju[keep]], axis=1)
    x = rng.normal(0.0, 0.5, size=(n, num_features))
    lab = rng.integers(0, labels, size=n)
    return AttributedGraph.from_edge_list(n, edges, x, lab)


def brute_auc(pos, neg) -> float:
    total = 0.0
    for p in pos:
        for q in neg:
            total += 1.0 if p > q else 0.5 if p == q else 0.0
    return total / (len(pos) * len(neg))


def reference_forward(x, params, K, tau, beta, edges_directed, variant="full"):
    """Loop-level forward pass: returns z (N,K,d), alpha (E,K), selection, alpha_bar (E,K), h."""
    n = x.shape[0]
    z = np.zeros((n, K, params["W2_0"].shape[0]))
    for s in range(n):
        for k in range(K):
            z[s, k] = params[f"W2_{k}"] @ np.maximum(params[f"W1_{k}"] @ x[s], 0.0)
    E = len(edges_directed)
    alpha = np.zeros((E, K))
    for e, (s, t) in enumerate(edges_directed):
        logits = [z[s, k] @ z[t, k] / tau for k in range(K)]
        m = max(logits)
        ex = [math.exp(l - m) for l in logits]
        alpha[e] = np.array(ex) / sum(ex)
    sel = np.argmax(alpha, axis=1)
    member = np.zeros((E, K), dtype=bool)
    if variant == "no-selection":
        member[:] = True
    else:
        member[np.arange(E), sel] = True
    weights = np.ones((E, K)) if variant == "no-alpha" else alpha
    abar = np.zeros((E, K))
    for s in range(n):
        rows = [e for e, (a, _) in enumerate(edges_directed) if a == s]
        for k in range(K):
            tot = sum(weights[e, k] for e in rows if member[e, k])
            for e in rows:
                if member[e, k]:
                    abar[e, k] = weights[e, k] / tot
    h = beta * z.copy()
    for e, (s, t) in enumerate(edges_directed):
        for k in range(K):
            h[s, k] += (1.0 - beta) * abar[e, k] * z[t, k]
    return z, alpha, sel, abar, h


def reference_score(z, h, s, t, tau, variant="full") -> float:
    K = z.shape[1]
    if variant in ("vanilla-recon", "no-alpha"):
        logit = sum(h[s, k] @ h[t, k] for k in range(K))
    else:
        logit = sum(math.exp(z[s, k] @ z[t, k] / tau) * (h[s, k] @ h[t, k]) for k in range(K))
    return 1.0 / (1.0 + math.exp(-logit))
