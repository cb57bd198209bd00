import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from disenlink.autodiff import Tape, Tensor, finite_difference_check
from disenlink.errors import ConfigError, ShapeError
from disenlink.model import (
    VARIANTS,
    Hyperparams,
    encode,
    init_model,
    loss_on_batch,
    predict_link,
    select_factors,
)
from toy import random_graph, reference_forward, reference_score, toy_graph


def _forward(graph, hp, seed=0):
    state = init_model(graph.num_features, hp, rng=np.random.default_rng(seed))
    src, dst = graph.directed_edges()
    params = {k: Tensor(v) for k, v in state.params.items()}
    return state, encode(graph.features, params, hp, src, dst, graph.num_nodes), src, dst


@pytest.mark.parametrize("variant", VARIANTS)
def test_encode_matches_loop_reference(variant):
    g = toy_graph(num_features=5, seed=3)
    hp = Hyperparams(K=3, d=4, tau=0.7, beta=0.3, variant=variant)
    state, fp, src, dst = _forward(g, hp, seed=1)
    pairs = list(zip(src.tolist(), dst.tolist()))
    z, alpha, sel, abar, h = reference_forward(g.features, state.params, 3, 0.7, 0.3, pairs, variant)
    assert np.allclose(fp.z.value, z, atol=1e-12)
    assert np.allclose(fp.alpha.value, alpha, atol=1e-12)
    assert np.allclose(fp.alpha_bar.value, abar, atol=1e-12)
    assert np.allclose(fp.h.value, h, atol=1e-12)
    test_pairs = [(0, 5), (2, 3), (7, 1), (4, 4)]
    s = np.array([p[0] for p in test_pairs])
    t = np.array([p[1] for p in test_pairs])
    got = predict_link(fp.z, fp.h, s, t, hp.tau, variant).value
    want = [reference_score(z, h, a, b, 0.7, variant) for a, b in test_pairs]
    assert np.allclose(got, want, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), K=st.integers(1, 6), n=st.integers(4, 25), p=st.floats(0.1, 0.6))
def test_structural_invariants(seed, K, n, p):
    g = random_graph(n, p, 4, seed)
    hp = Hyperparams(K=K, d=3, tau=0.5)
    _, fp, src, dst = _forward(g, hp, seed)
    if not len(src):
        return
    hoods = fp.hoods
    # each directed edge lands in exactly one factor neighborhood
    assert (hoods.mask.sum(axis=1) == 1).all()
    A = g.adjacency().toarray()
    total = sum(hoods.factor_adjacency(k).toarray() for k in range(K))
    assert np.array_equal(total, A)
    for s in range(n):
        parts = np.concatenate([hoods.neighbors(s, k) for k in range(K)])
        assert sorted(parts.tolist()) == g.neighbors(s).tolist()
    assert np.allclose(fp.alpha.value.sum(axis=1), 1.0, atol=1e-9)
    sums = np.zeros((n, K))
    np.add.at(sums, src, fp.alpha_bar.value)
    live = hoods.sizes() > 0
    assert np.allclose(sums[live], 1.0, atol=1e-9)
    assert (sums[~live] == 0).all()


def test_selection_ties_pick_lowest_index():
    alpha = np.array([[0.4, 0.4, 0.2], [0.2, 0.4, 0.4], [1 / 3, 1 / 3, 1 / 3]])
    p, hoods = select_factors(alpha, np.array([0, 0, 1]), np.array([1, 2, 0]), 3)
    assert p.tolist() == [0, 1, 0]
    assert hoods.mask.sum() == 3


def test_no_selection_uses_full_neighborhood():
    g = toy_graph()
    _, fp, src, _ = _forward(g, Hyperparams(K=3, d=2, variant="no-selection"))
    assert fp.hoods.mask.all()
    assert np.array_equal(fp.hoods.sizes()[:, 0], g.degrees())


def test_isolated_node_keeps_scaled_projection():
    g = toy_graph()
    hp = Hyperparams(K=2, d=3, beta=0.4)
    _, fp, _, _ = _forward(g, hp)
    assert np.allclose(fp.h.value[7], 0.4 * fp.z.value[7])


def test_single_factor_importance_is_one():
    g = random_graph(20, 0.3, 4, 2)
    _, fp, _, _ = _forward(g, Hyperparams(K=1, d=4))
    assert np.array_equal(fp.alpha.value, np.ones_like(fp.alpha.value))


def test_beta_one_returns_projection_bit_exact():
    g = random_graph(20, 0.3, 4, 2)
    _, fp, _, _ = _forward(g, Hyperparams(K=3, d=4, beta=1.0))
    assert np.array_equal(fp.h.value, fp.z.value)


def test_hyperparam_validation():
    with pytest.raises(ConfigError):
        Hyperparams(beta=0.0)
    assert Hyperparams(beta=0.0, allow_zero_beta=True).beta == 0.0
    with pytest.raises(ConfigError):
        Hyperparams(tau=0)
    with pytest.raises(ConfigError):
        Hyperparams(variant="nope")
    assert Hyperparams(d=7).hidden == 14


def test_feature_width_mismatch():
    g = toy_graph(num_features=4)
    state = init_model(5, Hyperparams(K=2, d=2))
    src, dst = g.directed_edges()
    with pytest.raises(ShapeError):
        encode(g.features, {k: Tensor(v) for k, v in state.params.items()}, state.hp, src, dst, 8)


def _reference_loss(graph, state, hp, positives, negatives):
    src, dst = graph.directed_edges()
    pairs = list(zip(src.tolist(), dst.tolist()))
    z, _, _, _, h = reference_forward(graph.features, state.params, hp.K, hp.tau, hp.beta, pairs, hp.variant)
    total = 0.0
    for (s, t), row in zip(positives, negatives):
        total += (reference_score(z, h, s, t, hp.tau, hp.variant) - 1.0) ** 2
        drawn = [m for m in row if m >= 0]
        if drawn:
            total += sum(reference_score(z, h, s, m, hp.tau, hp.variant) ** 2 for m in drawn) / len(drawn)
    return total


@pytest.mark.parametrize("variant", VARIANTS)
def test_loss_matches_reference(variant):
    g = toy_graph(num_features=5, seed=4)
    hp = Hyperparams(K=2, d=3, variant=variant, tau=0.8)
    state = init_model(g.num_features, hp, rng=np.random.default_rng(0))
    src, dst = g.directed_edges()
    positives = np.stack([src, dst], axis=1)
    negatives = np.random.default_rng(1).integers(-1, 8, size=(len(positives), 3))
    params = {k: Tensor(v) for k, v in state.params.items()}
    loss, _ = loss_on_batch(g.features, params, hp, src, dst, 8, positives, negatives)
    ref = _reference_loss(g, state, hp, positives.tolist(), negatives.tolist())
    assert float(loss.value) == pytest.approx(ref, rel=1e-12)


def full_pipeline_fd(variant, seed, h=1e-6):
    """Max relative FD error of the whole loss on the 8-node toy graph (selection pinned)."""
    g = toy_graph(num_features=4, seed=seed)
    hp = Hyperparams(K=3, d=3, hidden=4, tau=1.0, beta=0.5, variant=variant)
    state = init_model(g.num_features, hp, rng=np.random.default_rng(seed))
    src, dst = g.directed_edges()
    positives = np.stack([src, dst], axis=1)
    negatives = np.random.default_rng(seed + 1).integers(0, 8, size=(len(positives), 2))
    base = encode(g.features, {k: Tensor(v) for k, v in state.params.items()}, hp, src, dst, 8)

    def loss_fn(tape, t):
        return loss_on_batch(g.features, t, hp, src, dst, 8, positives, negatives, hoods=base.hoods)[0]

    tape = Tape()
    t = {k: tape.param(v) for k, v in state.params.items()}
    tape.backward(loss_fn(tape, t))
    grad_norm = math.sqrt(sum(float((x.grad ** 2).sum()) for x in t.values()))
    return finite_difference_check(loss_fn, state.params, h=h), grad_norm


@pytest.mark.parametrize("variant", VARIANTS)
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_full_pipeline_gradient(variant, seed):
    err, norm = full_pipeline_fd(variant, seed)
    assert norm > 1e-3  # a vanishing gradient would pass trivially
    assert err < 1e-4
