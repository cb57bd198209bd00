"""Disentangled link prediction: per-factor projection, factor-aware neighbor
selection, factor-wise message passing and disentangled link reconstruction."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ConfigError, ShapeError
from .optim import AdamState

log = logging.getLogger(__name__)

VARIANTS = ("full", "no-alpha", "no-selection", "vanilla-recon")

# |z_s,k . z_t,k / tau| beyond this is clamped before exp() in the link weight
GAMMA_LOGIT_CLAMP = 50.0
CLAMP_EVENTS = {"count": 0, "warned": False}


@dataclass
class Hyperparams:
    K: int = 5
    d: int = 32
    hidden: int | None = None
    tau: float = 1.0
    beta: float = 0.5
    M: int = 5
    lr: float = 1e-3
    weight_decay: float = 5e-4
    max_epochs: int = 2000
    patience: int = 20
    eval_every: int = 10
    seed: int = 0
    variant: str = "full"
    bias: bool = False
    # beta = 0 (pure neighbor aggregation) is only meaningful in sensitivity sweeps
    allow_zero_beta: bool = False

    def __post_init__(self):
        if self.hidden is None:
            self.hidden = 2 * self.d
        if self.K < 1 or self.d < 1 or self.hidden < 1:
            raise ConfigError("K, d and hidden must be >= 1")
        if not self.tau > 0:
            raise ConfigError("tau must be > 0")
        lo_ok = self.beta >= 0 if self.allow_zero_beta else self.beta > 0
        if not (lo_ok and self.beta <= 1):
            raise ConfigError(f"beta must be in (0, 1], got {self.beta}")
        if self.M < 1:
            raise ConfigError("M must be >= 1")
        if self.lr < 0 or self.weight_decay < 0:
            raise ConfigError("lr and weight_decay must be non-negative")
        if self.max_epochs < 0 or self.patience < 1 or self.eval_every < 1:
            raise ConfigError("max_epochs >= 0, patience >= 1 and eval_every >= 1 required")
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ModelState:
    params: dict
    hp: Hyperparams
    num_features: int
    adam: AdamState = field(default_factory=AdamState)

    def param_names(self):
        return list(self.params)

    def copy(self) -> "ModelState":
        adam = AdamState(
            lr=self.adam.lr, weight_decay=self.adam.weight_decay, beta1=self.adam.beta1,
            beta2=self.adam.beta2, eps=self.adam.eps, t=self.adam.t,
            m={k: v.copy() for k, v in self.adam.m.items()},
            v={k: v.copy() for k, v in self.adam.v.items()},
        )
        return ModelState({k: v.copy() for k, v in self.params.items()}, self.hp, self.num_features, adam)


def init_model(num_features: int, hp: Hyperparams, rng=None) -> ModelState:
    """Glorot-initialised per-factor MLP weights ``W1_k`` (hidden x F) and ``W2_k`` (d x hidden)."""
    rng = rng if rng is not None else np.random.default_rng(hp.seed)
    params = {}
    for k in range(hp.K):
        params[f"W1_{k}"] = ad.glorot_init((hp.hidden, num_features), rng=rng)
        params[f"W2_{k}"] = ad.glorot_init((hp.d, hp.hidden), rng=rng)
        if hp.bias:
            params[f"b1_{k}"] = np.zeros(hp.hidden)
            params[f"b2_{k}"] = np.zeros(hp.d)
    adam = AdamState(lr=hp.lr, weight_decay=hp.weight_decay)
    return ModelState(params, hp, num_features, adam)


def feature_operand(features: np.ndarray):
    """Use a sparse copy of bag-of-words style feature matrices for the first matmul."""
    if features.size and np.count_nonzero(features) / features.size < 0.2:
        return sp.csr_matrix(features)
    return features


def project_features(features, params: dict, K: int) -> Tensor:
    """``z[s, k] = W2_k relu(W1_k x_s)`` for every node; returns an N x K x d tensor."""
    if features.shape[1] != params["W1_0"].shape[1]:
        raise ShapeError(
            f"feature width {features.shape[1]} != W1 column count {params['W1_0'].shape[1]}"
        )
    blocks = []
    for k in range(K):
        a = ad.matmul(features, ad.transpose(params[f"W1_{k}"]))
        if f"b1_{k}" in params:
            a = a + params[f"b1_{k}"]
        z = ad.matmul(ad.relu(a), ad.transpose(params[f"W2_{k}"]))
        if f"b2_{k}" in params:
            z = z + params[f"b2_{k}"]
        blocks.append(z)
    n, d = blocks[0].shape
    return ad.reshape(ad.concat(blocks, axis=1), (n, K, d))


def factor_similarity(z: Tensor, src, dst) -> Tensor:
    """Per-factor inner products ``z[s, k] . z[t, k]`` for each pair; shape P x K."""
    return ad.dot(ad.gather(z, src), ad.gather(z, dst))


def compute_importance(z: Tensor, src, dst, tau: float) -> Tensor:
    """Softmax over factors of the per-factor similarity divided by ``tau``; shape E x K."""
    return ad.softmax(ad.scale(factor_similarity(z, src, dst), 1.0 / tau), axis=1)


@dataclass
class FactorNeighborhoods:
    """Assignment of every directed edge ``(src[e], dst[e])`` to factor neighborhoods.

    ``mask[e, k]`` is True iff ``dst[e]`` belongs to ``N_k(src[e])``. With
    selection enabled each row has exactly one True entry at ``selection[e]``.
    """

    src: np.ndarray
    dst: np.ndarray
    mask: np.ndarray
    num_nodes: int
    selection: np.ndarray | None = None

    @property
    def K(self) -> int:
        return self.mask.shape[1]

    def neighbors(self, s: int, k: int) -> np.ndarray:
        rows = self.src == s
        return self.dst[rows & self.mask[:, k]]

    def sizes(self) -> np.ndarray:
        """``|N_k(s)|`` as an N x K integer array."""
        out = np.zeros((self.num_nodes, self.K), dtype=np.int64)
        np.add.at(out, self.src, self.mask.astype(np.int64))
        return out

    def factor_adjacency(self, k: int) -> sp.csr_matrix:
        keep = self.mask[:, k]
        n = self.num_nodes
        return sp.csr_matrix(
            (np.ones(int(keep.sum())), (self.src[keep], self.dst[keep])), shape=(n, n)
        )

    @classmethod
    def unselected(cls, src, dst, K, num_nodes) -> "FactorNeighborhoods":
        """Every factor sees the full neighborhood (no factor-aware selection)."""
        return cls(np.asarray(src), np.asarray(dst), np.ones((len(src), K), dtype=bool), num_nodes)


def select_factors(alpha, src, dst, num_nodes: int) -> tuple[np.ndarray, FactorNeighborhoods]:
    """Assign each edge to its most important factor (lowest index on ties).

    Operates on plain values; the selection carries no gradient.
    """
    values = alpha.value if isinstance(alpha, Tensor) else np.asarray(alpha)
    p = np.argmax(values, axis=1)
    mask = np.zeros(values.shape, dtype=bool)
    mask[np.arange(len(p)), p] = True
    return p, FactorNeighborhoods(np.asarray(src), np.asarray(dst), mask, num_nodes, selection=p)


def normalize_attention(alpha, hoods: FactorNeighborhoods) -> Tensor:
    """Renormalise importances over each factor neighborhood.

    Returns an E x K tensor; entries for edges outside ``N_k(s)`` are zero.
    ``alpha=None`` gives uniform weights ``1/|N_k(s)|``.
    """
    mask = hoods.mask.astype(np.float64)
    if alpha is None:
        w = Tensor(mask)
    else:
        w = ad.mul(alpha, mask)
    denom = ad.segment_sum(w, hoods.src, hoods.num_nodes)
    # empty neighborhoods have zero weight mass; divide by 1 there instead of 0
    denom = ad.add(denom, (denom.value == 0).astype(np.float64))
    return ad.divide(w, ad.gather(denom, hoods.src))


def message_pass(z: Tensor, alpha_bar: Tensor, hoods: FactorNeighborhoods, beta: float) -> Tensor:
    """``h[s, k] = beta z[s, k] + (1 - beta) sum_{t in N_k(s)} alpha_bar[s, t, k] z[t, k]``."""
    if beta == 1.0:
        return z
    n, K, d = z.shape
    weighted = ad.mul(ad.gather(z, hoods.dst), ad.reshape(alpha_bar, (len(hoods.src), K, 1)))
    agg = ad.segment_sum(weighted, hoods.src, n)
    return ad.add(ad.scale(z, beta), ad.scale(agg, 1.0 - beta))


def link_logits(z: Tensor, h: Tensor, src, dst, tau: float, variant: str = "full") -> Tensor:
    """Pre-sigmoid link scores for the pairs ``(src[i], dst[i])``."""
    hdot = ad.dot(ad.gather(h, src), ad.gather(h, dst))
    if variant in ("vanilla-recon", "no-alpha"):
        return ad.sum(hdot, axis=1)
    zlogit = ad.scale(factor_similarity(z, src, dst), 1.0 / tau)
    clamped = int(np.count_nonzero(np.abs(zlogit.value) > GAMMA_LOGIT_CLAMP))
    if clamped:
        CLAMP_EVENTS["count"] += clamped
        level = logging.DEBUG if CLAMP_EVENTS["warned"] else logging.WARNING
        CLAMP_EVENTS["warned"] = True
        log.log(level, "link-weight logits clamped to +-%g on %d entries", GAMMA_LOGIT_CLAMP, clamped)
    gamma = ad.exp(ad.clip(zlogit, -GAMMA_LOGIT_CLAMP, GAMMA_LOGIT_CLAMP))
    return ad.sum(ad.mul(gamma, hdot), axis=1)


def predict_link(z: Tensor, h: Tensor, src, dst, tau: float, variant: str = "full") -> Tensor:
    """Link probabilities in (0, 1) for arbitrary node pairs."""
    return ad.sigmoid(link_logits(z, h, src, dst, tau, variant))


def training_loss(pos_pred: Tensor, neg_pred: Tensor, neg_valid) -> Tensor:
    """Squared reconstruction error with per-positive averaged negatives.

    ``pos_pred`` has shape (P,), ``neg_pred`` (P, M) and ``neg_valid`` is a
    boolean (P, M) mask of negatives that were actually drawn. Each positive
    contributes ``(p - 1)^2 + mean over its drawn negatives of q^2``.
    """
    neg_valid = np.asarray(neg_valid, dtype=np.float64)
    counts = neg_valid.sum(axis=1, keepdims=True)
    weights = neg_valid / np.where(counts > 0, counts, 1.0)
    pos_term = ad.sum(ad.square(ad.sub(pos_pred, 1.0)))
    neg_term = ad.sum(ad.mul(ad.square(neg_pred), weights))
    return ad.add(pos_term, neg_term)


@dataclass
class ForwardPass:
    z: Tensor
    h: Tensor
    alpha: Tensor | None
    alpha_bar: Tensor
    hoods: FactorNeighborhoods


def encode(features, params: dict, hp: Hyperparams, src, dst, num_nodes: int, hoods=None) -> ForwardPass:
    """Projection, importance, selection, attention and aggregation over the edges ``src -> dst``.

    ``hoods`` pins the factor neighborhoods instead of re-selecting them
    (used when the selection must stay fixed, e.g. finite-difference checks).
    """
    z = project_features(features, params, hp.K)
    alpha = compute_importance(z, src, dst, hp.tau) if len(src) else None
    if hoods is None:
        if hp.variant == "no-selection":
            hoods = FactorNeighborhoods.unselected(src, dst, hp.K, num_nodes)
        elif alpha is None:
            hoods = FactorNeighborhoods.unselected(src, dst, hp.K, num_nodes)
        else:
            _, hoods = select_factors(alpha, src, dst, num_nodes)
    if len(src) == 0:
        alpha_bar = Tensor(np.zeros((0, hp.K)))
        h = z if hp.beta == 1.0 else ad.scale(z, hp.beta)
        return ForwardPass(z, h, alpha, alpha_bar, hoods)
    alpha_bar = normalize_attention(None if hp.variant == "no-alpha" else alpha, hoods)
    h = message_pass(z, alpha_bar, hoods, hp.beta)
    return ForwardPass(z, h, alpha, alpha_bar, hoods)


def loss_on_batch(features, params, hp, src, dst, num_nodes, positives, negatives, hoods=None):
    """Full training objective for given positives and an (P, M) negative target array (-1 = none)."""
    fp = encode(features, params, hp, src, dst, num_nodes, hoods=hoods)
    positives = np.asarray(positives, dtype=np.int64).reshape(-1, 2)
    negatives = np.asarray(negatives, dtype=np.int64).reshape(len(positives), -1)
    valid = negatives >= 0
    M = negatives.shape[1]
    s_neg = np.repeat(positives[:, 0], M)
    t_neg = np.where(valid, negatives, positives[:, [0]]).reshape(-1)
    s_all = np.concatenate([positives[:, 0], s_neg])
    t_all = np.concatenate([positives[:, 1], t_neg])
    pred = predict_link(fp.z, fp.h, s_all, t_all, hp.tau, hp.variant)
    P = len(positives)
    pos_pred = ad.gather(pred, np.arange(P))
    neg_pred = ad.reshape(ad.gather(pred, np.arange(P, P + P * M)), (P, M))
    return training_loss(pos_pred, neg_pred, valid), fp
