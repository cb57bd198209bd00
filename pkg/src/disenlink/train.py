"""Full-batch training loop with validation-AUC early stopping."""

from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass

import numpy as np

from .autodiff import Tape, Tensor
from .errors import DivergenceError, NonFiniteGradientError
from .graph import AttributedGraph, EdgeSplit, sample_training_negatives
from .metrics import auc
from .model import (
    Hyperparams,
    ModelState,
    encode,
    feature_operand,
    init_model,
    link_logits,
    loss_on_batch,
    predict_link,
)
from .optim import adam_step

log = logging.getLogger(__name__)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    valid_auc: float | None
    elapsed_ms: float


@dataclass
class TrainResult:
    state: ModelState
    trace: list
    best_epoch: int
    best_valid_auc: float


class DisenLinkScorer:
    """Scores node pairs with a trained model; aggregation uses only ``graph``'s edges."""

    def __init__(self, state: ModelState, graph: AttributedGraph, features=None):
        self.state = state
        self.graph = graph
        src, dst = graph.directed_edges()
        feats = features if features is not None else feature_operand(graph.features)
        params = {k: Tensor(v) for k, v in state.params.items()}
        self.forward = encode(feats, params, state.hp, src, dst, graph.num_nodes)

    @property
    def z(self) -> np.ndarray:
        return self.forward.z.value

    @property
    def h(self) -> np.ndarray:
        return self.forward.h.value

    def __call__(self, pairs) -> np.ndarray:
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        hp = self.state.hp
        out = predict_link(self.forward.z, self.forward.h, pairs[:, 0], pairs[:, 1], hp.tau, hp.variant)
        return out.value

    def logits(self, pairs) -> np.ndarray:
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        hp = self.state.hp
        return link_logits(self.forward.z, self.forward.h, pairs[:, 0], pairs[:, 1], hp.tau, hp.variant).value


def _validation_auc(state, train_graph, feats, split):
    if len(split.valid_pos) == 0 or len(split.valid_neg) == 0:
        return None
    scorer = DisenLinkScorer(state, train_graph, feats)
    # rank on logits: sigmoid saturation would otherwise create artificial ties
    return auc(scorer.logits(split.valid_pos), scorer.logits(split.valid_neg))


def train(graph: AttributedGraph, split: EdgeSplit, hp: Hyperparams, timing=True, state=None,
          on_epoch=None) -> TrainResult:
    """Train on ``split.train_pos`` and return the best-validation checkpoint.

    Message passing and the loss only ever see training edges. Negatives
    are redrawn every epoch from ``(hp.seed, epoch)``. Validation AUC is
    checked every ``hp.eval_every`` epochs; training stops after
    ``hp.patience`` checks without improvement or at ``hp.max_epochs``.
    ``on_epoch(epoch, state)`` is called after every parameter update.
    """
    train_graph = graph.with_edges(split.train_pos)
    feats = feature_operand(graph.features)
    state = state if state is not None else init_model(graph.num_features, hp)
    src, dst = train_graph.directed_edges()
    positives = np.stack([src, dst], axis=1)
    n = graph.num_nodes

    trace = []
    best = (state.copy(), -1, -math.inf)
    stale = 0
    start = time.perf_counter()
    for epoch in range(hp.max_epochs):
        negs = sample_training_negatives(train_graph, positives, hp.M, hp.seed, epoch)
        tape = Tape()
        params = {k: tape.param(v, name=k) for k, v in state.params.items()}
        loss, _ = loss_on_batch(feats, params, hp, src, dst, n, positives, negs)
        loss_value = float(loss.value)
        if not math.isfinite(loss_value):
            raise DivergenceError(f"non-finite training loss at epoch {epoch}", trace)
        tape.backward(loss)
        grads = {k: (t.grad if t.grad is not None else np.zeros_like(t.value)) for k, t in params.items()}
        try:
            adam_step(state.adam, state.params, grads)
        except NonFiniteGradientError as exc:
            raise DivergenceError(f"epoch {epoch}: {exc}", trace) from exc
        if on_epoch is not None:
            on_epoch(epoch, state)

        valid = None
        last = epoch == hp.max_epochs - 1
        if (epoch + 1) % hp.eval_every == 0 or last:
            valid = _validation_auc(state, train_graph, feats, split)
            if valid is not None:
                if valid > best[2]:
                    best = (state.copy(), epoch, valid)
                    stale = 0
                else:
                    stale += 1
        elapsed = (time.perf_counter() - start) * 1000.0 if timing else 0.0
        trace.append(EpochRecord(epoch, loss_value, valid, elapsed))
        if valid is not None and stale >= hp.patience:
            log.info("early stop at epoch %d (best %d, valid auc %.4f)", epoch, best[1], best[2])
            break

    if best[1] < 0:
        # no validation signal: keep the final parameters
        best = (state.copy(), len(trace) - 1, float("nan"))
    return TrainResult(best[0], trace, best[1], best[2])


def write_trace_csv(trace, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "train_loss", "valid_auc", "elapsed_ms"])
        for r in trace:
            w.writerow([
                r.epoch,
                repr(r.train_loss),
                "" if r.valid_auc is None else repr(r.valid_auc),
                f"{r.elapsed_ms:.3f}",
            ])
