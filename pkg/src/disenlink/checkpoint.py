"""JSON checkpoints for model parameters, optimizer moments and hyperparameters.

Floats are written with ``repr`` precision (17 significant digits), so a
save/load round trip reproduces every value exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .model import Hyperparams, ModelState
from .optim import AdamState

FORMAT = "disenlink-checkpoint/1"


def _pack(arrays: dict) -> dict:
    return {k: {"shape": list(v.shape), "values": v.ravel().tolist()} for k, v in arrays.items()}


def _unpack(blob: dict) -> dict:
    return {
        k: np.asarray(v["values"], dtype=np.float64).reshape(v["shape"]) for k, v in blob.items()
    }


def dumps(state: ModelState) -> str:
    hp = state.hp
    doc = {
        "format": FORMAT,
        "header": {
            "K": hp.K,
            "d": hp.d,
            "hidden": hp.hidden,
            "seed": hp.seed,
            "num_features": state.num_features,
        },
        "hyperparams": hp.to_dict(),
        "params": _pack(state.params),
        "adam": {
            "t": state.adam.t,
            "lr": state.adam.lr,
            "weight_decay": state.adam.weight_decay,
            "beta1": state.adam.beta1,
            "beta2": state.adam.beta2,
            "eps": state.adam.eps,
            "m": _pack(state.adam.m),
            "v": _pack(state.adam.v),
        },
    }
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def loads(text: str) -> ModelState:
    doc = json.loads(text)
    if doc.get("format") != FORMAT:
        raise ValueError(f"not a checkpoint: format={doc.get('format')!r}")
    hp = Hyperparams(**doc["hyperparams"])
    a = doc["adam"]
    adam = AdamState(
        lr=a["lr"], weight_decay=a["weight_decay"], beta1=a["beta1"], beta2=a["beta2"],
        eps=a["eps"], t=a["t"], m=_unpack(a["m"]), v=_unpack(a["v"]),
    )
    return ModelState(_unpack(doc["params"]), hp, doc["header"]["num_features"], adam)


def save_checkpoint(state: ModelState, path) -> None:
    Path(path).write_text(dumps(state), encoding="utf-8")


def load_checkpoint(path) -> ModelState:
    return loads(Path(path).read_text(encoding="utf-8"))
