import numpy as np
import pytest

from disenlink.checkpoint import dumps, load_checkpoint, loads, save_checkpoint
from disenlink.model import Hyperparams, init_model
from disenlink.optim import adam_step


def test_round_trip_is_exact(tmp_path):
    hp = Hyperparams(K=3, d=4, bias=True, seed=9)
    state = init_model(7, hp)
    rng = np.random.default_rng(1)
    adam_step(state.adam, state.params, {k: rng.normal(size=v.shape) for k, v in state.params.items()})
    save_checkpoint(state, tmp_path / "c.json")
    back = load_checkpoint(tmp_path / "c.json")
    assert back.hp == hp and back.num_features == 7
    for k, v in state.params.items():
        assert np.array_equal(back.params[k], v)
        assert np.array_equal(back.adam.m[k], state.adam.m[k])
        assert np.array_equal(back.adam.v[k], state.adam.v[k])
    assert back.adam.t == 1
    assert dumps(back) == dumps(state)


def test_rejects_foreign_json():
    with pytest.raises(ValueError):
        loads('{"format": "other"}')
