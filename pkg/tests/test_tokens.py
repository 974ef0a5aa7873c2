"""Token-conditioned policy stub around the fused observation embedding."""

import numpy as np
import pytest

from stereolab.autodiff import Adam, RngStream, ShapeError, mean, tensor
from stereolab.models import TokenPolicy


def _policy(seed=40, **kw):
    args = dict(cond_dim=16, lang_dim=4, n_lang_tokens=3, d_tok=8, n_heads=2,
                horizon=4, action_dim=2, n_cond_tokens=4)
    args.update(kw)
    return TokenPolicy(RngStream(seed, 0), **args)


def _inputs(seed=41, b=2):
    rng = RngStream(seed, 0)
    return (tensor(rng.child("c").normal((b, 16))),
            tensor(rng.child("l").normal((b, 3, 4))),
            tensor(rng.child("s").normal((b, 2))))


def test_output_shape():
    pol = _policy()
    cond, lang, state = _inputs()
    assert pol(cond, lang, state).shape == (2, 4, 2)


def test_language_token_order_is_irrelevant():
    pol = _policy()
    cond, lang, state = _inputs()
    base = pol(cond, lang, state).data
    for perm in ([2, 0, 1], [1, 2, 0], [2, 1, 0]):
        shuffled = tensor(lang.data[:, perm])
        np.testing.assert_allclose(pol(cond, shuffled, state).data, base, atol=1e-12)


def test_zero_language_tokens_are_well_defined():
    pol = _policy()
    cond, _, state = _inputs()
    out = pol(cond, tensor(np.zeros((2, 3, 4))), state).data
    assert np.all(np.isfinite(out))


def test_output_uses_every_input():
    pol = _policy()
    cond, lang, state = _inputs()
    base = pol(cond, lang, state).data
    assert not np.allclose(base, pol(tensor(cond.data + 1), lang, state).data)
    assert not np.allclose(base, pol(cond, tensor(lang.data + 1), state).data)
    assert not np.allclose(base, pol(cond, lang, tensor(state.data + 1)).data)


def test_validates_shapes():
    with pytest.raises(ShapeError, match="divisible"):
        _policy(cond_dim=15)
    pol = _policy()
    cond, lang, state = _inputs()
    with pytest.raises(ShapeError, match="cond"):
        pol(tensor(np.zeros((2, 12))), lang, state)
    with pytest.raises(ShapeError, match="lang"):
        pol(cond, tensor(np.zeros((2, 5, 4))), state)


def test_behavior_cloning_loss_decreases():
    pol = _policy(seed=42)
    cond, lang, state = _inputs(seed=43, b=8)
    target = tensor(RngStream(44, 0).uniform(-0.5, 0.5, (8, 4, 2)))
    opt = Adam(pol.parameters(), lr=3e-3)
    losses = []
    for _ in range(150):
        opt.zero_grad()
        diff = pol(cond, lang, state) + target * (-1.0)
        loss = mean(diff * diff)
        loss.backward()
        opt.step()
        losses.append(float(loss.data))
    assert losses[-1] < 0.1 * losses[0]
