"""Conditional 1D UNet noise predictor."""

import numpy as np
import pytest

from stereolab.autodiff import (RngStream, ShapeError, grad_check, tensor,
                                tensor_sum as t_sum)
from stereolab.models import DenoiserNet


def _net(seed=30, **kw):
    args = dict(horizon=4, action_dim=2, cond_dim=6, base=8, cond_hidden=16,
                t_emb_dim=8)
    args.update(kw)
    return DenoiserNet(RngStream(seed, 0), **args)


def _inputs(seed=31, b=3, h=4, a=2, c=6):
    rng = RngStream(seed, 0)
    return (tensor(rng.child("x").normal((b, h, a))),
            rng.child("t").integers(1, 11, (b,)),
            tensor(rng.child("c").normal((b, c))))


def test_output_shape():
    net = _net()
    x, taus, cond = _inputs()
    assert net(x, taus, cond).shape == (3, 4, 2)


def test_longer_horizon_shape():
    net = _net(horizon=16, action_dim=4, cond_dim=10)
    x, taus, cond = _inputs(b=2, h=16, a=4, c=10)
    assert net(x, taus, cond).shape == (2, 16, 4)


def test_deterministic():
    net = _net()
    x, taus, cond = _inputs()
    np.testing.assert_array_equal(net(x, taus, cond).data, net(x, taus, cond).data)


def test_default_parameter_budget():
    net = DenoiserNet(RngStream(0, 0))
    assert net.param_count() == 199_396


def test_rejects_bad_horizon():
    with pytest.raises(ShapeError, match="divisible by 4"):
        _net(horizon=6)


def test_rejects_mismatched_inputs():
    net = _net()
    x, taus, cond = _inputs()
    with pytest.raises(ShapeError, match="chunk"):
        net(tensor(np.zeros((3, 8, 2))), taus, cond)
    with pytest.raises(ShapeError, match="cond"):
        net(x, taus, tensor(np.zeros((3, 5))))
    with pytest.raises(ShapeError, match="timestep"):
        net(x, taus[:2], cond)


def test_conditioning_changes_output():
    net = _net()
    x, taus, cond = _inputs()
    base = net(x, taus, cond).data
    other_cond = tensor(cond.data + 1.0)
    assert not np.allclose(base, net(x, taus, other_cond).data)
    other_taus = np.where(taus == 1, 2, 1)
    assert not np.allclose(base, net(x, other_taus, cond).data)


def test_initial_prediction_is_small():
    net = _net()
    x, taus, cond = _inputs()
    out = net(x, taus, cond).data
    assert np.abs(out).max() < 0.5
    assert np.any(out != 0.0)


def test_gradcheck():
    net = _net(seed=32)
    x, taus, cond = _inputs(seed=33, b=1)

    def loss():
        out = net(x, taus, cond)
        return t_sum(out * out)

    assert grad_check(loss, net.parameters(), eps=1e-5, max_entries=20) < 1e-4
