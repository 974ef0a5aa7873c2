"""Per-eye encoder: shared weights, frozen prior stream, prior fusion."""

import numpy as np
import pytest

from stereolab.autodiff import (Adam, Linear, RngStream, ShapeError, Tensor,
                                grad_check, tensor, tensor_sum as t_sum)
from stereolab.models import ConvEncoder, PairEncoder, PriorEncoder, fuse_prior


def _images(rng, b=2, res=64):
    return tensor(rng.uniform(shape=(b, res, res, 3)))


def test_encoder_output_grid():
    enc = ConvEncoder(RngStream(0, 1))
    out = enc(_images(RngStream(0, 2)))
    assert out.shape == (2, 8, 8, 64)


def test_encoder_custom_strides():
    enc = ConvEncoder(RngStream(0, 1), channels=16, strides=(2, 2))
    out = enc(_images(RngStream(0, 2), res=32))
    assert out.shape == (2, 8, 8, 16)


def test_encoder_rejects_indivisible_resolution():
    enc = ConvEncoder(RngStream(0, 1))
    with pytest.raises(ShapeError, match="divisible"):
        enc(_images(RngStream(0, 2), res=60))


def test_pair_encoder_shares_weights_across_eyes():
    pair = PairEncoder(RngStream(3, 0), channels=16, strides=(2, 2), use_prior=False)
    img = _images(RngStream(3, 1), res=16)
    f_left, f_right = pair(img, img)
    assert np.array_equal(f_left.data, f_right.data)


def test_pair_encoder_swap_inputs_swaps_outputs():
    pair = PairEncoder(RngStream(3, 0), channels=16, strides=(2, 2))
    left = _images(RngStream(3, 1), res=16)
    right = _images(RngStream(3, 2), res=16)
    fl, fr = pair(left, right)
    gl, gr = pair(right, left)
    assert np.array_equal(fl.data, gr.data)
    assert np.array_equal(fr.data, gl.data)


def test_prior_grid_matches_main_encoder():
    rng = RngStream(4, 0)
    enc = ConvEncoder(rng.child("main"), channels=16)
    prior = PriorEncoder(rng.child("prior"), out_channels=8, total_stride=8)
    img = _images(RngStream(4, 1), res=32)
    f = enc(img)
    p = prior(img)
    assert f.shape[:3] == p.shape[:3]
    assert p.shape[-1] == 8


def test_prior_responds_to_input():
    prior = PriorEncoder(RngStream(4, 0), out_channels=8)
    a = prior(_images(RngStream(4, 1), res=16)).data
    b = prior(_images(RngStream(4, 2), res=16)).data
    assert not np.allclose(a, b)


def test_prior_rejects_unsupported_stride():
    with pytest.raises(ShapeError, match="stride"):
        PriorEncoder(RngStream(4, 0), total_stride=16)


def test_prior_params_have_no_grad_and_survive_adam():
    pair = PairEncoder(RngStream(5, 0), channels=16, strides=(2, 2))
    before = pair.prior.checksum()
    opt = Adam(pair.parameters(), lr=1e-2)
    for _ in range(3):
        opt.zero_grad()
        fl, fr = pair(_images(RngStream(5, 1), res=16),
                      _images(RngStream(5, 2), res=16))
        loss = t_sum(fl * fl) + t_sum(fr * fr)
        loss.backward()
        assert all(p.grad is None for p in pair.prior.parameters())
        assert pair.proj.w.grad is not None
        opt.step()
    assert pair.prior.checksum() == before


def test_wrist_path_has_no_prior_parameters():
    pair = PairEncoder(RngStream(5, 0), channels=16, strides=(2, 2), use_prior=False)
    names = [p.name for p in pair.parameters()]
    assert not any("prior" in n or "proj" in n for n in names)
    assert not hasattr(pair, "prior")


def test_fuse_prior_identity_projection():
    # projection [I | 0] with zero bias must pass the trainable stream through
    c, cp = 6, 3
    rng = RngStream(6, 0)
    proj = Linear(c + cp, c, rng.child("proj"))
    w = np.zeros((c + cp, c))
    w[:c, :c] = np.eye(c)
    proj.w.assign(w)
    proj.b.assign(np.zeros(c))
    f = tensor(rng.child("f").normal((2, 4, 4, c)))
    p = tensor(rng.child("p").normal((2, 4, 4, cp)))
    out = fuse_prior(f, p, proj)
    np.testing.assert_allclose(out.data, f.data, atol=1e-12)


def test_fuse_prior_grid_mismatch():
    rng = RngStream(6, 0)
    proj = Linear(9, 6, rng.child("proj"))
    f = tensor(rng.child("f").normal((2, 4, 4, 6)))
    p = tensor(rng.child("p").normal((2, 2, 2, 3)))
    with pytest.raises(ShapeError, match="grid"):
        fuse_prior(f, p, proj)


def test_fuse_prior_gradients_reach_features_and_projection_only():
    rng = RngStream(6, 1)
    proj = Linear(9, 6, rng.child("proj"))
    f = tensor(rng.child("f").normal((1, 2, 2, 6)), requires_grad=True)
    p = Tensor(rng.child("p").normal((1, 2, 2, 3)), requires_grad=False)
    t_sum(fuse_prior(f, p, proj)).backward()
    assert f.grad is not None and np.any(f.grad != 0)
    assert proj.w.grad is not None
    assert p.grad is None


def test_encoder_gradcheck_small():
    enc = ConvEncoder(RngStream(7, 0), channels=8, strides=(2, 2))
    img = tensor(RngStream(7, 1).uniform(shape=(1, 8, 8, 3)))

    def loss():
        out = enc(img)
        return t_sum(out * out)

    err = grad_check(loss, enc.parameters(), eps=1e-5, max_entries=40)
    assert err < 1e-4
