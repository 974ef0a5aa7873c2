"""Task sampling, environment dynamics, the scripted expert, and dataset IO."""

import numpy as np
import pytest

from stereolab.autodiff import RngStream
from stereolab.world import (DatasetFormatError, ExpertError, ReachEnv, Scene,
                             SceneObject, StereoObservation, TaskConfig,
                             TaskInstance, Trajectory, external_rig, read_dataset,
                             render, replay_success, sample_task, scripted_expert,
                             write_dataset)

CFG = TaskConfig(width=32, height=32, n_views=1)


def test_fixed_depth_range_is_constant():
    cfg = TaskConfig(width=32, height=32, n_views=1, depth_range=(0.7, 0.7))
    rng = RngStream(70, 0)
    depths = {sample_task(cfg, rng).target_depth for _ in range(10)}
    assert depths == {0.7}


def test_depth_distribution_monte_carlo():
    rng = RngStream(71, 0)
    depths = [sample_task(CFG, rng).target_depth for _ in range(1000)]
    assert 0.4 <= min(depths) and max(depths) <= 0.9
    assert abs(np.mean(depths) - 0.65) < 0.02


def test_same_rng_same_task():
    a = sample_task(CFG, RngStream(72, 0))
    b = sample_task(CFG, RngStream(72, 0))
    assert a.target_depth == b.target_depth
    np.testing.assert_array_equal(a.target_point, b.target_point)
    assert len(a.scene.objects) == len(b.scene.objects)
    for oa, ob in zip(a.scene.objects, b.scene.objects):
        np.testing.assert_array_equal(oa.center, ob.center)
        np.testing.assert_array_equal(oa.size, ob.size)
        assert oa.kind == ob.kind


def test_target_sits_on_anchor_ray():
    from stereolab.world import project
    for seed in range(5):
        task = sample_task(CFG, RngStream(73, seed))
        rig = external_rig(CFG)
        u, v, ok = project(task.target_point, rig.intrinsics, rig.left_pose)
        assert ok
        assert u == pytest.approx(CFG.anchor_px[0], abs=1e-9)
        assert v == pytest.approx(CFG.anchor_px[1], abs=1e-9)


def test_hard_ambiguity_left_image_depth_invariant():
    rig = external_rig(CFG)
    t_near = sample_task(CFG, RngStream(74, 0), depth_override=0.42)
    t_far = sample_task(CFG, RngStream(74, 0), depth_override=0.88)
    near = render(t_near.scene, rig)
    far = render(t_far.scene, rig)
    assert near.left.tobytes() == far.left.tobytes()
    assert near.right.tobytes() != far.right.tobytes()


def test_natural_mode_leaves_monocular_size_cue():
    cfg = TaskConfig(width=32, height=32, n_views=1, ambiguity="natural")
    rig = external_rig(cfg)
    near = render(sample_task(cfg, RngStream(74, 1), depth_override=0.42).scene, rig)
    far = render(sample_task(cfg, RngStream(74, 1), depth_override=0.88).scene, rig)
    assert near.left.tobytes() != far.left.tobytes()


def test_zero_action_only_advances_clock():
    env = ReachEnv(sample_task(CFG, RngStream(75, 0)))
    env.reset()
    ee0, grip0 = env.ee.copy(), env.gripper
    done, success = env.step_fast(np.zeros(4))
    assert not done and not success
    np.testing.assert_array_equal(env.ee, ee0)
    assert env.gripper == grip0
    assert env.t == 1


def test_direct_action_reaches_success():
    task = sample_task(CFG, RngStream(76, 0))
    env = ReachEnv(task)
    env.ee = task.target_point + np.array([0.01, 0.0, 0.0])
    done, success = env.step_fast(np.array([-0.01, 0.0, 0.0, 1.0]))
    assert done and success


def test_actions_are_clamped():
    task = sample_task(CFG, RngStream(77, 0))
    env = ReachEnv(task)
    ee0 = env.ee.copy()
    env.step_fast(np.array([9.0, -9.0, 9.0, 0.0]))
    np.testing.assert_allclose(env.ee - ee0, [0.05, -0.05, 0.05], atol=1e-12)


def test_random_policy_rarely_succeeds():
    wins = 0
    for i in range(60):
        env = ReachEnv(sample_task(CFG, RngStream(78, i)))
        arng = RngStream(79, i)
        while True:
            a = np.concatenate([arng.uniform(-0.05, 0.05, (3,)), arng.uniform(-1, 1, (1,))])
            done, success = env.step_fast(a)
            if done:
                break
        wins += int(success)
    assert wins / 60 < 0.05


def test_expert_always_succeeds_and_replays():
    for i in range(10):
        task = sample_task(CFG, RngStream(80, i))
        traj = scripted_expert(task, RngStream(81, i))
        assert traj.success
        assert replay_success(task, traj.actions)
        assert np.all(np.abs(traj.actions[:, :3]) <= CFG.action_limit + 1e-6)


def test_expert_one_step_when_target_at_home():
    probe = sample_task(CFG, RngStream(82, 0), depth_override=0.6)
    cfg = TaskConfig(width=32, height=32, n_views=1,
                     ee_home=tuple(probe.target_point), depth_range=(0.6, 0.6))
    task = sample_task(cfg, RngStream(82, 0), depth_override=0.6)
    traj = scripted_expert(task, RngStream(82, 1))
    assert traj.success and len(traj.observations) == 1


def test_expert_mean_length_reasonable():
    rng = RngStream(83, 0)
    lens = []
    for i in range(40):
        task = sample_task(CFG, rng)
        lens.append(len(scripted_expert(task, rng.child(f"d{i}")).observations))
    assert 5 <= np.mean(lens) < CFG.max_steps


def test_expert_rejects_unreachable_target():
    task = sample_task(CFG, RngStream(84, 0))
    bad = TaskInstance(task.config, task.scene, np.array([9.0, 9.0, 9.0]),
                       task.target_depth, task.success_radius, task.max_steps,
                       task.ambiguity_axis)
    with pytest.raises(ExpertError):
        scripted_expert(bad, RngStream(84, 1))


def test_observation_layout():
    env = ReachEnv(sample_task(CFG, RngStream(85, 0)))
    obs = env.reset()
    assert obs.images.shape == (1, 2, 32, 32, 3)
    assert obs.proprio.dtype == np.float32
    assert obs.proprio.shape == (4,)
    assert obs.timestep == 0
    cfg2 = TaskConfig(width=32, height=32, n_views=2)
    obs2 = ReachEnv(sample_task(cfg2, RngStream(85, 1))).reset()
    assert obs2.images.shape == (2, 2, 32, 32, 3)


def test_trajectory_length_mismatch_rejected():
    env = ReachEnv(sample_task(CFG, RngStream(86, 0)))
    obs = env.reset()
    with pytest.raises(ValueError):
        Trajectory([obs], np.zeros((2, 4), dtype=np.float32), False)


def test_scene_validation():
    ws = (np.array([-1.0, -1, -1]), np.array([1.0, 1, 1]))
    tgt = SceneObject("sphere", [0, 0, 0.5], 0.05, [1, 0, 0], 1)
    with pytest.raises(ValueError, match="target"):
        Scene((tgt, SceneObject("sphere", [0.3, 0, 0.5], 0.05, [0, 1, 0], 1)), 1, ws)
    with pytest.raises(ValueError, match="workspace"):
        Scene((SceneObject("sphere", [0, 0, 5.0], 0.05, [1, 0, 0], 1),), 1, ws)
    with pytest.raises(ValueError):
        SceneObject("cone", [0, 0, 0.5], 0.05, [1, 0, 0], 1)


def _demo_batch(n=3, seed=90):
    out = []
    for i in range(n):
        task = sample_task(CFG, RngStream(seed, i))
        out.append(scripted_expert(task, RngStream(seed + 1, i)))
    return out


def test_dataset_roundtrip_exact(tmp_path):
    trajs = _demo_batch(3)
    p = tmp_path / "demos.spl"
    write_dataset(trajs, p)
    back = read_dataset(p)
    assert len(back) == 3
    for a, b in zip(trajs, back):
        assert a == b
    # write the read copy again: byte-stable persistence
    p2 = tmp_path / "demos2.spl"
    write_dataset(back, p2)
    assert p.read_bytes() == p2.read_bytes()


def test_dataset_empty_roundtrip(tmp_path):
    p = tmp_path / "empty.spl"
    write_dataset([], p)
    assert read_dataset(p) == []


def test_dataset_bad_magic(tmp_path):
    p = tmp_path / "bad.spl"
    write_dataset(_demo_batch(1), p)
    raw = bytearray(p.read_bytes())
    raw[:4] = b"NOPE"
    p.write_bytes(bytes(raw))
    with pytest.raises(DatasetFormatError, match="magic"):
        read_dataset(p)


def test_dataset_bad_version(tmp_path):
    p = tmp_path / "ver.spl"
    write_dataset(_demo_batch(1), p)
    raw = bytearray(p.read_bytes())
    raw[4:8] = (99).to_bytes(4, "little")
    p.write_bytes(bytes(raw))
    with pytest.raises(DatasetFormatError, match="version"):
        read_dataset(p)


def test_dataset_truncated(tmp_path):
    p = tmp_path / "trunc.spl"
    write_dataset(_demo_batch(1), p)
    raw = p.read_bytes()
    p.write_bytes(raw[: len(raw) - 100])
    with pytest.raises(DatasetFormatError, match="truncated"):
        read_dataset(p)


def test_dataset_mixed_dims_rejected(tmp_path):
    small = _demo_batch(1)
    big_cfg = TaskConfig(width=48, height=48, n_views=1)
    big = scripted_expert(sample_task(big_cfg, RngStream(91, 0)), RngStream(91, 1))
    with pytest.raises(DatasetFormatError):
        write_dataset(small + [big], tmp_path / "mixed.spl")
