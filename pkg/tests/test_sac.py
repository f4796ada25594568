from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest

from kcac.curriculum import preset_params
from kcac.errors import ConfigurationError, TransferError
from kcac.sac import (
    LOG_STD_MAX,
    LOG_STD_MIN,
    LearnerParams,
    MLP,
    ParamBlob,
    ReplayBuffer,
    SACLearner,
    SACSettings,
    Transition,
    critic_loss_grad,
    grad_check,
)

SMALL = SACSettings(hidden=(16, 16), learning_starts=0)


def params(**kw) -> LearnerParams:
    base = LearnerParams(3e-4, 5e-3, 0.2, 32, 10_000, 0.95, "auto")
    return replace(base, **kw)


def filled(learner: SACLearner, n: int, seed: int = 0) -> SACLearner:
    rng = np.random.default_rng(seed)
    for _ in range(n):
        o = rng.uniform(-1, 1, learner.obs_dim)
        a = rng.uniform(-1, 1, learner.act_dim)
        learner.observe_transition(Transition(o, a, float(o[0] - a[0] ** 2), rng.uniform(-1, 1, learner.obs_dim), False))
    return learner


# -- params -----------------------------------------------------------------


def test_params_validation():
    with pytest.raises(ConfigurationError):
        params(learning_rate=0.0)
    with pytest.raises(ConfigurationError):
        params(tau=1.5)
    with pytest.raises(ConfigurationError):
        params(discount=1.0)
    with pytest.raises(ConfigurationError):
        params(batch_size=64, buffer_size=32)
    with pytest.raises(ConfigurationError):
        params(target_entropy="manual")


def test_auto_target_entropy():
    assert params().resolved_target_entropy(4) == -4.0
    assert params(target_entropy=-1.5).resolved_target_entropy(4) == -1.5


# -- construction and acting ----------------------------------------------------


def test_same_seed_same_initial_blob():
    a = SACLearner(5, 2, params(), 11, SMALL).export_params()
    b = SACLearner(5, 2, params(), 11, SMALL).export_params()
    assert a.to_bytes() == b.to_bytes()
    c = SACLearner(5, 2, params(), 12, SMALL).export_params()
    assert c.theta_hash() != a.theta_hash()


def test_targets_start_as_copies_and_temperature_from_params():
    L = SACLearner(5, 2, params(entropy_coeff=0.3), 0, SMALL)
    assert np.array_equal(L.q1.flat, L.q1_target.flat)
    assert np.array_equal(L.q2.flat, L.q2_target.flat)
    assert L.alpha == pytest.approx(0.3, rel=1e-15)


def test_actions_bounded_and_deterministic_mode_repeatable():
    L = SACLearner(5, 3, params(), 0, SMALL)
    rng = np.random.default_rng(0)
    for _ in range(200):
        o = rng.normal(0, 50, 5)
        a = L.select_action(o)
        assert a.shape == (3,) and np.all(np.abs(a) <= 1.0)
    o = rng.normal(size=5)
    assert np.array_equal(L.select_action(o, True), L.select_action(o, True))


def test_stochastic_sample_reproducible_across_instances():
    o = np.linspace(-1, 1, 5)
    a = SACLearner(5, 2, params(), 4, SMALL).select_action(o)
    b = SACLearner(5, 2, params(), 4, SMALL).select_action(o)
    assert np.array_equal(a, b)


def test_non_finite_observation_rejected():
    L = SACLearner(5, 2, params(), 0, SMALL)
    with pytest.raises(ValueError):
        L.select_action(np.array([0, 0, np.inf, 0, 0]))
    with pytest.raises(ValueError):
        L.select_action(np.zeros(4))


def test_log_prob_matches_sampler():
    L = SACLearner(3, 2, params(), 0, SMALL)
    o = np.array([[0.1, -0.3, 0.7]])
    from kcac import kernels
    from kcac.sac import actor_head

    mu, ls, _ = actor_head(L.actor(o), 2)
    noise = np.array([[0.3, -0.4]])
    a, _, logp = kernels.squashed_sample(mu, ls, noise)
    assert L.log_prob(o, a)[0] == pytest.approx(logp[0], abs=1e-8)


def test_log_prob_is_a_density():
    # 1-D squashed Gaussian integrates to one over (-1, 1)
    L = SACLearner(1, 1, params(), 3, SMALL)
    xs = np.linspace(-1 + 1e-7, 1 - 1e-7, 200_001)
    dens = np.exp(L.log_prob(np.zeros((xs.size, 1)), xs[:, None]))
    integral = float(np.sum(0.5 * (dens[1:] + dens[:-1]) * np.diff(xs)))
    assert integral == pytest.approx(1.0, abs=2e-3)


def test_log_std_range():
    from kcac.sac import _squash_log_std

    ls, _ = _squash_log_std(np.array([-1e3, 0.0, 1e3]))
    assert ls[0] == pytest.approx(LOG_STD_MIN) and ls[2] == pytest.approx(LOG_STD_MAX)


# -- replay -----------------------------------------------------------------


def _t(i: int) -> Transition:
    return Transition(np.full(2, float(i)), np.zeros(1), float(i), np.zeros(2))


def test_buffer_fifo_eviction():
    buf = ReplayBuffer(2, 2, 1, np.random.default_rng(0))
    for i in range(3):
        buf.add(_t(i))
    assert len(buf) == 2
    assert [buf[k].reward for k in range(2)] == [1.0, 2.0]


def test_buffer_size_below_capacity():
    buf = ReplayBuffer(100, 2, 1, np.random.default_rng(0))
    for i in range(7):
        buf.add(_t(i))
    assert len(buf) == 7 and buf[0].reward == 0.0


def test_buffer_evicts_exactly_first_inserted():
    buf = ReplayBuffer(5, 2, 1, np.random.default_rng(0))
    for i in range(5):
        buf.add(_t(i))
    before = {buf[k].reward for k in range(5)}
    buf.add(_t(99))
    after = {buf[k].reward for k in range(5)}
    assert before - after == {0.0}


def test_buffer_sample_without_replacement_and_shape_check():
    buf = ReplayBuffer(50, 2, 1, np.random.default_rng(0))
    for i in range(10):
        buf.add(_t(i))
    _, _, rew, _, _ = buf.sample(10)
    assert sorted(rew) == list(map(float, range(10)))
    with pytest.raises(ValueError):
        buf.add(Transition(np.zeros(3), np.zeros(1), 0.0, np.zeros(2)))


# -- update -----------------------------------------------------------------


def test_update_not_ready_changes_nothing():
    L = SACLearner(4, 2, params(batch_size=32), 0, SACSettings(hidden=(8,), learning_starts=100))
    filled(L, 50)
    before = L.export_params().to_bytes()
    assert L.update() is None
    assert L.export_params().to_bytes() == before and L.updates == 0


def test_tau_one_copies_online_into_target():
    L = filled(SACLearner(4, 2, params(tau=1.0), 0, SMALL), 64)
    L.update()
    assert np.array_equal(L.q1_target.flat, L.q1.flat)
    assert np.array_equal(L.q2_target.flat, L.q2.flat)


def test_tau_zero_freezes_targets():
    L = filled(SACLearner(4, 2, params(tau=0.0), 0, SMALL), 64)
    t1, t2 = L.q1_target.flat.copy(), L.q2_target.flat.copy()
    for _ in range(5):
        L.update()
    assert np.array_equal(L.q1_target.flat, t1) and np.array_equal(L.q2_target.flat, t2)
    assert not np.array_equal(L.q1.flat, t1)


def test_target_tracking_exact():
    tau = 0.37
    L = filled(SACLearner(4, 2, params(tau=tau), 0, SMALL), 64)
    for _ in range(3):
        before = L.q1_target.flat.copy()
        L.update()
        want = (1.0 - tau) * before + tau * L.q1.flat
        assert np.array_equal(L.q1_target.flat, want)


def test_critic_overfits_one_batch():
    L = filled(SACLearner(4, 2, params(batch_size=32, learning_rate=1e-3), 0, SMALL), 32)
    obs, act, rew, _, _ = L.buffer.sample(32)
    losses = []
    for _ in range(50):
        loss, g = critic_loss_grad(L.q1, obs, act, rew)
        L.q1_opt.step(L.q1.flat, g)
        losses.append(loss)
    assert all(b < a for a, b in zip(losses, losses[1:]))


def test_update_deterministic():
    def run():
        L = filled(SACLearner(4, 2, params(), 9, SMALL), 200)
        reports = [L.update() for _ in range(20)]
        return L.export_params().to_bytes(), reports

    a, ra = run()
    b, rb = run()
    assert a == b and ra == rb


def test_learns_contextual_bandit():
    """One-step task with reward -(a - 0.5 * o)^2: the greedy action should track 0.5 * o."""
    rng = np.random.default_rng(0)
    p = LearnerParams(3e-3, 5e-3, 0.05, 64, 10_000, 0.5, "auto")
    L = SACLearner(1, 1, p, 0, SACSettings(hidden=(32, 32), learning_starts=256))
    for _ in range(2500):
        o = rng.uniform(-1, 1, 1)
        a = L.act(o)
        L.observe_transition(Transition(o, a, -float((a[0] - 0.5 * o[0]) ** 2), o, True))
        L.update()
    err = [abs(L.select_action(np.array([x]), True)[0] - 0.5 * x) for x in (-0.8, -0.3, 0.0, 0.4, 0.9)]
    assert max(err) < 0.1


# -- transfer ---------------------------------------------------------------


def test_export_import_round_trip_actions():
    src = filled(SACLearner(6, 2, params(), 1, SMALL), 100)
    for _ in range(10):
        src.update()
    dst = SACLearner(6, 2, params(), 99, SMALL)
    dst.import_params(src.export_params())
    assert dst.export_params().to_bytes() == src.export_params().to_bytes()
    obs = np.random.default_rng(0).normal(size=(10, 6))
    for o in obs:
        assert np.array_equal(src.select_action(o, True), dst.select_action(o, True))


def test_import_without_temperature_keeps_own():
    src = SACLearner(6, 2, params(entropy_coeff=0.5), 1, SMALL)
    dst = SACLearner(6, 2, params(entropy_coeff=1e-4), 2, SMALL)
    dst.import_params(src.export_params(), temperature=False)
    assert dst.alpha == pytest.approx(1e-4)
    assert dst.export_params().theta_hash() == src.export_params().theta_hash()


def test_import_mismatch_raises():
    src = SACLearner(6, 2, params(), 1, SMALL)
    with pytest.raises(TransferError):
        SACLearner(5, 2, params(), 1, SMALL).import_params(src.export_params())
    with pytest.raises(TransferError):
        SACLearner(6, 2, params(), 1, SACSettings(hidden=(8, 8))).import_params(src.export_params())
    blob = src.export_params()
    with pytest.raises(TransferError):
        SACLearner(6, 2, params(), 1, SMALL).import_params(replace(blob, version="other/9"))


def test_blob_file_round_trip(tmp_path):
    blob = SACLearner(6, 2, params(), 1, SMALL).export_params()
    path = blob.save(tmp_path / "x" / "stage0_ep1.params")
    back = ParamBlob.load(path)
    assert back.to_bytes() == blob.to_bytes() == path.read_bytes()
    assert back.sha256() == blob.sha256()
    assert back.log_temperature == blob.log_temperature
    with pytest.raises(TransferError):
        ParamBlob.from_bytes(b"garbage")


# -- gradient check --------------------------------------------------------------


def test_grad_check_passes():
    assert grad_check(1e-5) <= 1e-4


def test_grad_check_zero_network():
    assert grad_check(1e-5, zero_weights=True) == 0.0


def test_grad_check_catches_corrupted_gradient():
    err = grad_check(1e-5, perturb=lambda name, g: g * 1.5 if name == "actor" else g)
    assert err >= 1e-1
    err = grad_check(1e-5, perturb=lambda name, g: np.roll(g, 1) if name == "critic" else g)
    assert err >= 1e-1


def test_mlp_backward_matches_finite_difference():
    rng = np.random.default_rng(3)
    net = MLP((3, 5, 2), rng)
    x = rng.normal(size=(4, 3))
    w = rng.normal(size=(4, 2))
    out, acts = net.forward(x)
    g, gx = net.backward(acts, w)
    eps = 1e-6
    for i in range(net.n_params):
        old = net.flat[i]
        net.flat[i] = old + eps
        up = float(np.sum(net(x) * w))
        net.flat[i] = old - eps
        dn = float(np.sum(net(x) * w))
        net.flat[i] = old
        assert g[i] == pytest.approx((up - dn) / (2 * eps), rel=1e-5, abs=1e-8)


def test_divergence_free_long_run_small():
    L = filled(SACLearner(4, 2, preset_params("lr_1e-5").__class__(1e-3, 1e-3, 1e-3, 32, 1000, 0.95), 0, SMALL), 500)
    for _ in range(500):
        r = L.update()
        assert r.is_finite()
    assert math.isfinite(L.alpha)
