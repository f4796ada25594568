"""The compiled and numpy kernels must agree, so the backend switch never changes results beyond rounding."""

from __future__ import annotations

import os
import subprocess
import sys

import numpy as np
import pytest

from kcac import kernels as K
from kcac._jit import HAVE_NUMBA

pytestmark = pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")

SHAPES = [(1, 20, 64), (7, 5, 3), (33, 64, 64), (256, 24, 8)]


@pytest.mark.parametrize("n,d,m", SHAPES)
def test_dense_forward(n, d, m, rng):
    x, W, b = rng.normal(size=(n, d)), rng.normal(size=(d, m)), rng.normal(size=m)
    np.testing.assert_allclose(K.dense_nb(x, W, b), K.dense_np(x, W, b), rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(K.dense_tanh_nb(x, W, b), K.dense_tanh_np(x, W, b), rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(K.dense_tanh_hybrid(x, W, b), K.dense_tanh_np(x, W, b), rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("n,d,m", SHAPES)
def test_dense_backward(n, d, m, rng):
    x, W, gz = rng.normal(size=(n, d)), rng.normal(size=(d, m)), rng.normal(size=(n, m))
    h = np.tanh(rng.normal(size=(n, m)))
    for a, b in zip(K.dense_backward_nb(x, W, gz), K.dense_backward_np(x, W, gz)):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)
    for a, b in zip(K.dense_tanh_backward_nb(x, W, h, gz), K.dense_tanh_backward_np(x, W, h, gz)):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("n", [1, 32, 33, 500])
def test_squashed_sample(n, rng):
    mu = rng.normal(size=(n, 4)) * 3
    ls = rng.uniform(-5, 2, size=(n, 4))
    noise = rng.normal(size=(n, 4))
    for a, b in zip(K.squashed_sample_nb(mu, ls, noise), K.squashed_sample_np(mu, ls, noise)):
        np.testing.assert_allclose(a, b, rtol=1e-11, atol=1e-11)
    for a, b in zip(K.squashed_sample_hybrid(mu, ls, noise), K.squashed_sample_np(mu, ls, noise)):
        np.testing.assert_allclose(a, b, rtol=1e-11, atol=1e-11)


def test_squashed_log_prob_stable_at_saturation():
    mu = np.array([[30.0, -30.0]])
    ls = np.zeros((1, 2))
    noise = np.zeros((1, 2))
    _, _, lp_nb = K.squashed_sample_nb(mu, ls, noise)
    _, _, lp_np = K.squashed_sample_np(mu, ls, noise)
    assert np.isfinite(lp_nb).all() and np.isfinite(lp_np).all()
    np.testing.assert_allclose(lp_nb, lp_np, rtol=1e-12)


def test_adam_step(rng):
    n = 1000
    p0, g = rng.normal(size=n), rng.normal(size=n)
    m0, v0 = rng.normal(size=n) * 0.1, rng.uniform(0, 1, n)
    results = []
    for fn in (K.adam_step_nb, K.adam_step_np):
        p, m, v = p0.copy(), m0.copy(), v0.copy()
        for t in range(1, 6):
            fn(p, g, m, v, 1e-3, 0.9, 0.999, 1e-8, t)
        results.append((p, m, v))
    for a, b in zip(*results):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-15)


@pytest.mark.parametrize("tau", [0.0, 1e-3, 0.5, 1.0])
def test_soft_update(tau, rng):
    online = rng.normal(size=300)
    t_nb, t_np = rng.normal(size=300), None
    t_np = t_nb.copy()
    K.soft_update_nb(t_nb, online, tau)
    K.soft_update_np(t_np, online, tau)
    assert np.array_equal(t_nb, t_np)


def test_box_iou(rng):
    for _ in range(500):
        c1, c2 = rng.uniform(-0.1, 0.1, 3), rng.uniform(-0.1, 0.1, 3)
        h1, h2 = rng.uniform(0.005, 0.1, 3), rng.uniform(0.005, 0.1, 3)
        assert K.box_iou_nb(c1, h1, c2, h2) == pytest.approx(K.box_iou_np(c1, h1, c2, h2), rel=1e-13, abs=1e-15)
    c, h = np.array([0.1, 0.2, 0.3]), np.full(3, 0.0325)
    assert K.box_iou_nb(c, h, c, h) == 1.0 == K.box_iou_np(c, h, c, h)


def _short_training_blob(disable: str) -> str:
    code = (
        "from kcac.curriculum import *\n"
        "from kcac.sac import SACSettings\n"
        "from dataclasses import replace\n"
        "t = builtin_tasks()['grasp']\n"
        "p = replace(preset_params('lr_1e-4'), batch_size=16)\n"
        "r = run_direct(t, p, 3, 0, learner_factory=sac_factory(SACSettings(hidden=(16, 16), learning_starts=20)))\n"
        "import kcac._jit as j; print(j.backend_name()); print([round(x.episodic_reward, 6) for x in r.rows])\n"
    )
    env = dict(os.environ, KCAC_DISABLE_NUMBA=disable)
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return out.stdout


def test_backend_flag_switches_and_training_agrees():
    a = _short_training_blob("0").splitlines()
    b = _short_training_blob("1").splitlines()
    assert a[0] == "numba" and b[0] == "numpy"
    assert a[1] == b[1]
