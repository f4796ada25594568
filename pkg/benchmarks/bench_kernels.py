"""Time the numba kernels against their numpy twins, then a short training loop per backend.

    python3 benchmarks/bench_kernels.py [--repeat 200] [--json out.json]

The kernel table calls ``*_nb`` and ``*_np`` directly in one process. The
end-to-end rows start a fresh interpreter per backend, because the backend is
chosen once at import from ``KCAC_DISABLE_NUMBA``.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from kcac import kernels as K

E2E = """
import time
from dataclasses import replace
from kcac.curriculum import builtin_tasks, preset_params, run_direct, sac_factory
from kcac.experiment import ExperimentConfig
from kcac.sac import SACSettings
cfg = ExperimentConfig.load({config!r})
task = cfg.target_task
p = replace(preset_params('lr_1e-4'), batch_size={batch})
f = sac_factory(SACSettings(learning_starts=200))
run_direct(task, p, 6, 99, learner_factory=f)  # warm-up and JIT compile
t = time.perf_counter()
rec = run_direct(task, p, {episodes}, 0, learner_factory=f)
steps = {episodes} * task.env.max_steps
print(steps / (time.perf_counter() - t))
"""


def best_of(fn, args, repeat: int) -> float:
    fn(*[a.copy() if isinstance(a, np.ndarray) else a for a in args])  # compile / warm cache
    times = []
    for _ in range(repeat):
        fresh = [a.copy() if isinstance(a, np.ndarray) else a for a in args]
        t = time.perf_counter()
        fn(*fresh)
        times.append(time.perf_counter() - t)
    return float(np.median(times))


def kernel_cases(rng: np.random.Generator):
    for n in (1, 128, 1024):
        x, W, b = rng.normal(size=(n, 64)), rng.normal(size=(64, 64)), rng.normal(size=64)
        h = np.tanh(x @ W + b)
        yield f"dense_tanh n={n}", K.dense_tanh_nb, K.dense_tanh_np, (x, W, b)
        yield f"dense_tanh_backward n={n}", K.dense_tanh_backward_nb, K.dense_tanh_backward_np, (x, W, h, h)
        mu, ls, e = rng.normal(size=(n, 4)), rng.uniform(-3, 1, (n, 4)), rng.normal(size=(n, 4))
        yield f"squashed_sample n={n}", K.squashed_sample_nb, K.squashed_sample_np, (mu, ls, e)
    p = rng.normal(size=9000)
    yield "adam_step 9k", K.adam_step_nb, K.adam_step_np, (p, p * 0.1, np.zeros_like(p), np.ones_like(p), 1e-3, 0.9, 0.999, 1e-8, 3)
    yield "soft_update 9k", K.soft_update_nb, K.soft_update_np, (p.copy(), p, 5e-3)
    c, hh = rng.normal(size=3), np.full(3, 0.03)
    yield "box_iou", K.box_iou_nb, K.box_iou_np, (c, hh, c + 0.01, hh)


def end_to_end(disable: str, episodes: int, batch: int) -> float:
    config = str(Path(__file__).resolve().parents[1] / "configs" / "toy_direct.json")
    code = E2E.format(config=config, episodes=episodes, batch=batch)
    env = dict(os.environ, KCAC_DISABLE_NUMBA=disable)
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip().splitlines()[-1])


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--episodes", type=int, default=20, help="episodes per end-to-end run")
    ap.add_argument("--batch", type=int, default=128)
    ap.add_argument("--skip-e2e", action="store_true")
    ap.add_argument("--json", type=Path)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    rows = []
    print(f"{'kernel':28s} {'numba us':>10s} {'numpy us':>10s} {'speedup':>8s}")
    for name, nb, npf, a in kernel_cases(rng):
        t_nb, t_np = best_of(nb, a, args.repeat), best_of(npf, a, args.repeat)
        rows.append({"kernel": name, "numba_us": t_nb * 1e6, "numpy_us": t_np * 1e6})
        print(f"{name:28s} {t_nb * 1e6:10.2f} {t_np * 1e6:10.2f} {t_np / t_nb:7.2f}x")

    result = {"kernels": rows}
    if not args.skip_e2e:
        sps = {b: end_to_end(flag, args.episodes, args.batch) for b, flag in (("numba", "0"), ("numpy", "1"))}
        result["env_steps_per_s"] = sps
        print(f"\ntraining loop (toy env, batch {args.batch}): numba {sps['numba']:.0f} steps/s, "
              f"numpy {sps['numpy']:.0f} steps/s ({sps['numba'] / sps['numpy']:.2f}x)")
    if args.json:
        args.json.write_text(json.dumps(result, indent=2) + "\n")


if __name__ == "__main__":
    main()
