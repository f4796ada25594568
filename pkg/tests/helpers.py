"""Snapshot and context builders shared by the tests."""

from __future__ import annotations

import math

import numpy as np

from kcac.env import EnvConfig
from kcac.rewards import AlignedBox, RewardContext, WorldSnapshot

EDGE = 0.065
H = EDGE / 2


def cube(center, edge=EDGE):
    return AlignedBox.cube(center, edge)


def snapshot(
    effector=(0.0, 0.0, 0.2),
    block_1=(0.0, 0.0, H),
    block_2=(0.1, 0.0, H),
    velocity=(0.0, 0.0, 0.0),
    step_index=0,
    grip=False,
    goal_1=(0.0, 0.0, H),
    goal_2=(0.0, 0.0, 3 * H),
) -> WorldSnapshot:
    return WorldSnapshot(
        effector=effector,
        effector_velocity=velocity,
        block_1=cube(block_1),
        block_2=cube(block_2),
        goal_1=cube(goal_1),
        goal_2=cube(goal_2),
        grip_engaged=grip,
        step_index=step_index,
    )


def context(prev_kw=None, curr_kw=None, init_kw=None, step=5) -> RewardContext:
    prev_kw, curr_kw = dict(prev_kw or {}), dict(curr_kw or {})
    init = snapshot(**dict(init_kw or prev_kw, step_index=0))
    return RewardContext(snapshot(**prev_kw, step_index=step), snapshot(**curr_kw, step_index=step + 1), init)


def random_snapshot(rng: np.random.Generator, step_index: int) -> WorldSnapshot:
    def pos(z_lo=H):
        return (rng.uniform(-0.25, 0.25), rng.uniform(-0.25, 0.25), rng.uniform(z_lo, 0.4))

    return WorldSnapshot(
        effector=pos(0.0),
        effector_velocity=rng.normal(0.0, 0.1, 3),
        block_1=cube(pos()),
        block_2=cube(pos()),
        goal_1=cube((0.0, 0.0, H)),
        goal_2=cube((0.0, 0.0, 3 * H)),
        step_index=step_index,
    )


def random_context(rng: np.random.Generator) -> RewardContext:
    k = int(rng.integers(0, 150))
    init = random_snapshot(rng, 0)
    return RewardContext(random_snapshot(rng, k), random_snapshot(rng, k + 1), init)


def dist(a, b) -> float:
    return math.sqrt(sum((float(x) - float(y)) ** 2 for x, y in zip(a, b)))


def toy_env(**kw) -> EnvConfig:
    base = dict(
        arena_half_extent=0.15,
        max_steps=40,
        action_max_delta=0.02,
        grasp_radius=0.04,
        dimensionality="2d",
        spawn_region=AlignedBox((0.0, 0.0, 0.04), (0.1, 0.1, 0.02)),
    )
    base.update(kw)
    return EnvConfig(**base)


ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    """Store one acceptance result; printed by the conftest terminal-summary hook."""
    ACCEPTANCE_LINES.append(line)
    print(line)
