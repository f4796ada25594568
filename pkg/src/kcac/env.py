"""Deterministic kinematic two-block world.

One point effector moves by bounded Cartesian steps and carries block 2 when
its grip is engaged within ``grasp_radius`` of the block center. Block 1
starts on its goal. Released blocks settle instantly onto the highest support
under them, and a carried block that runs into block 1 shoves block 1
sideways, which is how careless manipulation knocks it off its goal.

The arena is ``[-a, a] x [-a, a] x [0, 2a]`` with the floor at ``z = 0``.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .errors import ConfigurationError, InvalidActionError, KcacError
from .rewards import AlignedBox, RewardContext, WorldSnapshot, goal_overlap

OBS_DIM = 20
ACT_DIM = 4


class Block1Init(enum.Enum):
    AT_GOAL = "at_goal"
    SAMPLED = "sampled"


class Dimensionality(enum.Enum):
    D2 = "2d"
    D3 = "3d"


@dataclass(frozen=True)
class EnvConfig:
    arena_half_extent: float = 0.25
    block_edge: float = 0.065
    max_steps: int = 200
    action_max_delta: float = 0.01
    grasp_radius: float = 0.02
    block1_init: Block1Init = Block1Init.AT_GOAL
    spawn_region: AlignedBox | None = None
    dimensionality: Dimensionality = Dimensionality.D3
    goal_xy: tuple[float, float] = (0.0, 0.0)
    control_dt: float = 0.1
    normalize_observations: bool = True

    def __post_init__(self):
        if not isinstance(self.block1_init, Block1Init):
            object.__setattr__(self, "block1_init", Block1Init(self.block1_init))
        if not isinstance(self.dimensionality, Dimensionality):
            object.__setattr__(self, "dimensionality", Dimensionality(str(self.dimensionality).lower()))
        object.__setattr__(self, "goal_xy", tuple(float(v) for v in self.goal_xy))
        for name in ("arena_half_extent", "block_edge", "action_max_delta", "grasp_radius", "control_dt"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigurationError(f"must be a positive length, got {v!r}", name)
        if self.grasp_radius >= self.block_edge:
            raise ConfigurationError("grasp_radius must be smaller than block_edge", "grasp_radius")
        if int(self.max_steps) != self.max_steps or self.max_steps < 1:
            raise ConfigurationError(f"must be an integer >= 1, got {self.max_steps!r}", "max_steps")
        if self.spawn_region is None:
            a = self.arena_half_extent
            object.__setattr__(
                self, "spawn_region", AlignedBox((0.0, 0.0, 0.5 * a), (0.8 * a, 0.8 * a, 0.4 * a))
            )

    @property
    def half_edge(self) -> float:
        return 0.5 * self.block_edge

    @property
    def arena_lower(self) -> np.ndarray:
        a = self.arena_half_extent
        return np.array([-a, -a, 0.0])

    @property
    def arena_upper(self) -> np.ndarray:
        a = self.arena_half_extent
        return np.array([a, a, 2.0 * a])

    def validate_spawn(self) -> None:
        r = self.spawn_region
        if np.any(r.lower < self.arena_lower) or np.any(r.upper > self.arena_upper):
            raise ConfigurationError("spawn region extends outside the arena", "spawn_region")
        for k in range(2):
            if abs(self.goal_xy[k]) + self.half_edge > self.arena_half_extent:
                raise ConfigurationError("goal footprint extends outside the arena", "goal_xy")

    def to_dict(self) -> dict:
        return {
            "arena_half_extent": self.arena_half_extent,
            "block_edge": self.block_edge,
            "max_steps": self.max_steps,
            "action_max_delta": self.action_max_delta,
            "grasp_radius": self.grasp_radius,
            "block1_init": self.block1_init.value,
            "spawn_region": self.spawn_region.to_dict(),
            "dimensionality": self.dimensionality.value,
            "goal_xy": list(self.goal_xy),
            "control_dt": self.control_dt,
            "normalize_observations": self.normalize_observations,
        }

    @classmethod
    def from_dict(cls, d: dict | None, path: str = "env") -> EnvConfig:
        d = dict(d or {})
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown fields {sorted(unknown)}", path)
        if isinstance(d.get("spawn_region"), dict):
            try:
                d["spawn_region"] = AlignedBox(**d["spawn_region"])
            except Exception as e:
                raise ConfigurationError(str(e), f"{path}.spawn_region") from None
        try:
            cfg = cls(**d)
        except ConfigurationError as e:
            raise ConfigurationError(str(e.args[0]).split(": ", 1)[-1], f"{path}.{e.path}" if e.path else path) from None
        except (TypeError, ValueError) as e:
            raise ConfigurationError(str(e), path) from None
        return cfg


@dataclass(frozen=True)
class ActionCommand:
    delta: np.ndarray
    grip: float = -1.0

    @classmethod
    def from_unit(cls, a, cfg: EnvConfig) -> ActionCommand:
        """Map a policy output in ``[-1, 1]^4`` to a command."""
        a = np.asarray(a, dtype=np.float64)
        return cls(a[:3] * cfg.action_max_delta, float(a[3]))


@dataclass(frozen=True)
class SuccessReport:
    frac_top: float
    frac_bottom: float
    frac_overall: float


class EpisodeOverError(KcacError):
    pass


@dataclass(frozen=True)
class BlockWorldState:
    cfg: EnvConfig
    snapshot: WorldSnapshot
    init: WorldSnapshot
    carried: bool = False
    carry_offset: np.ndarray | None = None
    rng_state: dict = field(default_factory=dict, compare=False)

    @property
    def step_index(self) -> int:
        return self.snapshot.step_index


# --------------------------------------------------------------------------
# reset
# --------------------------------------------------------------------------

_MAX_REJECTIONS = 10_000
_SEPARATION = 1e-9


def _footprints_overlap(c1, c2, h: float, margin: float = 0.0) -> bool:
    return abs(c1[0] - c2[0]) < 2 * h + margin and abs(c1[1] - c2[1]) < 2 * h + margin


def reset(cfg: EnvConfig, seed: int) -> BlockWorldState:
    cfg.validate_spawn()
    rng = np.random.default_rng(seed)
    h = cfg.half_edge
    region = cfg.spawn_region
    lo, hi = region.lower, region.upper
    flat = cfg.dimensionality is Dimensionality.D2
    gx, gy = cfg.goal_xy
    goal_1 = AlignedBox.cube((gx, gy, h), cfg.block_edge)
    goal_2 = AlignedBox.cube((gx, gy, 3 * h), cfg.block_edge)

    def floor_xy():
        xy = rng.uniform(lo[:2], hi[:2])
        if flat:
            xy[1] = gy
        return xy

    if cfg.block1_init is Block1Init.AT_GOAL:
        b1 = goal_1.center.copy()
    else:
        for _ in range(_MAX_REJECTIONS):
            xy = floor_xy()
            if not _footprints_overlap(xy, goal_1.center, h):
                break
        else:
            raise ConfigurationError("could not place block 1 away from its goal", "spawn_region")
        b1 = np.array([xy[0], xy[1], h])

    for _ in range(_MAX_REJECTIONS):
        xy = floor_xy()
        if not _footprints_overlap(xy, b1, h, margin=0.5 * h):
            break
    else:
        raise ConfigurationError("spawn region leaves no room for block 2", "spawn_region")
    b2 = np.array([xy[0], xy[1], h])

    eff = rng.uniform(lo, hi)
    if flat:
        eff[1] = gy
    snap = WorldSnapshot(
        effector=eff,
        effector_velocity=np.zeros(3),
        block_1=AlignedBox.cube(b1, cfg.block_edge),
        block_2=AlignedBox.cube(b2, cfg.block_edge),
        goal_1=goal_1,
        goal_2=goal_2,
        grip_engaged=False,
        step_index=0,
    )
    return BlockWorldState(cfg, snap, snap, False, None, rng.bit_generator.state)


# --------------------------------------------------------------------------
# dynamics
# --------------------------------------------------------------------------


def _rest_on(top: float, half: float) -> float:
    """Center height for a box of half-height ``half`` whose bottom sits at ``top``, never below it."""
    z = top + half
    while z - half < top:
        z = math.nextafter(z, math.inf)
    return z


def _overlap_extents(c1, h1, c2, h2) -> np.ndarray:
    return np.minimum(c1 + h1, c2 + h2) - np.maximum(c1 - h1, c2 - h2)


def _settle(b2: np.ndarray, b1: np.ndarray, h: float) -> np.ndarray:
    out = b2.copy()
    on_block = _footprints_overlap(b2, b1, h) and b2[2] >= b1[2]
    out[2] = _rest_on(b1[2] + h, h) if on_block else h
    return out


def _resolve_collision(b2: np.ndarray, b1: np.ndarray, h: float, flat: bool):
    """Separate a carried block 2 from block 1.

    Returns (block-2 lift, new block-1 center). A mostly-vertical contact from
    above stops block 2 on top of block 1; anything else pushes block 1 out
    along the horizontal axis of least penetration.
    """
    ov = _overlap_extents(b2, h, b1, h)
    if np.any(ov <= 0.0):
        return 0.0, b1
    axes = [0] if flat else [0, 1]
    k = min(axes, key=lambda i: ov[i])
    if ov[2] <= ov[k] and b2[2] >= b1[2]:
        return _rest_on(b1[2] + h, h) - b2[2], b1
    nb1 = b1.copy()
    if b1[k] >= b2[k]:
        face = b2[k] + h
        nb1[k] = face + h
        while nb1[k] - h < face:
            nb1[k] = math.nextafter(nb1[k], math.inf)
    else:
        face = b2[k] - h
        nb1[k] = face - h
        while nb1[k] + h > face:
            nb1[k] = math.nextafter(nb1[k], -math.inf)
    return 0.0, nb1


def _coerce_action(action) -> ActionCommand:
    if isinstance(action, ActionCommand):
        delta = np.asarray(action.delta, dtype=np.float64).reshape(-1)
        grip = action.grip
    else:
        arr = np.asarray(action, dtype=np.float64).reshape(-1)
        if arr.shape != (4,):
            raise InvalidActionError(f"action must have 4 entries, got {arr.shape}")
        delta, grip = arr[:3], arr[3]
    if delta.shape != (3,):
        raise InvalidActionError(f"delta must have 3 entries, got {delta.shape}")
    if not (np.all(np.isfinite(delta)) and math.isfinite(float(grip))):
        raise InvalidActionError("action has non-finite components")
    return ActionCommand(delta, float(grip))


def step(state: BlockWorldState, action) -> tuple[BlockWorldState, RewardContext]:
    """Advance one control step. ``action`` is an :class:`ActionCommand` or ``[dx, dy, dz, grip]`` in meters."""
    if is_terminal(state):
        raise EpisodeOverError("episode already reached max_steps")
    cmd = _coerce_action(action)
    cfg = state.cfg
    h = cfg.half_edge
    flat = cfg.dimensionality is Dimensionality.D2
    delta = np.clip(cmd.delta, -cfg.action_max_delta, cfg.action_max_delta)
    if flat:
        delta[1] = 0.0
    engaged = float(np.clip(cmd.grip, -1.0, 1.0)) > 0.0

    prev = state.snapshot
    eff = prev.effector.copy()
    b1 = prev.block_1.center.copy()
    b2 = prev.block_2.center.copy()
    carried, offset = state.carried, state.carry_offset

    if carried and not engaged:
        carried, offset = False, None
        b2 = _settle(b2, b1, h)
    elif not carried and engaged and np.linalg.norm(b2 - eff) <= cfg.grasp_radius:
        carried, offset = True, b2 - eff

    new_eff = np.clip(eff + delta, cfg.arena_lower, cfg.arena_upper)
    if carried:
        b2 = new_eff + offset
        if b2[2] < h:
            lift = h - b2[2]
            new_eff[2] += lift
            b2 = new_eff + offset
        lift, b1 = _resolve_collision(b2, b1, h, flat)
        if lift:
            new_eff[2] += lift
            b2 = new_eff + offset

    snap = WorldSnapshot(
        effector=new_eff,
        effector_velocity=(new_eff - eff) / cfg.control_dt,
        block_1=prev.block_1.moved_to(b1),
        block_2=prev.block_2.moved_to(b2),
        goal_1=prev.goal_1,
        goal_2=prev.goal_2,
        grip_engaged=engaged,
        step_index=prev.step_index + 1,
    )
    new_state = replace(state, snapshot=snap, carried=carried, carry_offset=offset)
    return new_state, RewardContext(prev, snap, state.init)


def observe(state: BlockWorldState) -> np.ndarray:
    """Fixed 20-entry layout: time left, effector, effector velocity, block 1, block 2, goal 1, goal 2, carried.

    With ``normalize_observations`` positions are mapped from the arena to
    ``[-1, 1]`` and velocities are divided by the largest per-axis speed.
    """
    s, cfg = state.snapshot, state.cfg
    remaining = max(0.0, 1.0 - s.step_index / cfg.max_steps)
    pos = [s.effector, s.block_1.center, s.block_2.center, s.goal_1.center, s.goal_2.center]
    vel = s.effector_velocity
    if cfg.normalize_observations:
        mid = 0.5 * (cfg.arena_lower + cfg.arena_upper)
        half = 0.5 * (cfg.arena_upper - cfg.arena_lower)
        pos = [(p - mid) / half for p in pos]
        vel = vel * (cfg.control_dt / cfg.action_max_delta)
    return np.concatenate([[remaining], pos[0], vel, *pos[1:], [1.0 if state.carried else 0.0]])


def fractional_success(state: BlockWorldState) -> SuccessReport:
    s = state.snapshot
    top = goal_overlap(s.block_2, s.goal_2)
    bottom = goal_overlap(s.block_1, s.goal_1)
    v1, v2 = s.block_1.volume, s.block_2.volume
    return SuccessReport(top, bottom, (v2 * top + v1 * bottom) / (v1 + v2))


def is_terminal(state: BlockWorldState) -> bool:
    return state.snapshot.step_index >= state.cfg.max_steps


# --------------------------------------------------------------------------
# convenience wrappers
# --------------------------------------------------------------------------


class BlockWorldEnv:
    """Stateful wrapper with a gym-like ``reset``/``step`` over unit-box actions."""

    obs_dim = OBS_DIM
    act_dim = ACT_DIM

    def __init__(self, cfg: EnvConfig | None = None):
        self.cfg = cfg or EnvConfig()
        self.cfg.validate_spawn()
        self.state: BlockWorldState | None = None

    def reset(self, seed: int) -> np.ndarray:
        self.state = reset(self.cfg, seed)
        return observe(self.state)

    def step(self, unit_action) -> tuple[np.ndarray, RewardContext, bool]:
        self.state, ctx = step(self.state, ActionCommand.from_unit(unit_action, self.cfg))
        return observe(self.state), ctx, is_terminal(self.state)

    def success(self) -> SuccessReport:
        return fractional_success(self.state)


def oracle_pilot(state: BlockWorldState, clearance: float = 0.02) -> ActionCommand:
    """Scripted pick-and-place: reach block 2, grip, lift clear, carry over goal 2, lower, release."""
    cfg, s = state.cfg, state.snapshot
    eff = s.effector
    b2 = s.block_2.center
    g2 = s.goal_2.center
    step_max = cfg.action_max_delta

    def toward(target, grip):
        return ActionCommand(np.clip(target - eff, -step_max, step_max), grip)

    if not state.carried:
        if goal_overlap(s.block_2, s.goal_2) > 0.999:
            return ActionCommand(np.zeros(3), -1.0)
        if np.linalg.norm(b2 - eff) <= cfg.grasp_radius:
            return ActionCommand(np.zeros(3), 1.0)
        return toward(b2, -1.0)
    off = state.carry_offset
    safe_z = s.block_1.upper[2] + cfg.half_edge + clearance
    aligned_xy = np.allclose(b2[:2], g2[:2], atol=1e-12)
    if not aligned_xy:
        if b2[2] < safe_z - 1e-12:
            return toward(np.array([eff[0], eff[1], safe_z - off[2]]), 1.0)
        return toward(np.array([g2[0] - off[0], g2[1] - off[1], eff[2]]), 1.0)
    if abs(b2[2] - g2[2]) > 1e-12:
        return toward(g2 - off, 1.0)
    return ActionCommand(np.zeros(3), -1.0)


def run_pilot(cfg: EnvConfig, seed: int) -> BlockWorldState:
    state = reset(cfg, seed)
    while not is_terminal(state):
        state, _ = step(state, oracle_pilot(state))
    return state


def write_trajectory(path: str | Path, snapshots: Iterable[WorldSnapshot]) -> None:
    """JSON-lines dump, one snapshot per line."""
    with open(path, "w") as fh:
        for snap in snapshots:
            fh.write(json.dumps(snap.to_dict(), sort_keys=True) + "\n")


def read_trajectory(path: str | Path) -> list[dict[str, Any]]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]
