"""Compound reward functions for the two-block stacking family of tasks.

A :class:`CompoundReward` is an ordered list of weighted, optionally gated
components drawn from a fixed eight-kind taxonomy. Evaluation is pure: it
reads three world snapshots (episode start, previous step, current step) and
returns a per-component trace plus the total.

Distance-difference ("delta") components compare the current step against
the previous one, so a positive weight rewards growth and a negative weight
rewards shrinkage of the measured distance.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Union

import numpy as np

from . import kernels
from .errors import ConfigurationError, InvalidGeometryError

CONTACT_THRESHOLD = 0.02
DEFAULT_VELOCITY_WEIGHT = 0.005


def vec3(values) -> np.ndarray:
    """Validated float64 copy of a 3-vector."""
    arr = np.array(values, dtype=np.float64).reshape(-1)
    if arr.shape != (3,):
        raise InvalidGeometryError(f"expected 3 components, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidGeometryError(f"non-finite vector {arr!r}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class AlignedBox:
    center: np.ndarray
    half_extents: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "center", vec3(self.center))
        object.__setattr__(self, "half_extents", vec3(self.half_extents))
        if np.any(self.half_extents <= 0.0):
            raise InvalidGeometryError(f"half extents must be positive, got {self.half_extents}")

    @classmethod
    def cube(cls, center, edge: float) -> AlignedBox:
        return cls(center, np.full(3, 0.5 * edge))

    @property
    def volume(self) -> float:
        return float(8.0 * np.prod(self.half_extents))

    @property
    def lower(self) -> np.ndarray:
        return self.center - self.half_extents

    @property
    def upper(self) -> np.ndarray:
        return self.center + self.half_extents

    def moved_to(self, center) -> AlignedBox:
        return AlignedBox(center, self.half_extents)

    def __eq__(self, other):
        if not isinstance(other, AlignedBox):
            return NotImplemented
        return bool(
            np.array_equal(self.center, other.center)
            and np.array_equal(self.half_extents, other.half_extents)
        )

    __hash__ = None

    def to_dict(self) -> dict:
        return {"center": self.center.tolist(), "half_extents": self.half_extents.tolist()}


def goal_overlap(block: AlignedBox, goal: AlignedBox) -> float:
    """Intersection-over-union of two axis-aligned boxes, by volume."""
    return kernels.box_iou(block.center, block.half_extents, goal.center, goal.half_extents)


BODY_NAMES = ("effector", "block_1", "block_2", "goal_1", "goal_2")


@dataclass(frozen=True, eq=False)
class WorldSnapshot:
    effector: np.ndarray
    effector_velocity: np.ndarray
    block_1: AlignedBox
    block_2: AlignedBox
    goal_1: AlignedBox
    goal_2: AlignedBox
    grip_engaged: bool = False
    step_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "effector", vec3(self.effector))
        object.__setattr__(self, "effector_velocity", vec3(self.effector_velocity))
        if self.step_index < 0:
            raise ValueError("step_index must be >= 0")

    def block(self, k: int) -> AlignedBox:
        return self.block_1 if k == 1 else self.block_2

    def goal(self, k: int) -> AlignedBox:
        return self.goal_1 if k == 1 else self.goal_2

    def position(self, name: str) -> np.ndarray:
        if name == "effector":
            return self.effector
        return getattr(self, name).center

    def __eq__(self, other):
        if not isinstance(other, WorldSnapshot):
            return NotImplemented
        return (
            np.array_equal(self.effector, other.effector)
            and np.array_equal(self.effector_velocity, other.effector_velocity)
            and self.block_1 == other.block_1
            and self.block_2 == other.block_2
            and self.goal_1 == other.goal_1
            and self.goal_2 == other.goal_2
            and self.grip_engaged == other.grip_engaged
            and self.step_index == other.step_index
        )

    __hash__ = None

    def to_dict(self) -> dict:
        return {
            "step_index": self.step_index,
            "effector": self.effector.tolist(),
            "effector_velocity": self.effector_velocity.tolist(),
            "block_1": self.block_1.to_dict(),
            "block_2": self.block_2.to_dict(),
            "goal_1": self.goal_1.to_dict(),
            "goal_2": self.goal_2.to_dict(),
            "grip_engaged": bool(self.grip_engaged),
        }


@dataclass(frozen=True)
class RewardContext:
    prev: WorldSnapshot
    curr: WorldSnapshot
    init: WorldSnapshot

    def __post_init__(self):
        if self.prev.step_index + 1 != self.curr.step_index:
            raise ValueError(
                f"prev/curr steps must be consecutive, got {self.prev.step_index} and {self.curr.step_index}"
            )
        if self.init.step_index != 0:
            raise ValueError("init snapshot must be the step-0 snapshot")


class ComponentKind(enum.Enum):
    """The eight reward terms, in canonical vector order."""

    END_EFFECTOR_APPROACH = "EndEffectorApproach"
    BLOCK_DISPLACEMENT_FROM_INIT = "BlockDisplacementFromInit"
    VERTICAL_TO_GOAL = "VerticalToGoal"
    GOAL1_OVERLAP = "Goal1Overlap"
    GOAL2_OVERLAP = "Goal2Overlap"
    EFFECTOR_BLOCK_PROXIMITY = "EffectorBlockProximity"
    HORIZONTAL_TO_GOAL = "HorizontalToGoal"
    VELOCITY_SMOOTHNESS = "VelocitySmoothness"

    @property
    def short(self) -> str:
        return _SHORT_NAMES[self]

    @classmethod
    def parse(cls, name: str) -> ComponentKind:
        key = str(name)
        for kind in cls:
            if key in (kind.value, kind.name, kind.short, "R_" + kind.short):
                return kind
        raise ConfigurationError(f"unknown component kind {name!r}")


_SHORT_NAMES = {
    ComponentKind.END_EFFECTOR_APPROACH: "end",
    ComponentKind.BLOCK_DISPLACEMENT_FROM_INIT: "move",
    ComponentKind.VERTICAL_TO_GOAL: "vert",
    ComponentKind.GOAL1_OVERLAP: "goal_1",
    ComponentKind.GOAL2_OVERLAP: "goal_2",
    ComponentKind.EFFECTOR_BLOCK_PROXIMITY: "dist",
    ComponentKind.HORIZONTAL_TO_GOAL: "hori",
    ComponentKind.VELOCITY_SMOOTHNESS: "vel",
}

CANONICAL_ORDER = tuple(ComponentKind)


# --------------------------------------------------------------------------
# gates
# --------------------------------------------------------------------------


def _check_pair(pair) -> tuple[str, str]:
    pair = tuple(pair)
    if len(pair) != 2 or any(p not in BODY_NAMES for p in pair):
        raise ConfigurationError(f"subject pair must name two of {BODY_NAMES}, got {pair!r}")
    return pair


def _check_threshold(threshold) -> float:
    threshold = float(threshold)
    if not (math.isfinite(threshold) and threshold > 0.0):
        raise ConfigurationError(f"gate threshold must be positive, got {threshold}")
    return threshold


@dataclass(frozen=True)
class DistanceAbove:
    pair: tuple[str, str]
    threshold: float

    def __post_init__(self):
        object.__setattr__(self, "pair", _check_pair(self.pair))
        object.__setattr__(self, "threshold", _check_threshold(self.threshold))

    def satisfied(self, snap: WorldSnapshot) -> bool:
        a, b = self.pair
        return float(np.linalg.norm(snap.position(a) - snap.position(b))) > self.threshold


@dataclass(frozen=True)
class DistanceBelow:
    pair: tuple[str, str]
    threshold: float

    def __post_init__(self):
        object.__setattr__(self, "pair", _check_pair(self.pair))
        object.__setattr__(self, "threshold", _check_threshold(self.threshold))

    def satisfied(self, snap: WorldSnapshot) -> bool:
        a, b = self.pair
        return float(np.linalg.norm(snap.position(a) - snap.position(b))) < self.threshold


@dataclass(frozen=True)
class BlockAboveGoalHeight:
    block: int = 2
    goal: int = 2

    def __post_init__(self):
        if self.block not in (1, 2) or self.goal not in (1, 2):
            raise ConfigurationError("block and goal ids must be 1 or 2")

    def satisfied(self, snap: WorldSnapshot) -> bool:
        return snap.block(self.block).center[2] - snap.goal(self.goal).center[2] > 0.0


@dataclass(frozen=True)
class AllOf:
    """Conjunction of gates (nested indicators)."""

    gates: tuple

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if not self.gates:
            raise ConfigurationError("AllOf needs at least one gate")

    def satisfied(self, snap: WorldSnapshot) -> bool:
        return all(g.satisfied(snap) for g in self.gates)


Gate = Union[DistanceAbove, DistanceBelow, BlockAboveGoalHeight, AllOf]


# --------------------------------------------------------------------------
# components
# --------------------------------------------------------------------------


def default_max_dist(arena_half_extent: float = 0.25) -> float:
    """Diagonal of the ``[-a, a]^2 x [0, 2a]`` arena."""
    return 2.0 * arena_half_extent * math.sqrt(3.0)


@dataclass(frozen=True)
class ProximityConfig:
    min_dist: float = CONTACT_THRESHOLD
    max_dist: float = default_max_dist()

    def __post_init__(self):
        if not (0.0 < self.min_dist < self.max_dist and math.isfinite(self.max_dist)):
            raise ConfigurationError(
                f"need 0 < min_dist < max_dist, got {self.min_dist}, {self.max_dist}"
            )


_DELTA_KINDS = {
    ComponentKind.END_EFFECTOR_APPROACH,
    ComponentKind.BLOCK_DISPLACEMENT_FROM_INIT,
    ComponentKind.VERTICAL_TO_GOAL,
    ComponentKind.HORIZONTAL_TO_GOAL,
    ComponentKind.VELOCITY_SMOOTHNESS,
}
_GOAL_KINDS = {ComponentKind.GOAL1_OVERLAP, ComponentKind.GOAL2_OVERLAP}


@dataclass(frozen=True)
class RewardComponent:
    """One weighted term.

    ``block`` selects the subject block (1 or 2) of effector/block terms.
    ``dense`` turns a goal-overlap kind into the per-step change of the
    block-to-goal center distance, which is how the gated first-block branch
    of the baseline reward expresses "move block 1 towards goal 1".
    """

    kind: ComponentKind
    weight: float
    gate: Gate | None = None
    proximity: ProximityConfig | None = None
    block: int = 2
    dense: bool = False

    def __post_init__(self):
        if not isinstance(self.kind, ComponentKind):
            object.__setattr__(self, "kind", ComponentKind.parse(self.kind))
        w = float(self.weight)
        if not math.isfinite(w) or w == 0.0:
            raise ConfigurationError(f"{self.kind.value}: weight must be finite and nonzero, got {self.weight}")
        object.__setattr__(self, "weight", w)
        needs_prox = self.kind is ComponentKind.EFFECTOR_BLOCK_PROXIMITY
        if needs_prox and self.proximity is None:
            raise ConfigurationError("EffectorBlockProximity requires a proximity config")
        if not needs_prox and self.proximity is not None:
            raise ConfigurationError(f"{self.kind.value} does not take a proximity config")
        if self.block not in (1, 2):
            raise ConfigurationError(f"block must be 1 or 2, got {self.block}")
        if self.dense and self.kind not in _GOAL_KINDS:
            raise ConfigurationError("dense applies to goal-overlap kinds only")

    @property
    def gate_count(self) -> int:
        if self.gate is None:
            return 0
        if isinstance(self.gate, AllOf):
            return len(self.gate.gates)
        return 1


def _dist(a: np.ndarray, b: np.ndarray) -> float:
    return math.sqrt(float((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (a[2] - b[2]) ** 2))


def _xy_dist(a: np.ndarray, b: np.ndarray) -> float:
    return math.hypot(float(a[0] - b[0]), float(a[1] - b[1]))


def raw_term(c: RewardComponent, ctx: RewardContext) -> float:
    """Unweighted value of a component, ignoring its gate."""
    kind, k = c.kind, c.block
    prev, curr = ctx.prev, ctx.curr
    if kind is ComponentKind.END_EFFECTOR_APPROACH:
        return _dist(curr.block(k).center, curr.effector) - _dist(prev.block(k).center, prev.effector)
    if kind is ComponentKind.BLOCK_DISPLACEMENT_FROM_INIT:
        o_init = ctx.init.block(k).center
        return _dist(curr.block(k).center, o_init) - _dist(prev.block(k).center, o_init)
    if kind is ComponentKind.VERTICAL_TO_GOAL:
        gz = curr.goal(k).center[2]
        return abs(curr.block(k).center[2] - gz) - abs(prev.block(k).center[2] - gz)
    if kind in _GOAL_KINDS:
        g = 1 if kind is ComponentKind.GOAL1_OVERLAP else 2
        if c.dense:
            return _dist(curr.block(g).center, curr.goal(g).center) - _dist(
                prev.block(g).center, prev.goal(g).center
            )
        return goal_overlap(curr.block(g), curr.goal(g))
    if kind is ComponentKind.EFFECTOR_BLOCK_PROXIMITY:
        p = c.proximity
        if p is None:
            raise ConfigurationError("EffectorBlockProximity requires a proximity config")
        d = _dist(curr.block(k).center, curr.effector)
        return min(1.0, 1.0 - (d - p.min_dist) / (p.max_dist - p.min_dist))
    if kind is ComponentKind.HORIZONTAL_TO_GOAL:
        return _xy_dist(curr.block(k).center, curr.goal(k).center) - _xy_dist(
            prev.block(k).center, prev.goal(k).center
        )
    if kind is ComponentKind.VELOCITY_SMOOTHNESS:
        return _dist(curr.effector_velocity, prev.effector_velocity)
    raise ConfigurationError(f"unhandled kind {kind}")  # pragma: no cover


def eval_component(c: RewardComponent, ctx: RewardContext) -> tuple[bool, float]:
    if c.gate is not None and not c.gate.satisfied(ctx.curr):
        return False, 0.0
    return True, c.weight * raw_term(c, ctx)


@dataclass(frozen=True)
class RewardBreakdown:
    per_component: tuple[tuple[ComponentKind, bool, float], ...]
    total: float


@dataclass(frozen=True)
class CompoundReward:
    name: str
    components: tuple[RewardComponent, ...] = field(default_factory=tuple)

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        if not comps:
            raise ConfigurationError(f"compound reward {self.name!r} has no components")
        seen = set()
        for c in comps:
            key = (c.kind, c.gate)
            if key in seen:
                raise ConfigurationError(
                    f"{self.name}: duplicate component {c.kind.value} with gate {c.gate!r}"
                )
            seen.add(key)

    @property
    def gate_count(self) -> int:
        return sum(c.gate_count for c in self.components)

    def component(self, kind: ComponentKind) -> RewardComponent:
        """First component of ``kind``."""
        for c in self.components:
            if c.kind is kind:
                return c
        raise KeyError(kind)

    def scaled(self, factor: float) -> CompoundReward:
        return CompoundReward(self.name, tuple(replace(c, weight=c.weight * factor) for c in self.components))

    def __call__(self, ctx: RewardContext) -> float:
        return eval_compound(self, ctx).total


def eval_compound(r: CompoundReward, ctx: RewardContext) -> RewardBreakdown:
    rows = []
    total = 0.0
    for c in r.components:
        active, value = eval_component(c, ctx)
        rows.append((c.kind, active, value))
        if active:
            total += value
    return RewardBreakdown(tuple(rows), total)


# --------------------------------------------------------------------------
# builders
# --------------------------------------------------------------------------

K = ComponentKind


def baseline_stack_reward(velocity_weight: float = DEFAULT_VELOCITY_WEIGHT) -> CompoundReward:
    """Gated benchmark reward: block-1 branch until the effector touches it, then block 2."""
    far = DistanceAbove(("block_1", "effector"), CONTACT_THRESHOLD)
    near = DistanceBelow(("block_1", "effector"), CONTACT_THRESHOLD)
    return CompoundReward(
        "baseline_stack",
        (
            RewardComponent(K.END_EFFECTOR_APPROACH, -750.0, far, block=1),
            RewardComponent(K.GOAL1_OVERLAP, -250.0, far, dense=True),
            RewardComponent(K.END_EFFECTOR_APPROACH, -750.0, near, block=2),
            RewardComponent(K.VERTICAL_TO_GOAL, -250.0, near),
            RewardComponent(K.HORIZONTAL_TO_GOAL, -125.0, AllOf((near, BlockAboveGoalHeight(2, 2)))),
            RewardComponent(K.GOAL1_OVERLAP, 1.0),
            RewardComponent(K.GOAL2_OVERLAP, 1.0),
            RewardComponent(K.VELOCITY_SMOOTHNESS, velocity_weight),
        ),
    )


def refined_stack_reward(velocity_weight: float = DEFAULT_VELOCITY_WEIGHT) -> CompoundReward:
    return CompoundReward(
        "refined_stack",
        (
            RewardComponent(K.END_EFFECTOR_APPROACH, -750.0),
            RewardComponent(K.VERTICAL_TO_GOAL, -250.0),
            RewardComponent(K.HORIZONTAL_TO_GOAL, -125.0),
            RewardComponent(K.GOAL1_OVERLAP, 0.5),
            RewardComponent(K.GOAL2_OVERLAP, 1.0),
            RewardComponent(K.VELOCITY_SMOOTHNESS, velocity_weight),
        ),
    )


def grasp_reward(p: ProximityConfig | None = None) -> CompoundReward:
    if p is None:
        p = ProximityConfig()
    if not isinstance(p, ProximityConfig):
        raise ConfigurationError(f"expected ProximityConfig, got {type(p).__name__}")
    return CompoundReward(
        "grasp",
        (
            RewardComponent(K.END_EFFECTOR_APPROACH, -750.0),
            RewardComponent(K.BLOCK_DISPLACEMENT_FROM_INIT, -250.0),
            RewardComponent(K.GOAL1_OVERLAP, 0.5),
            RewardComponent(K.EFFECTOR_BLOCK_PROXIMITY, 1.0, proximity=p),
        ),
    )


def pick_reward() -> CompoundReward:
    return CompoundReward(
        "pick",
        (
            RewardComponent(K.END_EFFECTOR_APPROACH, -750.0),
            RewardComponent(K.VERTICAL_TO_GOAL, -250.0),
            RewardComponent(K.GOAL1_OVERLAP, 0.5),
            RewardComponent(K.GOAL2_OVERLAP, 1.0),
        ),
    )


BUILDERS: dict[str, Callable[..., CompoundReward]] = {
    "baseline_stack": baseline_stack_reward,
    "refined_stack": refined_stack_reward,
    "grasp": grasp_reward,
    "pick": pick_reward,
}


def build_reward(name: str, **kwargs) -> CompoundReward:
    try:
        builder = BUILDERS[name]
    except KeyError:
        raise ConfigurationError(f"unknown reward builder {name!r}; known: {sorted(BUILDERS)}") from None
    return builder(**kwargs)


# --------------------------------------------------------------------------
# presence vectors
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RewardVector:
    flags: tuple[int, ...]

    def __post_init__(self):
        flags = tuple(int(f) for f in self.flags)
        if len(flags) != len(CANONICAL_ORDER) or any(f not in (0, 1) for f in flags):
            raise ValueError(f"reward vector needs {len(CANONICAL_ORDER)} binary flags, got {self.flags!r}")
        object.__setattr__(self, "flags", flags)

    def as_array(self) -> np.ndarray:
        return np.array(self.flags, dtype=np.float64)

    def kinds(self) -> tuple[ComponentKind, ...]:
        return tuple(k for k, f in zip(CANONICAL_ORDER, self.flags) if f)

    def __iter__(self):
        return iter(self.flags)

    def __len__(self):
        return len(self.flags)


def reward_to_vector(r: CompoundReward) -> RewardVector:
    present = {c.kind for c in r.components}
    return RewardVector(tuple(1 if k in present else 0 for k in CANONICAL_ORDER))


# --------------------------------------------------------------------------
# config records
# --------------------------------------------------------------------------


def gate_to_dict(g: Gate) -> dict:
    if isinstance(g, DistanceAbove):
        return {"type": "distance_above", "pair": list(g.pair), "threshold": g.threshold}
    if isinstance(g, DistanceBelow):
        return {"type": "distance_below", "pair": list(g.pair), "threshold": g.threshold}
    if isinstance(g, BlockAboveGoalHeight):
        return {"type": "block_above_goal_height", "block": g.block, "goal": g.goal}
    return {"type": "all_of", "gates": [gate_to_dict(x) for x in g.gates]}


def gate_from_dict(d: Any, path: str = "gate") -> Gate:
    if not isinstance(d, dict) or "type" not in d:
        raise ConfigurationError("gate must be an object with a 'type'", path)
    t = d["type"]
    try:
        if t == "distance_above":
            return DistanceAbove(tuple(d["pair"]), d["threshold"])
        if t == "distance_below":
            return DistanceBelow(tuple(d["pair"]), d["threshold"])
        if t == "block_above_goal_height":
            return BlockAboveGoalHeight(int(d.get("block", 2)), int(d.get("goal", 2)))
        if t == "all_of":
            return AllOf(tuple(gate_from_dict(x, f"{path}.gates[{i}]") for i, x in enumerate(d["gates"])))
    except KeyError as e:
        raise ConfigurationError(f"missing field {e.args[0]!r}", path) from None
    except ConfigurationError as e:
        if e.path:
            raise
        raise ConfigurationError(str(e), path) from None
    raise ConfigurationError(f"unknown gate type {t!r}", path)


def component_to_dict(c: RewardComponent) -> dict:
    out: dict[str, Any] = {"kind": c.kind.value, "weight": c.weight}
    if c.gate is not None:
        out["gate"] = gate_to_dict(c.gate)
    if c.proximity is not None:
        out["proximity"] = {"min_dist": c.proximity.min_dist, "max_dist": c.proximity.max_dist}
    if c.block != 2:
        out["block"] = c.block
    if c.dense:
        out["dense"] = True
    return out


def component_from_dict(d: Any, path: str = "component") -> RewardComponent:
    if not isinstance(d, dict):
        raise ConfigurationError("component must be an object", path)
    unknown = set(d) - {"kind", "weight", "gate", "proximity", "block", "dense"}
    if unknown:
        raise ConfigurationError(f"unknown fields {sorted(unknown)}", path)
    try:
        kind = ComponentKind.parse(d["kind"])
        weight = d["weight"]
    except KeyError as e:
        raise ConfigurationError(f"missing field {e.args[0]!r}", path) from None
    except ConfigurationError as e:
        raise ConfigurationError(str(e), f"{path}.kind") from None
    gate = gate_from_dict(d["gate"], f"{path}.gate") if d.get("gate") is not None else None
    prox = None
    if d.get("proximity") is not None:
        try:
            prox = ProximityConfig(**d["proximity"])
        except (TypeError, ConfigurationError) as e:
            raise ConfigurationError(str(e), f"{path}.proximity") from None
    try:
        return RewardComponent(kind, weight, gate, prox, int(d.get("block", 2)), bool(d.get("dense", False)))
    except (ConfigurationError, TypeError, ValueError) as e:
        raise ConfigurationError(str(e), path) from None


def compound_to_dict(r: CompoundReward) -> dict:
    return {"name": r.name, "components": [component_to_dict(c) for c in r.components]}


def compound_from_dict(d: Any, path: str = "reward") -> CompoundReward:
    """Parse either a builder reference (string or ``{"builder": ...}``) or an explicit component list."""
    if isinstance(d, str):
        try:
            return build_reward(d)
        except ConfigurationError as e:
            raise ConfigurationError(str(e), path) from None
    if not isinstance(d, dict):
        raise ConfigurationError("reward must be a builder name or an object", path)
    if "builder" in d:
        kwargs = dict(d.get("args", {}))
        if "p" in kwargs and isinstance(kwargs["p"], dict):
            kwargs["p"] = ProximityConfig(**kwargs["p"])
        try:
            return build_reward(d["builder"], **kwargs)
        except (ConfigurationError, TypeError) as e:
            raise ConfigurationError(str(e), path) from None
    comps = d.get("components")
    if not isinstance(comps, list):
        raise ConfigurationError("'components' must be a list", path)
    parsed = tuple(component_from_dict(c, f"{path}.components[{i}]") for i, c in enumerate(comps))
    try:
        return CompoundReward(str(d.get("name", "custom")), parsed)
    except ConfigurationError as e:
        raise ConfigurationError(str(e), path) from None
