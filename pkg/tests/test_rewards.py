from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import EDGE, H, context, random_context, snapshot
from oracles import refined_total, voxel_iou
from kcac.errors import ConfigurationError, InvalidGeometryError
from kcac.rewards import (
    CANONICAL_ORDER,
    AlignedBox,
    AllOf,
    BlockAboveGoalHeight,
    ComponentKind as K,
    CompoundReward,
    DistanceAbove,
    DistanceBelow,
    ProximityConfig,
    RewardComponent,
    RewardContext,
    baseline_stack_reward,
    build_reward,
    compound_from_dict,
    compound_to_dict,
    eval_component,
    eval_compound,
    goal_overlap,
    grasp_reward,
    pick_reward,
    refined_stack_reward,
    reward_to_vector,
)


# -- geometry ---------------------------------------------------------------


def test_identical_boxes_overlap_exactly_one():
    b = AlignedBox((0.3, -0.2, 0.7), (0.5, 0.5, 0.5))
    assert goal_overlap(b, b) == 1.0


def test_disjoint_boxes_overlap_zero():
    a = AlignedBox((0, 0, 0), (0.5, 0.5, 0.5))
    b = AlignedBox((10, 0, 0), (0.5, 0.5, 0.5))
    assert goal_overlap(a, b) == 0.0


def test_half_shift_is_one_third():
    a = AlignedBox((0, 0, 0), (0.5, 0.5, 0.5))
    b = AlignedBox((0.5, 0, 0), (0.5, 0.5, 0.5))
    assert goal_overlap(a, b) == pytest.approx(0.5 / 1.5, abs=1e-15)
    assert voxel_iou(a.center, a.half_extents, b.center, b.half_extents) == pytest.approx(1 / 3, abs=1e-2)


def test_touching_faces_count_as_disjoint():
    a = AlignedBox((0, 0, 0), (0.5, 0.5, 0.5))
    assert goal_overlap(a, a.moved_to((1.0, 0, 0))) == 0.0


@pytest.mark.parametrize("half", [(0, 1, 1), (1, -0.1, 1)])
def test_degenerate_box_rejected(half):
    with pytest.raises(InvalidGeometryError):
        AlignedBox((0, 0, 0), half)


def test_non_finite_center_rejected():
    with pytest.raises(InvalidGeometryError):
        AlignedBox((0, math.nan, 0), (1, 1, 1))


boxes = st.tuples(
    st.tuples(*[st.floats(-2, 2)] * 3),
    st.tuples(*[st.floats(0.05, 1.5)] * 3),
)


@settings(max_examples=200, deadline=None)
@given(boxes, boxes, st.tuples(*[st.floats(-5, 5)] * 3))
def test_overlap_symmetric_bounded_translation_invariant(a, b, shift):
    A, B = AlignedBox(*a), AlignedBox(*b)
    v = goal_overlap(A, B)
    assert 0.0 <= v <= 1.0
    assert v == pytest.approx(goal_overlap(B, A), abs=1e-12)
    s = np.array(shift)
    moved = goal_overlap(A.moved_to(A.center + s), B.moved_to(B.center + s))
    assert moved == pytest.approx(v, abs=1e-9)
    # differences below float resolution of the box faces legitimately round to identical boxes
    if not (np.allclose(A.center, B.center, rtol=0, atol=1e-9) and np.allclose(A.half_extents, B.half_extents, rtol=0, atol=1e-9)):
        assert v < 1.0


# -- single components --------------------------------------------------------


def test_approach_component_hand_computed():
    # d goes from 0.10 to 0.08
    ctx = context({"effector": (0.1, 0.0, H + 0.10)}, {"effector": (0.1, 0.0, H + 0.08)})
    c = RewardComponent(K.END_EFFECTOR_APPROACH, -750.0)
    active, value = eval_component(c, ctx)
    assert active
    assert value == pytest.approx(15.0, abs=1e-9)


def test_unsatisfied_gate_reports_inactive_zero():
    ctx = context({"effector": (0.0, 0.0, 0.3)}, {"effector": (0.0, 0.0, 0.3)})
    for kind in K:
        prox = ProximityConfig() if kind is K.EFFECTOR_BLOCK_PROXIMITY else None
        c = RewardComponent(kind, 3.0, DistanceBelow(("block_1", "effector"), 0.02), prox)
        assert eval_component(c, ctx) == (False, 0.0)


def test_proximity_clamps_at_min_dist():
    p = ProximityConfig(0.02, 0.52)
    ctx = context({}, {"effector": (0.1, 0.0, H + 0.02)})
    assert eval_component(RewardComponent(K.EFFECTOR_BLOCK_PROXIMITY, 1.0, proximity=p), ctx) == (True, 1.0)
    closer = context({}, {"effector": (0.1, 0.0, H + 0.001)})
    assert eval_component(RewardComponent(K.EFFECTOR_BLOCK_PROXIMITY, 1.0, proximity=p), closer)[1] == 1.0


def test_proximity_zero_at_max_dist():
    p = ProximityConfig(0.02, 0.3)
    ctx = context({}, {"effector": (0.1, 0.0, H + 0.3)})
    _, v = eval_component(RewardComponent(K.EFFECTOR_BLOCK_PROXIMITY, 1.0, proximity=p), ctx)
    assert v == pytest.approx(0.0, abs=1e-12)


def test_proximity_requires_config():
    with pytest.raises(ConfigurationError):
        RewardComponent(K.EFFECTOR_BLOCK_PROXIMITY, 1.0)
    with pytest.raises(ConfigurationError):
        RewardComponent(K.END_EFFECTOR_APPROACH, 1.0, proximity=ProximityConfig())


@pytest.mark.parametrize("w", [0.0, math.inf, math.nan])
def test_weight_must_be_finite_nonzero(w):
    with pytest.raises(ConfigurationError):
        RewardComponent(K.GOAL2_OVERLAP, w)


def test_displacement_zero_for_stationary_block():
    ctx = context({"effector": (0.0, 0.0, 0.2)}, {"effector": (0.05, 0.0, 0.2)}, init_kw={"block_2": (0.1, 0.0, H)})
    v = eval_component(RewardComponent(K.BLOCK_DISPLACEMENT_FROM_INIT, -250.0), ctx)[1]
    assert v == 0.0


def test_displacement_uses_initial_position():
    ctx = context(
        {"block_2": (0.12, 0.0, H)}, {"block_2": (0.15, 0.0, H)}, init_kw={"block_2": (0.1, 0.0, H)}
    )
    v = eval_component(RewardComponent(K.BLOCK_DISPLACEMENT_FROM_INIT, -250.0), ctx)[1]
    assert v == pytest.approx(-250.0 * (0.05 - 0.02), abs=1e-12)


def test_velocity_term_is_norm_of_change():
    ctx = context({"velocity": (0.1, 0.0, 0.0)}, {"velocity": (0.1, 0.3, 0.4)})
    assert eval_component(RewardComponent(K.VELOCITY_SMOOTHNESS, 0.005), ctx)[1] == pytest.approx(0.0025)


def test_context_requires_consecutive_steps():
    with pytest.raises(ValueError):
        RewardContext(snapshot(step_index=3), snapshot(step_index=5), snapshot())
    with pytest.raises(ValueError):
        RewardContext(snapshot(step_index=3), snapshot(step_index=4), snapshot(step_index=1))


# -- compounds ---------------------------------------------------------------


def test_refined_total_matches_worked_example():
    # approach delta -0.02, vertical delta -0.02, horizontal delta -0.01,
    # block 1 on its goal, block 2 off its goal, velocity change 0.4
    g2 = (0.0, 0.0, 3 * H)
    b2_prev = (0.20, 0.0, g2[2] + 0.10)
    b2_curr = (0.19, 0.0, g2[2] + 0.08)
    e_prev = (b2_prev[0], 0.0, b2_prev[2] + 0.10)
    # keep the block-to-effector distance change at exactly -0.02
    e_curr = (b2_curr[0], 0.0, b2_curr[2] + 0.08)
    ctx = context(
        {"block_2": b2_prev, "effector": e_prev, "velocity": (0.0, 0.0, 0.0)},
        {"block_2": b2_curr, "effector": e_curr, "velocity": (0.0, 0.0, 0.4)},
    )
    total = eval_compound(refined_stack_reward(), ctx).total
    assert total == pytest.approx(15 + 5 + 1.25 + 0.5 + 0 + 0.002, abs=1e-9)


def test_zero_motion_gives_zero_total():
    s = dict(block_1=(0.2, 0.2, H), block_2=(-0.2, 0.1, H), effector=(0.0, -0.1, 0.2))
    ctx = context(s, s)
    for r in (refined_stack_reward(), baseline_stack_reward(), pick_reward()):
        assert eval_compound(r, ctx).total == 0.0


def test_breakdown_total_is_sum_of_active_values(rng):
    r = baseline_stack_reward()
    for _ in range(50):
        b = eval_compound(r, random_context(rng))
        acc = 0.0
        for _, active, value in b.per_component:
            if not active:
                assert value == 0.0
            acc += value
        assert b.total == acc


def test_baseline_structure():
    r = baseline_stack_reward()
    assert len(r.components) == 8
    far = [c for c in r.components if isinstance(c.gate, DistanceAbove)]
    near = [c for c in r.components if isinstance(c.gate, DistanceBelow)]
    both = [c for c in r.components if isinstance(c.gate, AllOf)]
    assert {(c.kind, c.weight) for c in far} == {(K.END_EFFECTOR_APPROACH, -750.0), (K.GOAL1_OVERLAP, -250.0)}
    assert {(c.kind, c.weight) for c in near} == {(K.END_EFFECTOR_APPROACH, -750.0), (K.VERTICAL_TO_GOAL, -250.0)}
    assert {c.block for c in far if c.kind is K.END_EFFECTOR_APPROACH} == {1}
    assert [(c.kind, c.weight) for c in both] == [(K.HORIZONTAL_TO_GOAL, -125.0)]
    assert any(isinstance(g, BlockAboveGoalHeight) for g in both[0].gate.gates)
    ungated = {(c.kind, c.weight) for c in r.components if c.gate is None}
    assert ungated == {(K.GOAL1_OVERLAP, 1.0), (K.GOAL2_OVERLAP, 1.0), (K.VELOCITY_SMOOTHNESS, 0.005)}


def _branch_flags(r, ctx):
    b = eval_compound(r, ctx)
    a = [act for (kind, act, _), c in zip(b.per_component, r.components) if isinstance(c.gate, DistanceAbove)]
    bb = [
        act
        for (kind, act, _), c in zip(b.per_component, r.components)
        if isinstance(c.gate, DistanceBelow)
    ]
    return b, a, bb


def test_baseline_far_from_block1_only_branch_a():
    r = baseline_stack_reward()
    ctx = context({"effector": (0.0, 0.0, H + 0.06)}, {"effector": (0.0, 0.0, H + 0.05)})
    b, a, bb = _branch_flags(r, ctx)
    assert all(a) and not any(bb)
    for (kind, active, value), c in zip(b.per_component, r.components):
        if c.gate is not None and not isinstance(c.gate, DistanceAbove):
            assert (active, value) == (False, 0.0)
        if c.gate is None:
            assert active


def test_baseline_near_block1_low_block2_vertical_not_horizontal():
    r = baseline_stack_reward()
    ctx = context({"effector": (0.0, 0.0, H + 0.015)}, {"effector": (0.0, 0.0, H + 0.01)})
    b = eval_compound(r, ctx)
    flags = {(c.kind, type(c.gate).__name__): act for (_, act, _), c in zip(b.per_component, r.components)}
    assert flags[(K.VERTICAL_TO_GOAL, "DistanceBelow")]
    assert not flags[(K.HORIZONTAL_TO_GOAL, "AllOf")]
    assert not flags[(K.END_EFFECTOR_APPROACH, "DistanceAbove")]


def test_baseline_horizontal_active_when_block2_above_goal2():
    r = baseline_stack_reward()
    ctx = context(
        {"effector": (0.0, 0.0, H + 0.01), "block_2": (0.1, 0.0, 4 * H)},
        {"effector": (0.0, 0.0, H + 0.01), "block_2": (0.09, 0.0, 4 * H)},
    )
    b = eval_compound(r, ctx)
    hori = [v for (k, act, v) in b.per_component if k is K.HORIZONTAL_TO_GOAL and act]
    assert hori == [pytest.approx(-125 * -0.01)]


def test_baseline_exact_threshold_activates_neither_branch():
    r = baseline_stack_reward()
    # offset along x only, so the Euclidean distance is exactly 0.02
    ctx = context({"effector": (0.02, 0.0, H)}, {"effector": (0.02, 0.0, H)})
    assert float(np.linalg.norm(ctx.curr.effector - ctx.curr.block_1.center)) == 0.02
    _, a, bb = _branch_flags(r, ctx)
    assert not any(a) and not any(bb)


def test_baseline_branches_mutually_exclusive_on_random_contexts(rng):
    r = baseline_stack_reward()
    for _ in range(300):
        _, a, bb = _branch_flags(r, random_context(rng))
        assert all(a) != all(bb)
        assert len(set(a)) == 1 and len(set(bb)) == 1


def test_refined_matches_oracle_on_random_contexts(rng):
    r = refined_stack_reward()
    for _ in range(300):
        ctx = random_context(rng)
        want = refined_total(ctx, EDGE)
        got = r(ctx)
        assert abs(got - want) <= 1e-12 * max(1.0, abs(want))


def test_refined_has_no_gates_and_listed_goal_weights():
    r = refined_stack_reward()
    assert r.gate_count == 0
    assert r.component(K.GOAL1_OVERLAP).weight == 0.5
    assert r.component(K.GOAL2_OVERLAP).weight == 1.0


def test_pick_structure():
    r = pick_reward()
    assert r.gate_count == 0
    kinds = {c.kind for c in r.components}
    assert K.HORIZONTAL_TO_GOAL not in kinds and K.VELOCITY_SMOOTHNESS not in kinds


def test_pick_lift_example():
    # z-gap to goal 2 shrinks from 0.20 to 0.18 with the effector moving along
    g2z = 3 * H
    prev_b2 = (0.1, 0.0, g2z + 0.20)
    curr_b2 = (0.1, 0.0, g2z + 0.18)
    ctx = context(
        {"block_2": prev_b2, "effector": (0.1, 0.0, prev_b2[2])},
        {"block_2": curr_b2, "effector": (0.1, 0.0, curr_b2[2])},
    )
    goal_terms = 0.5 * goal_overlap(ctx.curr.block_1, ctx.curr.goal_1) + goal_overlap(ctx.curr.block_2, ctx.curr.goal_2)
    assert pick_reward()(ctx) == pytest.approx(-250 * -0.02 + goal_terms, abs=1e-9)


def test_grasp_rejects_bad_proximity():
    with pytest.raises(ConfigurationError):
        ProximityConfig(0.5, 0.1)
    with pytest.raises(ConfigurationError):
        grasp_reward("not a config")


def test_duplicate_kind_gate_pair_rejected():
    with pytest.raises(ConfigurationError):
        CompoundReward("dup", (RewardComponent(K.GOAL1_OVERLAP, 1.0), RewardComponent(K.GOAL1_OVERLAP, 2.0)))
    with pytest.raises(ConfigurationError):
        CompoundReward("empty", ())


# -- presence vectors ----------------------------------------------------------


@pytest.mark.parametrize(
    "builder, expected",
    [
        (lambda: grasp_reward(ProximityConfig(0.02, 0.5)), (1, 1, 0, 1, 0, 1, 0, 0)),
        (pick_reward, (1, 0, 1, 1, 1, 0, 0, 0)),
        (refined_stack_reward, (1, 0, 1, 1, 1, 0, 1, 1)),
        (baseline_stack_reward, (1, 0, 1, 1, 1, 0, 1, 1)),
    ],
)
def test_reward_vectors(builder, expected):
    assert reward_to_vector(builder()).flags == expected


def test_single_kind_vector():
    r = CompoundReward("v", (RewardComponent(K.VELOCITY_SMOOTHNESS, 0.005),))
    assert reward_to_vector(r).flags == (0, 0, 0, 0, 0, 0, 0, 1)


def test_vector_ignores_order_and_gates():
    r = baseline_stack_reward()
    stripped = {}
    for c in reversed(r.components):
        stripped.setdefault(c.kind, RewardComponent(c.kind, c.weight, None, c.proximity))
    assert reward_to_vector(CompoundReward("x", tuple(stripped.values()))) == reward_to_vector(r)


def test_canonical_order_and_short_names():
    assert [k.short for k in CANONICAL_ORDER] == ["end", "move", "vert", "goal_1", "goal_2", "dist", "hori", "vel"]
    assert K.parse("R_hori") is K.HORIZONTAL_TO_GOAL
    assert K.parse("VerticalToGoal") is K.VERTICAL_TO_GOAL
    with pytest.raises(ConfigurationError):
        K.parse("R_torque")


def test_delta_components_vanish_on_identical_snapshots(rng):
    for _ in range(20):
        s = random_context(rng).curr
        prev = snapshot(step_index=0)
        ctx = RewardContext(
            type(s)(s.effector, s.effector_velocity, s.block_1, s.block_2, s.goal_1, s.goal_2, False, 3),
            type(s)(s.effector, s.effector_velocity, s.block_1, s.block_2, s.goal_1, s.goal_2, False, 4),
            prev,
        )
        for kind in (K.END_EFFECTOR_APPROACH, K.BLOCK_DISPLACEMENT_FROM_INIT, K.VERTICAL_TO_GOAL,
                     K.HORIZONTAL_TO_GOAL, K.VELOCITY_SMOOTHNESS):
            assert eval_component(RewardComponent(kind, 1.0), ctx)[1] == 0.0


# -- config round trip --------------------------------------------------------


@pytest.mark.parametrize("name", ["baseline_stack", "refined_stack", "grasp", "pick"])
def test_compound_dict_round_trip(name):
    r = build_reward(name)
    back = compound_from_dict(compound_to_dict(r))
    assert back == r
    assert compound_from_dict(name) == r
    assert compound_from_dict({"builder": name}) == r


def test_compound_from_dict_reports_field_path():
    bad = {"name": "x", "components": [{"kind": "end", "weight": 1.0}, {"kind": "nope", "weight": 1.0}]}
    with pytest.raises(ConfigurationError) as e:
        compound_from_dict(bad, "tasks[0].reward")
    assert "tasks[0].reward.components[1]" in str(e.value)


def test_gate_threshold_must_be_positive():
    with pytest.raises(ConfigurationError):
        DistanceAbove(("block_1", "effector"), 0.0)
    with pytest.raises(ConfigurationError):
        DistanceBelow(("block_1", "nose"), 0.1)
