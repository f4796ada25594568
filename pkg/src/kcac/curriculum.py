"""Curriculum generation, schedule selection and staged training with transfer.

The staged loop trains one learner per stage. At each stage boundary the
network weights are exported and copied into a fresh learner built with the
next stage's parameters; the replay buffer and the entropy temperature start
over, and the environment switches to the next task's reward.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Protocol, Sequence

import numpy as np

from .env import BlockWorldEnv, EnvConfig, SuccessReport
from .errors import ConfigurationError, TransferError, UnknownPresetError
from .rewards import CompoundReward, grasp_reward, pick_reward, refined_stack_reward
from .sac import LearnerParams, ParamBlob, SACLearner, SACSettings, Transition
from .similarity import task_similarity

PRESETS: dict[str, LearnerParams] = {
    "lr_1e-4": LearnerParams(1e-4, 1e-3, 1e-3, 256 * 4, 1_000_000, 0.95, "auto"),
    "lr_5e-5": LearnerParams(5e-5, 1e-4, 1e-4, 256, 1_000_000, 0.95, "auto"),
    "lr_1e-5": LearnerParams(1e-5, 1e-4, 1e-4, 256, 1_000_000, 0.95, "auto"),
}
PRETRAIN_PRESET = "lr_1e-4"


def preset_params(name: str) -> LearnerParams:
    try:
        return PRESETS[name]
    except KeyError:
        raise UnknownPresetError(f"unknown preset {name!r}; known: {sorted(PRESETS)}") from None


def preset_name(params: LearnerParams) -> str | None:
    for name, p in PRESETS.items():
        if p == params:
            return name
    return None


class SuccessMetric(enum.Enum):
    FRAC_TOP = "frac_top"
    FRAC_OVERALL = "frac_overall"

    def of(self, report: SuccessReport) -> float:
        return getattr(report, self.value)


@dataclass(frozen=True)
class TaskSpec:
    name: str
    reward: CompoundReward
    env: EnvConfig = field(default_factory=EnvConfig)
    success_metric: SuccessMetric = SuccessMetric.FRAC_TOP


def builtin_tasks(env: EnvConfig | None = None) -> dict[str, TaskSpec]:
    """The grasp / pick / stack family on a shared environment config."""
    env = env or EnvConfig()
    return {
        "grasp": TaskSpec("grasp", grasp_reward(), env, SuccessMetric.FRAC_OVERALL),
        "pick": TaskSpec("pick", pick_reward(), env, SuccessMetric.FRAC_TOP),
        "stack": TaskSpec("stack", refined_stack_reward(), env, SuccessMetric.FRAC_TOP),
    }


@dataclass(frozen=True)
class Stage:
    task: TaskSpec
    episodes: int
    params: LearnerParams

    def __post_init__(self):
        if int(self.episodes) != self.episodes or self.episodes < 1:
            raise ConfigurationError(f"stage {self.task.name!r}: episodes must be an integer >= 1")


@dataclass(frozen=True)
class CurriculumPlan:
    stages: tuple[Stage, ...]

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        if not self.stages:
            raise ConfigurationError("a curriculum plan needs at least one stage")

    @property
    def target(self) -> TaskSpec:
        return self.stages[-1].task

    @property
    def transitions(self) -> tuple[int, ...]:
        """Cumulative episode at which each stage ends (T_1 < T_2 < ... < T_N)."""
        return tuple(int(t) for t in np.cumsum([s.episodes for s in self.stages]))

    @property
    def total_episodes(self) -> int:
        return self.transitions[-1]

    def stage_of(self, episode: int) -> int:
        """0-based stage index owning a 1-based cumulative episode."""
        for i, t in enumerate(self.transitions):
            if episode <= t:
                return i
        raise IndexError(episode)

    def describe(self) -> dict:
        return {
            "stages": [
                {
                    "task": s.task.name,
                    "episodes": s.episodes,
                    "preset": preset_name(s.params),
                    "params": s.params.to_dict(),
                }
                for s in self.stages
            ],
            "transitions": list(self.transitions),
        }


# --------------------------------------------------------------------------
# G(S): sub-task generation
# --------------------------------------------------------------------------


def generate_subtasks(target: TaskSpec, registry: Sequence[TaskSpec], floor: float = 0.3) -> list[TaskSpec]:
    """Registry tasks more similar to ``target`` than ``floor``, least similar first, then the target.

    Ties keep registry order. Registry entries named like the target are skipped.
    """
    if target.reward is None or not target.reward.components:
        raise ConfigurationError(f"target task {target.name!r} has an empty reward")
    scored = []
    for pos, task in enumerate(registry):
        if task.name == target.name:
            continue
        sim = task_similarity(task.reward, target.reward)
        if sim > floor:
            scored.append((sim, pos, task))
    scored.sort(key=lambda item: (item[0], item[1]))
    return [t for _, _, t in scored] + [target]


# --------------------------------------------------------------------------
# M(<S_N>): transition timing and learning parameters
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ScheduleRules:
    """Similarity bands mapping a (stage, next stage) pair to a pretraining budget and next-stage preset."""

    low: float = 0.45
    high: float = 0.65
    budget_low: int = 60
    budget_mid: int = 300
    budget_high: int = 900
    budget_high_first: int = 1800
    preset_low: str = "lr_1e-4"
    preset_mid: str = "lr_1e-4"
    preset_high: str = "lr_1e-5"
    pretrain_preset: str = PRETRAIN_PRESET
    final_episodes: int = 1000

    def __post_init__(self):
        if not (0.0 <= self.low <= self.high <= 1.0):
            raise ConfigurationError("need 0 <= low <= high <= 1", "schedule")
        for name in ("budget_low", "budget_mid", "budget_high", "budget_high_first", "final_episodes"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1", "schedule")
        for name in ("preset_low", "preset_mid", "preset_high", "pretrain_preset"):
            preset_params(getattr(self, name))

    def band(self, sim: float) -> str:
        if sim < self.low:
            return "low"
        if sim < self.high:
            return "mid"
        return "high"

    def budget(self, sim: float, first: bool) -> int:
        band = self.band(sim)
        if band == "high":
            return self.budget_high_first if first else self.budget_high
        return self.budget_low if band == "low" else self.budget_mid

    def next_preset(self, sim: float) -> str:
        return {"low": self.preset_low, "mid": self.preset_mid, "high": self.preset_high}[self.band(sim)]

    def scaled(self, factor: float) -> ScheduleRules:
        """Same bands with every episode budget multiplied by ``factor`` (rounded, at least 1)."""

        def s(n: int) -> int:
            return max(1, int(round(n * factor)))

        return ScheduleRules(
            self.low, self.high, s(self.budget_low), s(self.budget_mid), s(self.budget_high),
            s(self.budget_high_first), self.preset_low, self.preset_mid, self.preset_high,
            self.pretrain_preset, s(self.final_episodes),
        )


def select_schedule(
    chain: Sequence[TaskSpec],
    target: TaskSpec | None = None,
    rules: ScheduleRules | None = None,
    final_episodes: int | None = None,
) -> CurriculumPlan:
    rules = rules or ScheduleRules()
    chain = list(chain)
    if not chain:
        raise ConfigurationError("empty task chain")
    if target is not None and chain[-1].name != target.name:
        raise ConfigurationError(f"chain ends with {chain[-1].name!r}, not the target {target.name!r}")
    budgets: list[int] = []
    presets = [rules.pretrain_preset] * len(chain)
    for i in range(len(chain) - 1):
        sim = task_similarity(chain[i].reward, chain[i + 1].reward)
        budgets.append(rules.budget(sim, first=(i == 0)))
        if i + 1 == len(chain) - 1:
            presets[i + 1] = rules.next_preset(sim)
    budgets.append(final_episodes if final_episodes is not None else rules.final_episodes)
    return CurriculumPlan(
        tuple(Stage(task, n, preset_params(p)) for task, n, p in zip(chain, budgets, presets))
    )


# --------------------------------------------------------------------------
# training loop
# --------------------------------------------------------------------------


class Learner(Protocol):
    def act(self, obs) -> np.ndarray: ...
    def select_action(self, obs, deterministic: bool = False) -> np.ndarray: ...
    def observe_transition(self, t: Transition) -> None: ...
    def update(self): ...
    def export_params(self) -> ParamBlob: ...
    def import_params(self, blob: ParamBlob, temperature: bool = True) -> None: ...


EnvFactory = Callable[[TaskSpec], BlockWorldEnv]
LearnerFactory = Callable[[LearnerParams, int], Learner]


@dataclass(frozen=True)
class EpisodeRow:
    stage: int
    episode: int
    episodic_reward: float
    frac_top: float
    frac_bottom: float
    frac_overall: float
    wall_ms: int


@dataclass(frozen=True)
class TransferEvent:
    episode: int
    from_stage: int
    to_stage: int
    params_hash: str
    imported_hash: str


@dataclass
class RunRecord:
    plan: dict
    seed: int
    rows: list[EpisodeRow] = field(default_factory=list)
    transfers: list[TransferEvent] = field(default_factory=list)
    learners: list[Any] = field(default_factory=list, repr=False)

    def metric_tuples(self) -> list[tuple]:
        """Per-episode values excluding wall-clock, for equality checks."""
        return [(r.stage, r.episode, r.episodic_reward, r.frac_top, r.frac_bottom, r.frac_overall) for r in self.rows]


def episode_seed(seed: int, episode: int) -> int:
    return int(np.random.SeedSequence([seed, 0xE, episode]).generate_state(1)[0])


def learner_seed(seed: int, stage: int) -> int:
    return int(np.random.SeedSequence([seed, 0xA, stage]).generate_state(1)[0])


def default_env_factory(task: TaskSpec) -> BlockWorldEnv:
    return BlockWorldEnv(task.env)


def sac_factory(settings: SACSettings | None = None, obs_dim: int = 20, act_dim: int = 4) -> LearnerFactory:
    def make(params: LearnerParams, seed: int) -> SACLearner:
        return SACLearner(obs_dim, act_dim, params, seed, settings)

    return make


def run_episode(env: BlockWorldEnv, learner: Learner, reward: CompoundReward, seed: int, gradient_steps: int = 1, learn: bool = True):
    """One episode of act / step / store / update. Returns (episodic reward, success report)."""
    obs = env.reset(seed)
    total = 0.0
    done = False
    while not done:
        action = learner.act(obs) if learn else learner.select_action(obs, deterministic=True)
        next_obs, ctx, done = env.step(action)
        r = reward(ctx)
        total += r
        if learn:
            learner.observe_transition(Transition(obs, action, r, next_obs, done))
            for _ in range(gradient_steps):
                learner.update()
        obs = next_obs
    return total, env.success()


def _gradient_steps(learner) -> int:
    settings = getattr(learner, "settings", None)
    return getattr(settings, "gradient_steps", 1)


def run_direct(
    task: TaskSpec,
    params: LearnerParams,
    episodes: int,
    seed: int,
    env_factory: EnvFactory = default_env_factory,
    learner_factory: LearnerFactory | None = None,
    on_episode: Callable[[EpisodeRow], None] | None = None,
    after_episode: Callable[[EpisodeRow, Learner, TaskSpec], None] | None = None,
) -> RunRecord:
    """Plain single-task training, independent of the staged loop."""
    learner_factory = learner_factory or sac_factory()
    env = env_factory(task)
    learner = learner_factory(params, learner_seed(seed, 0))
    record = RunRecord({"direct": task.name, "episodes": episodes}, seed, learners=[learner])
    for ep in range(1, episodes + 1):
        t0 = time.perf_counter()
        ret, rep = run_episode(env, learner, task.reward, episode_seed(seed, ep), _gradient_steps(learner))
        row = EpisodeRow(0, ep, ret, rep.frac_top, rep.frac_bottom, rep.frac_overall, int((time.perf_counter() - t0) * 1000))
        record.rows.append(row)
        if on_episode:
            on_episode(row)
        if after_episode:
            after_episode(row, learner, task)
    return record


def kcac_run(
    plan: CurriculumPlan,
    env_factory: EnvFactory = default_env_factory,
    learner_factory: LearnerFactory | None = None,
    seed: int = 0,
    *,
    on_episode: Callable[[EpisodeRow], None] | None = None,
    on_transfer: Callable[[TransferEvent], None] | None = None,
    checkpoint_dir: str | Path | None = None,
    keep_learners: bool = False,
    after_episode: Callable[[EpisodeRow, Learner, TaskSpec], None] | None = None,
) -> RunRecord:
    learner_factory = learner_factory or sac_factory()
    record = RunRecord(plan.describe(), seed)
    transitions = plan.transitions
    stage_i = 0
    stage = plan.stages[0]
    env = env_factory(stage.task)
    learner = learner_factory(stage.params, learner_seed(seed, 0))
    if keep_learners:
        record.learners.append(learner)
    ckpt = Path(checkpoint_dir) if checkpoint_dir is not None else None

    for ep in range(1, plan.total_episodes + 1):
        t0 = time.perf_counter()
        ret, rep = run_episode(env, learner, stage.task.reward, episode_seed(seed, ep), _gradient_steps(learner))
        row = EpisodeRow(stage_i, ep, ret, rep.frac_top, rep.frac_bottom, rep.frac_overall, int((time.perf_counter() - t0) * 1000))
        record.rows.append(row)
        if on_episode:
            on_episode(row)
        if after_episode:
            after_episode(row, learner, stage.task)
        if ep != transitions[stage_i]:
            continue
        blob = learner.export_params()
        if ckpt is not None:
            blob.save(ckpt / f"stage{stage_i}_ep{ep}.params")
        if stage_i == len(plan.stages) - 1:
            break
        # theta <- theta_{S_i}: copy weights into a fresh learner for the next stage
        stage_i += 1
        stage = plan.stages[stage_i]
        env = env_factory(stage.task)
        learner = learner_factory(stage.params, learner_seed(seed, stage_i))
        learner.import_params(blob, temperature=False)
        imported = learner.export_params()
        event = TransferEvent(ep, stage_i - 1, stage_i, blob.theta_hash(), imported.theta_hash())
        if event.params_hash != event.imported_hash:
            raise TransferError(f"parameter hash changed across transfer at episode {ep}")
        record.transfers.append(event)
        if keep_learners:
            record.learners.append(learner)
        if on_transfer:
            on_transfer(event)
    return record
