"""Config-driven experiment runner and run comparator.

A config file (JSON) names an environment, a task registry, a plan (direct,
automatic or explicit stages), seeds and an output directory. ``run_experiment``
trains one run per seed and writes::

    <output_dir>/
        manifest.json            config hash, seeds, version, plan, status
        metrics.csv              all runs, seed order (written at the end)
        metrics.jsonl            same rows as JSON lines
        transfers.jsonl          stage-boundary transfer events
        runs/<run_id>/metrics.csv, metrics.jsonl, transfers.jsonl,
                      timings.csv, eval.csv (streamed per episode)
        checkpoints/<run_id>/stage<i>_ep<t>.params

Metric files hold no wall-clock data, so a rerun with the same config and
seeds reproduces them byte for byte. Wall-clock milliseconds go to
``timings.csv`` next to them.

See ``docs/config.md`` for the config schema.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from ._jit import backend_name
from .curriculum import (
    CurriculumPlan,
    EpisodeRow,
    ScheduleRules,
    Stage,
    SuccessMetric,
    TaskSpec,
    TransferEvent,
    builtin_tasks,
    default_env_factory,
    generate_subtasks,
    kcac_run,
    preset_name,
    preset_params,
    run_direct,
    run_episode,
    sac_factory,
    select_schedule,
)
from .env import EnvConfig
from .errors import ConfigurationError, KcacError
from .rewards import compound_from_dict, compound_to_dict
from .sac import LearnerParams, SACSettings
from .similarity import SimilarityMatrix, similarity_matrix

METRIC_FIELDS = ("run_id", "seed", "stage", "episode", "episodic_reward", "frac_top", "frac_bottom", "frac_overall")
TIMING_FIELDS = ("run_id", "seed", "episode", "wall_ms")
DEFAULT_SEEDS = (0, 1, 2, 3, 4)
OUT_ENV_VAR = "KCAC_OUT"


class OutputError(KcacError):
    """The output directory cannot be created or written."""


class ComparisonError(ConfigurationError):
    """Two runs cannot be compared (different environment or success metric)."""


# --------------------------------------------------------------------------
# config
# --------------------------------------------------------------------------

_TOP_LEVEL = {
    "name", "env", "tasks", "target", "plan", "seeds", "episodes", "eval_every",
    "success_threshold", "output_dir", "schedule", "learner", "param_overrides",
    "direct_preset", "workers",
}


def _int(d: dict, key: str, default: Any, path: str, minimum: int) -> int:
    v = d.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
        raise ConfigurationError(f"must be an integer >= {minimum}, got {v!r}", f"{path}.{key}" if path else key)
    return v


def _parse_task(entry: Any, path: str, env: EnvConfig, builtins: dict[str, TaskSpec]) -> TaskSpec:
    if isinstance(entry, str):
        if entry not in builtins:
            raise ConfigurationError(f"unknown built-in task {entry!r}; known: {sorted(builtins)}", path)
        return builtins[entry]
    if not isinstance(entry, dict) or "name" not in entry:
        raise ConfigurationError("task must be a built-in name or an object with 'name'", path)
    unknown = set(entry) - {"name", "reward", "success_metric"}
    if unknown:
        raise ConfigurationError(f"unknown fields {sorted(unknown)}", path)
    name = str(entry["name"])
    base = builtins.get(name)
    if "reward" in entry:
        reward = compound_from_dict(entry["reward"], f"{path}.reward")
    elif base is not None:
        reward = base.reward
    else:
        raise ConfigurationError("custom task needs a 'reward'", path)
    metric = entry.get("success_metric", base.success_metric.value if base else "frac_top")
    try:
        metric = SuccessMetric(metric)
    except ValueError:
        raise ConfigurationError(f"unknown success metric {metric!r}", f"{path}.success_metric") from None
    return TaskSpec(name, reward, env, metric)


def _parse_overrides(d: Any, path: str = "param_overrides") -> dict:
    if d is None:
        return {}
    if not isinstance(d, dict):
        raise ConfigurationError("must be an object", path)
    allowed = {f.name for f in fields(LearnerParams)} | {"learning_rate_scale"}
    unknown = set(d) - allowed
    if unknown:
        raise ConfigurationError(f"unknown fields {sorted(unknown)}", path)
    scale = d.get("learning_rate_scale", 1.0)
    if not isinstance(scale, (int, float)) or not (math.isfinite(scale) and scale > 0):
        raise ConfigurationError("must be a positive number", f"{path}.learning_rate_scale")
    return dict(d)


def apply_overrides(params: LearnerParams, overrides: dict) -> LearnerParams:
    """Apply the same parameter overrides to any preset (used for scaled desk runs)."""
    if not overrides:
        return params
    o = dict(overrides)
    scale = float(o.pop("learning_rate_scale", 1.0))
    lr = float(o.pop("learning_rate", params.learning_rate)) * scale
    try:
        return replace(params, learning_rate=lr, **o)
    except ConfigurationError as e:
        raise ConfigurationError(str(e), "param_overrides") from None


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    env: EnvConfig
    tasks: tuple[TaskSpec, ...]
    target: str
    plan: Any  # "direct" | {"auto": {...}} | {"stages": [...]}
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    episodes: int | None = None
    eval_every: int = 0
    success_threshold: float = 0.8
    output_dir: str = "runs"
    schedule: ScheduleRules = field(default_factory=ScheduleRules)
    learner: SACSettings = field(default_factory=SACSettings)
    param_overrides: dict = field(default_factory=dict)
    direct_preset: str = "lr_1e-4"
    workers: int = 1

    # -- parsing -----------------------------------------------------------

    @classmethod
    def from_dict(cls, d: Any) -> ExperimentConfig:
        if not isinstance(d, dict):
            raise ConfigurationError("config must be a JSON object", "$")
        unknown = set(d) - _TOP_LEVEL
        if unknown:
            raise ConfigurationError(f"unknown fields {sorted(unknown)}", "$")
        name = d.get("name")
        if not isinstance(name, str) or not name:
            raise ConfigurationError("must be a non-empty string", "name")
        env = EnvConfig.from_dict(d.get("env"), "env")
        try:
            env.validate_spawn()
        except ConfigurationError as e:
            raise ConfigurationError(str(e).split(": ", 1)[-1], f"env.{e.path}") from None
        builtins = builtin_tasks(env)
        raw_tasks = d.get("tasks", list(builtins))
        if not isinstance(raw_tasks, list) or not raw_tasks:
            raise ConfigurationError("must be a non-empty list", "tasks")
        tasks = tuple(_parse_task(t, f"tasks[{i}]", env, builtins) for i, t in enumerate(raw_tasks))
        names = [t.name for t in tasks]
        if len(set(names)) != len(names):
            raise ConfigurationError(f"duplicate task names in {names}", "tasks")
        target = d.get("target", names[-1])
        if target not in names:
            raise ConfigurationError(f"target {target!r} is not in the task registry {names}", "target")

        seeds = d.get("seeds", list(DEFAULT_SEEDS))
        if (
            not isinstance(seeds, list)
            or not seeds
            or any(isinstance(s, bool) or not isinstance(s, int) or s < 0 for s in seeds)
        ):
            raise ConfigurationError("must be a non-empty list of non-negative integers", "seeds")
        if len(set(seeds)) != len(seeds):
            raise ConfigurationError("seeds must be unique", "seeds")
        episodes = d.get("episodes")
        if episodes is not None:
            episodes = _int(d, "episodes", None, "", 1)
        thr = d.get("success_threshold", 0.8)
        if not isinstance(thr, (int, float)) or not (0.0 <= thr <= 1.0):
            raise ConfigurationError(f"must lie in [0, 1], got {thr!r}", "success_threshold")

        sched = d.get("schedule") or {}
        if not isinstance(sched, dict):
            raise ConfigurationError("must be an object", "schedule")
        sched = dict(sched)
        scale = sched.pop("scale", None)
        allowed = {f.name for f in fields(ScheduleRules)}
        if set(sched) - allowed:
            raise ConfigurationError(f"unknown fields {sorted(set(sched) - allowed)}", "schedule")
        try:
            rules = ScheduleRules(**sched)
            if scale is not None:
                if not isinstance(scale, (int, float)) or scale <= 0:
                    raise ConfigurationError("must be a positive number", "schedule.scale")
                rules = rules.scaled(float(scale))
        except ConfigurationError as e:
            raise ConfigurationError(str(e).split(": ", 1)[-1], e.path if (e.path or "").startswith("schedule") else "schedule") from None

        lr = d.get("learner") or {}
        if not isinstance(lr, dict) or set(lr) - {f.name for f in fields(SACSettings)}:
            raise ConfigurationError("unknown or malformed learner settings", "learner")
        try:
            settings = SACSettings(**lr)
        except (ConfigurationError, TypeError) as e:
            raise ConfigurationError(str(e), "learner") from None

        direct_preset = d.get("direct_preset", "lr_1e-4")
        try:
            preset_params(direct_preset)
        except ConfigurationError as e:
            raise ConfigurationError(str(e), "direct_preset") from None

        cfg = cls(
            name=name,
            env=env,
            tasks=tasks,
            target=target,
            plan=_normalize_plan(d.get("plan", "direct"), names),
            seeds=tuple(seeds),
            episodes=episodes,
            eval_every=_int(d, "eval_every", 0, "", 0),
            success_threshold=float(thr),
            output_dir=str(d.get("output_dir", Path("runs") / name)),
            schedule=rules,
            learner=settings,
            param_overrides=_parse_overrides(d.get("param_overrides")),
            direct_preset=direct_preset,
            workers=_int(d, "workers", 1, "", 1),
        )
        if cfg.plan == "direct" or "auto" in cfg.plan:
            if cfg.episodes is None:
                raise ConfigurationError("required for direct and auto plans", "episodes")
        cfg.build_plan()  # surfaces stage errors at load time
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> ExperimentConfig:
        try:
            d = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigurationError(f"no such config file: {path}") from None
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"invalid JSON: {e}", str(path)) from None
        return cls.from_dict(d)

    # -- derived -----------------------------------------------------------

    def task(self, name: str) -> TaskSpec:
        for t in self.tasks:
            if t.name == name:
                return t
        raise KeyError(name)

    @property
    def target_task(self) -> TaskSpec:
        return self.task(self.target)

    def direct_params(self) -> LearnerParams:
        return apply_overrides(preset_params(self.direct_preset), self.param_overrides)

    def build_plan(self, overrides: dict | None = None) -> CurriculumPlan | None:
        """The staged plan, or ``None`` for direct training.

        ``overrides`` defaults to the config's ``param_overrides``; pass ``{}`` for raw presets.
        """
        overrides = self.param_overrides if overrides is None else overrides
        if self.plan == "direct":
            return None
        if "auto" in self.plan:
            auto = self.plan["auto"]
            registry = [self.task(n) for n in auto["registry"]]
            chain = generate_subtasks(self.target_task, registry, auto.get("floor", 0.3))
            base = select_schedule(chain, self.target_task, self.schedule, final_episodes=self.episodes)
        else:
            stages = []
            for i, s in enumerate(self.plan["stages"]):
                try:
                    stages.append(Stage(self.task(s["task"]), s["episodes"], preset_params(s["preset"])))
                except ConfigurationError as e:
                    raise ConfigurationError(str(e), f"plan.stages[{i}]") from None
            base = CurriculumPlan(tuple(stages))
            if self.episodes is not None and self.episodes != base.total_episodes:
                raise ConfigurationError(
                    f"episodes={self.episodes} disagrees with the stage total {base.total_episodes}", "episodes"
                )
        return CurriculumPlan(
            tuple(replace(s, params=apply_overrides(s.params, overrides)) for s in base.stages)
        )

    def base_presets(self) -> list[str]:
        """Preset names per stage before overrides, recomputed from the plan config."""
        if self.plan == "direct":
            return [self.direct_preset]
        return [preset_name(s.params) for s in self.build_plan(overrides={}).stages]

    def to_dict(self) -> dict:
        """Normalized form; excludes fields that cannot change results (output_dir, workers)."""
        return {
            "name": self.name,
            "env": self.env.to_dict(),
            "tasks": [
                {"name": t.name, "reward": compound_to_dict(t.reward), "success_metric": t.success_metric.value}
                for t in self.tasks
            ],
            "target": self.target,
            "plan": self.plan,
            "seeds": list(self.seeds),
            "episodes": self.episodes,
            "eval_every": self.eval_every,
            "success_threshold": self.success_threshold,
            "schedule": {f.name: getattr(self.schedule, f.name) for f in fields(ScheduleRules)},
            "learner": {
                "hidden": list(self.learner.hidden),
                "learning_starts": self.learner.learning_starts,
                "gradient_steps": self.learner.gradient_steps,
                "adam_betas": list(self.learner.adam_betas),
                "adam_eps": self.learner.adam_eps,
            },
            "param_overrides": self.param_overrides,
            "direct_preset": self.direct_preset,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _normalize_plan(plan: Any, names: Sequence[str]) -> Any:
    if plan == "direct":
        return "direct"
    if not isinstance(plan, dict) or len(plan) != 1 or next(iter(plan)) not in ("auto", "stages"):
        raise ConfigurationError("must be 'direct', {'auto': {...}} or {'stages': [...]}", "plan")
    if "auto" in plan:
        auto = plan["auto"] or {}
        if not isinstance(auto, dict) or set(auto) - {"registry", "floor"}:
            raise ConfigurationError("auto plan accepts 'registry' and 'floor'", "plan.auto")
        registry = auto.get("registry", [n for n in names])
        if not isinstance(registry, list) or any(n not in names for n in registry):
            raise ConfigurationError(f"registry entries must be task names from {list(names)}", "plan.auto.registry")
        floor = auto.get("floor", 0.3)
        if not isinstance(floor, (int, float)) or not (0.0 <= floor <= 1.0):
            raise ConfigurationError("must lie in [0, 1]", "plan.auto.floor")
        return {"auto": {"registry": list(registry), "floor": float(floor)}}
    stages = plan["stages"]
    if not isinstance(stages, list) or not stages:
        raise ConfigurationError("must be a non-empty list", "plan.stages")
    out = []
    for i, s in enumerate(stages):
        p = f"plan.stages[{i}]"
        if not isinstance(s, dict) or set(s) - {"task", "episodes", "preset"} or "task" not in s:
            raise ConfigurationError("stage needs 'task', 'episodes' and optional 'preset'", p)
        if s["task"] not in names:
            raise ConfigurationError(f"unknown task {s['task']!r}", f"{p}.task")
        out.append({"task": s["task"], "episodes": _int(s, "episodes", None, p, 1), "preset": s.get("preset", "lr_1e-4")})
    return {"stages": out}


# --------------------------------------------------------------------------
# running
# --------------------------------------------------------------------------


def run_id_for(cfg: ExperimentConfig, seed: int) -> str:
    return f"{cfg.name}-s{seed}"


def _fmt(v: Any) -> Any:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else v


def _metric_dict(run_id: str, seed: int, row: EpisodeRow) -> dict:
    return {
        "run_id": run_id,
        "seed": seed,
        "stage": row.stage,
        "episode": row.episode,
        "episodic_reward": float(row.episodic_reward),
        "frac_top": float(row.frac_top),
        "frac_bottom": float(row.frac_bottom),
        "frac_overall": float(row.frac_overall),
    }


class _RunWriter:
    """Per-run streaming files; every row is flushed so a killed run leaves a parseable prefix."""

    def __init__(self, run_dir: Path, run_id: str, seed: int):
        run_dir.mkdir(parents=True, exist_ok=True)
        self.run_id, self.seed = run_id, seed
        self._files = []
        self.metrics_csv = self._csv(run_dir / "metrics.csv", METRIC_FIELDS)
        self.timings_csv = self._csv(run_dir / "timings.csv", TIMING_FIELDS)
        self.eval_csv = self._csv(run_dir / "eval.csv", METRIC_FIELDS)
        self.metrics_jsonl = self._open(run_dir / "metrics.jsonl")
        self.transfers_jsonl = self._open(run_dir / "transfers.jsonl")

    def _open(self, path: Path):
        f = open(path, "w", newline="")
        self._files.append(f)
        return f

    def _csv(self, path: Path, header):
        f = self._open(path)
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        f.flush()
        return f, w

    def episode(self, row: EpisodeRow) -> None:
        d = _metric_dict(self.run_id, self.seed, row)
        f, w = self.metrics_csv
        w.writerow([_fmt(d[k]) for k in METRIC_FIELDS])
        f.flush()
        self.metrics_jsonl.write(json.dumps(d) + "\n")
        self.metrics_jsonl.flush()
        f, w = self.timings_csv
        w.writerow([self.run_id, self.seed, row.episode, row.wall_ms])
        f.flush()

    def evaluation(self, row: EpisodeRow) -> None:
        d = _metric_dict(self.run_id, self.seed, row)
        f, w = self.eval_csv
        w.writerow([_fmt(d[k]) for k in METRIC_FIELDS])
        f.flush()

    def transfer(self, ev: TransferEvent) -> None:
        self.transfers_jsonl.write(json.dumps(_transfer_dict(self.run_id, self.seed, ev)) + "\n")
        self.transfers_jsonl.flush()

    def close(self) -> None:
        for f in self._files:
            f.close()


def _transfer_dict(run_id: str, seed: int, ev: TransferEvent) -> dict:
    return {
        "run_id": run_id,
        "seed": seed,
        "episode": ev.episode,
        "from_stage": ev.from_stage,
        "to_stage": ev.to_stage,
        "params_hash": ev.params_hash,
        "imported_hash": ev.imported_hash,
    }


def eval_seed(seed: int, episode: int) -> int:
    return int(np.random.SeedSequence([seed, 0xEE, episode]).generate_state(1)[0])


def run_seed(cfg: ExperimentConfig, seed: int, out_dir: str | Path) -> dict:
    """Train one seed and stream its files; returns a small summary for the manifest."""
    out = Path(out_dir)
    run_id = run_id_for(cfg, seed)
    writer = _RunWriter(out / "runs" / run_id, run_id, seed)
    ckpt = out / "checkpoints" / run_id
    ckpt.mkdir(parents=True, exist_ok=True)
    factory = sac_factory(cfg.learner)
    eval_envs: dict[str, Any] = {}

    def after(row: EpisodeRow, learner, task: TaskSpec) -> None:
        if cfg.eval_every and row.episode % cfg.eval_every == 0:
            env = eval_envs.setdefault(task.name, default_env_factory(task))
            ret, rep = run_episode(env, learner, task.reward, eval_seed(seed, row.episode), learn=False)
            writer.evaluation(EpisodeRow(row.stage, row.episode, ret, rep.frac_top, rep.frac_bottom, rep.frac_overall, 0))

    try:
        plan = cfg.build_plan()
        if plan is None:
            record = run_direct(
                cfg.target_task, cfg.direct_params(), cfg.episodes, seed,
                learner_factory=factory, on_episode=writer.episode, after_episode=after,
            )
            record.learners[0].export_params().save(ckpt / f"stage0_ep{cfg.episodes}.params")
        else:
            record = kcac_run(
                plan, learner_factory=factory, seed=seed, on_episode=writer.episode,
                on_transfer=writer.transfer, checkpoint_dir=ckpt, after_episode=after,
            )
    finally:
        writer.close()
    record.learners = []
    return {"run_id": run_id, "seed": seed, "episodes": len(record.rows), "transfers": len(record.transfers), "record": record}


def _prepare_output(cfg: ExperimentConfig) -> Path:
    out = Path(os.environ.get(OUT_ENV_VAR) or cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as e:
        raise OutputError(f"output directory {out} is not writable: {e}") from None
    return out


def _write_manifest(out: Path, cfg: ExperimentConfig, plan_desc: dict, status: str, runs: list[dict]) -> dict:
    manifest = {
        "name": cfg.name,
        "version": __version__,
        "backend": backend_name(),
        "config_hash": cfg.config_hash(),
        "config": cfg.to_dict(),
        "seeds": list(cfg.seeds),
        "status": status,
        "plan": plan_desc,
        "env": cfg.env.to_dict(),
        "target": cfg.target,
        "success_metric": cfg.target_task.success_metric.value,
        "runs": runs,
    }
    tmp = out / "manifest.json.tmp"
    tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    tmp.replace(out / "manifest.json")
    return manifest


@dataclass
class ExperimentResult:
    output_dir: Path
    manifest: dict
    records: list


def _plan_description(cfg: ExperimentConfig) -> dict:
    plan = cfg.build_plan()
    if plan is None:
        desc = {
            "kind": "direct",
            "stages": [{"task": cfg.target, "episodes": cfg.episodes, "params": cfg.direct_params().to_dict()}],
            "transitions": [cfg.episodes],
        }
    else:
        desc = {"kind": "auto" if "auto" in cfg.plan else "stages", **plan.describe()}
    for stage, preset in zip(desc["stages"], cfg.base_presets()):
        stage["preset"] = preset
    return desc


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    out = _prepare_output(cfg)
    plan_desc = _plan_description(cfg)
    _write_manifest(out, cfg, plan_desc, "incomplete", [])
    if cfg.workers > 1 and len(cfg.seeds) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.workers, len(cfg.seeds))) as pool:
            summaries = list(pool.map(run_seed, [cfg] * len(cfg.seeds), cfg.seeds, [str(out)] * len(cfg.seeds)))
    else:
        summaries = [run_seed(cfg, s, out) for s in cfg.seeds]
    records = [s.pop("record") for s in summaries]

    # combined files in seed order, assembled from the per-run streams
    with open(out / "metrics.csv", "w", newline="") as fc, open(out / "metrics.jsonl", "w") as fj, open(
        out / "transfers.jsonl", "w"
    ) as ft:
        fc.write(",".join(METRIC_FIELDS) + "\n")
        for s in summaries:
            run_dir = out / "runs" / s["run_id"]
            lines = (run_dir / "metrics.csv").read_text().splitlines(keepends=True)
            fc.writelines(lines[1:])
            fj.write((run_dir / "metrics.jsonl").read_text())
            ft.write((run_dir / "transfers.jsonl").read_text())
    manifest = _write_manifest(out, cfg, plan_desc, "complete", summaries)
    return ExperimentResult(out, manifest, records)


# --------------------------------------------------------------------------
# comparison
# --------------------------------------------------------------------------


def read_metrics(path: str | Path) -> list[dict]:
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    for r in rows:
        r["seed"] = int(r["seed"])
        r["stage"] = int(r["stage"])
        r["episode"] = int(r["episode"])
        for k in ("episodic_reward", "frac_top", "frac_bottom", "frac_overall"):
            r[k] = float(r[k])
    return rows


def load_run(run_dir: str | Path) -> tuple[dict, dict[int, np.ndarray]]:
    """Manifest and per-seed frac_top series (indexed by cumulative episode - 1)."""
    run_dir = Path(run_dir)
    try:
        manifest = json.loads((run_dir / "manifest.json").read_text())
    except FileNotFoundError:
        raise ConfigurationError(f"{run_dir} has no manifest.json") from None
    if manifest.get("status") != "complete":
        raise KcacError(f"run {run_dir} is not complete (status {manifest.get('status')!r})")
    series: dict[int, list[tuple[int, float]]] = {}
    for r in read_metrics(run_dir / "metrics.csv"):
        series.setdefault(r["seed"], []).append((r["episode"], r["frac_top"]))
    out = {}
    for seed, pts in series.items():
        pts.sort()
        out[seed] = np.array([v for _, v in pts])
    return manifest, out


def trailing_mean(x: np.ndarray, window: int) -> np.ndarray:
    """Mean of the last ``window`` values at each position (fewer at the start). ``window=1`` is the identity."""
    if window <= 1:
        return np.asarray(x, dtype=float)
    c = np.concatenate([[0.0], np.cumsum(x, dtype=float)])
    idx = np.arange(1, len(x) + 1)
    lo = np.maximum(idx - window, 0)
    return (c[idx] - c[lo]) / (idx - lo)


def _first_at_or_above(x: np.ndarray, threshold: float) -> int | None:
    hits = np.nonzero(x >= threshold)[0]
    return int(hits[0]) + 1 if hits.size else None


@dataclass(frozen=True)
class RunSummary:
    name: str
    seeds: tuple[int, ...]
    total_episodes: int
    episodes_to_threshold: int | None  # median-over-seeds curve, cumulative episodes
    per_seed_episodes: tuple[int | None, ...]
    mean_episodes_to_threshold: float | None  # over seeds that reached it
    final_mean: float
    final_sd: float

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "seeds": list(self.seeds),
            "total_episodes": self.total_episodes,
            "episodes_to_threshold": self.episodes_to_threshold if self.episodes_to_threshold is not None else "not reached",
            "per_seed_episodes_to_threshold": [e if e is not None else "not reached" for e in self.per_seed_episodes],
            "mean_episodes_to_threshold": self.mean_episodes_to_threshold,
            "final_success_mean": self.final_mean,
            "final_success_sd": self.final_sd,
        }


@dataclass(frozen=True)
class ComparisonReport:
    threshold: float
    smooth: int
    final_window: int
    baseline: RunSummary
    candidate: RunSummary
    reduction_pct: float | None
    success_improvement: float
    relative_success_improvement_pct: float | None

    @property
    def candidate_reached(self) -> bool:
        return self.candidate.episodes_to_threshold is not None

    @property
    def candidate_no_worse(self) -> bool:
        """Candidate reaches the threshold, and no later than the baseline (if the baseline reaches it at all)."""
        c, b = self.candidate.episodes_to_threshold, self.baseline.episodes_to_threshold
        return c is not None and (b is None or c <= b)

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "smooth": self.smooth,
            "final_window": self.final_window,
            "baseline": self.baseline.to_dict(),
            "candidate": self.candidate.to_dict(),
            "reduction_pct": self.reduction_pct if self.reduction_pct is not None else "not reached",
            "success_improvement": self.success_improvement,
            "relative_success_improvement_pct": self.relative_success_improvement_pct,
        }

    def to_text(self) -> str:
        def ett(s: RunSummary) -> str:
            return "not reached" if s.episodes_to_threshold is None else str(s.episodes_to_threshold)

        lines = [f"threshold frac_top >= {self.threshold} (median over seeds, trailing mean window {self.smooth})"]
        for label, s in (("baseline", self.baseline), ("candidate", self.candidate)):
            lines.append(
                f"{label:9s} {s.name}: episodes-to-threshold {ett(s)} of {s.total_episodes}; "
                f"final success {s.final_mean:.3f} +/- {s.final_sd:.3f} over {len(s.seeds)} seeds"
            )
        red = "n/a (not reached)" if self.reduction_pct is None else f"{self.reduction_pct:.1f}%"
        lines.append(f"training-time reduction: {red}")
        rel = "" if self.relative_success_improvement_pct is None else f" ({self.relative_success_improvement_pct:+.1f}%)"
        lines.append(f"success improvement: {self.success_improvement:+.4f}{rel}")
        return "\n".join(lines)


def summarize_run(
    name: str, series: dict[int, np.ndarray], threshold: float, smooth: int = 1, final_window: int = 10
) -> RunSummary:
    seeds = tuple(sorted(series))
    length = min(len(series[s]) for s in seeds)
    curves = np.stack([trailing_mean(series[s][:length], smooth) for s in seeds])
    median = np.median(curves, axis=0)
    per_seed = tuple(_first_at_or_above(c, threshold) for c in curves)
    reached = [e for e in per_seed if e is not None]
    finals = [float(np.mean(series[s][:length][-final_window:])) for s in seeds]
    return RunSummary(
        name=name,
        seeds=seeds,
        total_episodes=length,
        episodes_to_threshold=_first_at_or_above(median, threshold),
        per_seed_episodes=per_seed,
        mean_episodes_to_threshold=float(np.mean(reached)) if reached else None,
        final_mean=float(np.mean(finals)),
        final_sd=statistics.pstdev(finals) if len(finals) > 1 else 0.0,
    )


def compare_series(
    baseline: RunSummary | tuple[str, dict],
    candidate: RunSummary | tuple[str, dict],
    threshold: float = 0.8,
    smooth: int = 1,
    final_window: int = 10,
) -> ComparisonReport:
    if not isinstance(baseline, RunSummary):
        baseline = summarize_run(*baseline, threshold, smooth, final_window)
    if not isinstance(candidate, RunSummary):
        candidate = summarize_run(*candidate, threshold, smooth, final_window)
    b, c = baseline.episodes_to_threshold, candidate.episodes_to_threshold
    reduction = 100.0 * (1.0 - c / b) if (b is not None and c is not None) else None
    diff = candidate.final_mean - baseline.final_mean
    rel = 100.0 * diff / baseline.final_mean if baseline.final_mean > 0 else None
    return ComparisonReport(threshold, smooth, final_window, baseline, candidate, reduction, diff, rel)


def compare_runs(
    baseline_dir: str | Path,
    candidate_dir: str | Path,
    threshold: float = 0.8,
    smooth: int = 1,
    final_window: int = 10,
) -> ComparisonReport:
    if not (0.0 <= threshold <= 1.0):
        raise ConfigurationError(f"threshold must lie in [0, 1], got {threshold}")
    if smooth < 1 or final_window < 1:
        raise ConfigurationError("smooth and final_window must be >= 1")
    mb, sb = load_run(baseline_dir)
    mc, sc = load_run(candidate_dir)
    if mb["env"] != mc["env"]:
        raise ComparisonError("runs use different environment configs")
    if mb["success_metric"] != mc["success_metric"]:
        raise ComparisonError(f"success metrics differ: {mb['success_metric']} vs {mc['success_metric']}")
    return compare_series((mb["name"], sb), (mc["name"], sc), threshold, smooth, final_window)


# --------------------------------------------------------------------------
# similarity
# --------------------------------------------------------------------------


def emit_similarity(cfg: ExperimentConfig) -> SimilarityMatrix:
    """Similarity over the auto registry plus the target, or over every task for other plans."""
    if isinstance(cfg.plan, dict) and "auto" in cfg.plan:
        names = [n for n in cfg.plan["auto"]["registry"] if n != cfg.target] + [cfg.target]
    else:
        names = [t.name for t in cfg.tasks]
    return similarity_matrix([(n, cfg.task(n).reward) for n in names])
