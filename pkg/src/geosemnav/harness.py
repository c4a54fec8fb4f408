"""Run configuration, batch evaluation, trace files and replay checking.

An episode run leaves two artifacts per seed: a result JSON (the
:class:`~geosemnav.agent.EpisodeResult`) and a step-trace JSON-lines file.
Batch summaries are plain recomputations over those artifacts, so a summary
can always be audited against the files it came from.
"""

from __future__ import annotations

import dataclasses
import json
import statistics
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

from .agent import AgentParams, BASELINES, Episode, EpisodeResult
from .geosem import LandmarkParams
from .knowledge import (
    KnowledgeParams,
    TripleStore,
    bundled_corpus,
    export_triples,
    ingest_corpus,
    load_scene_graphs,
)
from .perception import ClassTable, DetectorModel, bundled_class_table, load_class_table
from .world import (
    Action,
    ActionModel,
    Floorplan,
    RobotState,
    apply_action,
    is_success,
    load_floorplan_file,
)


class ConfigError(ValueError):
    """A run configuration references missing files or illegal values."""


_PARAM_GROUPS = {
    "knowledge": KnowledgeParams,
    "landmark": LandmarkParams,
    "agent": AgentParams,
    "detector": DetectorModel,
    "action": ActionModel,
}


@dataclass(frozen=True)
class RunConfig:
    """Everything one evaluation needs, file paths plus module parameters.

    ``floorplan`` and ``corpus`` accept either a filesystem path or the bare
    name of a bundled asset (``office_fig3``, ``webots_replica``,
    ``corpus_mini``).
    """

    floorplan: str
    target: str
    corpus: str | None = None
    class_table: str | None = None
    seeds: tuple[int, ...] = (0,)
    out_dir: str | None = None
    knowledge: KnowledgeParams = field(default_factory=KnowledgeParams)
    landmark: LandmarkParams = field(default_factory=LandmarkParams)
    agent: AgentParams = field(default_factory=AgentParams)
    detector: DetectorModel = field(default_factory=DetectorModel)
    action: ActionModel = field(default_factory=ActionModel)

    def __post_init__(self):
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))

    @staticmethod
    def from_dict(raw: dict) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")
        known = {f.name for f in fields(RunConfig)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(raw)
        for group, cls in _PARAM_GROUPS.items():
            if group not in kwargs:
                continue
            sub = kwargs[group]
            if not isinstance(sub, dict):
                raise ConfigError(f"config key {group!r} must be an object")
            names = {f.name for f in fields(cls)}
            bad = set(sub) - names
            if bad:
                raise ConfigError(f"unknown {group} fields: {sorted(bad)}")
            if "durations" in sub:  # JSON keys are action names
                sub = dict(sub, durations={Action(k): v for k, v in sub["durations"].items()})
            try:
                kwargs[group] = cls(**sub)
            except (TypeError, ValueError) as e:
                raise ConfigError(f"bad {group} params: {e}") from e
        for key in ("floorplan", "target"):
            if key not in kwargs:
                raise ConfigError(f"config is missing {key!r}")
        try:
            return RunConfig(**kwargs)
        except (TypeError, ValueError) as e:
            raise ConfigError(str(e)) from e

    @staticmethod
    def from_file(path: str | Path) -> "RunConfig":
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        try:
            raw = json.loads(p.read_text())
        except json.JSONDecodeError as e:
            raise ConfigError(f"config is not valid JSON: {e}") from e
        return RunConfig.from_dict(raw)

    def override(self, dotted: str, value: str) -> "RunConfig":
        """Apply one ``group.field=value`` override, parsing value as JSON."""
        try:
            parsed = json.loads(value)
        except json.JSONDecodeError:
            parsed = value  # bare strings are fine
        if "." in dotted:
            group, name = dotted.split(".", 1)
            if group not in _PARAM_GROUPS:
                raise ConfigError(f"unknown parameter group {group!r}")
            params = getattr(self, group)
            if name not in {f.name for f in fields(params)}:
                raise ConfigError(f"unknown field {dotted!r}")
            if name == "durations":
                parsed = {Action(k): v for k, v in parsed.items()}
            try:
                return replace(self, **{group: replace(params, **{name: parsed})})
            except (TypeError, ValueError) as e:
                raise ConfigError(f"bad value for {dotted}: {e}") from e
        if dotted not in {f.name for f in fields(RunConfig)}:
            raise ConfigError(f"unknown field {dotted!r}")
        if dotted == "seeds" and isinstance(parsed, (int, float)):
            parsed = (int(parsed),)
        return replace(self, **{dotted: parsed})


# -- asset resolution ----------------------------------------------------------


def _resolve_bundled(name: str) -> Path | None:
    ref = resources.files("geosemnav.data").joinpath(f"{name}.json")
    with resources.as_file(ref) as p:
        return p if p.is_file() else None


def resolve_asset(spec: str, kind: str) -> Path:
    """Turn a path-or-bundled-name string into a real file path."""
    p = Path(spec)
    if p.is_file():
        return p
    if "/" not in spec and not spec.endswith(".json"):
        bundled = _resolve_bundled(spec)
        if bundled is not None:
            return bundled
    raise ConfigError(f"{kind} not found: {spec}")


def load_world(config: RunConfig) -> tuple[Floorplan, RobotState, ClassTable]:
    """Load the floorplan, its start pose and the class table for a config."""
    if config.class_table is None:
        table = bundled_class_table()
    else:
        table = load_class_table(resolve_asset(config.class_table, "class table").read_text())
    try:
        plan = load_floorplan_file(resolve_asset(config.floorplan, "floorplan"))
    except (ValueError, KeyError) as e:
        raise ConfigError(f"bad floorplan: {e}") from e
    if plan.start is None:
        raise ConfigError(f"floorplan {plan.name!r} declares no start pose")
    if config.target not in table:
        raise ConfigError(f"unknown target class {config.target!r}")
    x, y, heading = plan.start
    return plan, RobotState(x, y, heading), table


def build_store(config: RunConfig, class_table: ClassTable) -> TripleStore:
    """Fresh knowledge store per episode; online updates must not leak across runs."""
    if config.corpus is None:
        graphs = bundled_corpus()
    else:
        graphs = load_scene_graphs(resolve_asset(config.corpus, "corpus").read_text())
    return ingest_corpus(graphs, config.knowledge, class_table)


# -- single runs and artifacts -------------------------------------------------


def run_one(config: RunConfig, seed: int, policy: str | None = None) -> tuple[EpisodeResult, Episode]:
    """Run one seeded episode; returns the result and the episode for its trace."""
    if policy is not None and policy not in BASELINES:
        raise ConfigError(f"unknown policy {policy!r}; choose from {sorted(BASELINES)}")
    plan, start, table = load_world(config)
    store = build_store(config, table)
    ep = Episode(
        plan,
        start,
        config.target,
        store,
        table,
        detector=config.detector,
        action_model=config.action,
        agent_params=config.agent,
        landmark_params=config.landmark,
        seed=seed,
    )
    result = ep.run(BASELINES[policy] if policy else None)
    return result, ep


def episode_stem(result: EpisodeResult, policy: str | None = None) -> str:
    tag = f"_{policy}" if policy else ""
    return f"{result.plan_name}_{result.target}{tag}_s{result.seed}"


def write_episode(
    out_dir: str | Path, result: EpisodeResult, episode: Episode, policy: str | None = None
) -> tuple[Path, Path]:
    """Write ``<stem>.result.json`` and ``<stem>.trace.jsonl``; returns both paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = episode_stem(result, policy)
    result_path = out / f"{stem}.result.json"
    trace_path = out / f"{stem}.trace.jsonl"
    result_path.write_text(result.to_json(indent=2) + "\n")
    trace_path.write_text(episode.gmap.export_trace())
    return result_path, trace_path


# -- batches and summaries -------------------------------------------------------


@dataclass(frozen=True)
class BatchSummary:
    """Min/max/mean shape of the timing table, plus success rate."""

    plan_name: str
    target: str
    policy: str
    n: int
    success_rate: float
    sim_time_min: float
    sim_time_max: float
    sim_time_mean: float
    steps_min: int
    steps_max: int
    steps_mean: float
    steps_median: float

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    def table(self) -> str:
        rows = [
            ("episodes", str(self.n)),
            ("success rate", f"{self.success_rate:.2f}"),
            ("sim time min/max/mean (s)",
             f"{self.sim_time_min:.1f} / {self.sim_time_max:.1f} / {self.sim_time_mean:.1f}"),
            ("steps min/max/mean", f"{self.steps_min} / {self.steps_max} / {self.steps_mean:.1f}"),
            ("steps median", f"{self.steps_median:.1f}"),
        ]
        width = max(len(k) for k, _ in rows)
        head = f"{self.policy} on {self.plan_name} -> {self.target}"
        return "\n".join([head] + [f"  {k.ljust(width)}  {v}" for k, v in rows])


def summarize(results: list[EpisodeResult], policy: str = "agent") -> BatchSummary:
    if not results:
        raise ConfigError("cannot summarize zero episodes")
    times = [r.sim_time_s for r in results]
    steps = [r.steps for r in results]
    return BatchSummary(
        plan_name=results[0].plan_name,
        target=results[0].target,
        policy=policy,
        n=len(results),
        success_rate=sum(r.success for r in results) / len(results),
        sim_time_min=min(times),
        sim_time_max=max(times),
        sim_time_mean=statistics.fmean(times),
        steps_min=min(steps),
        steps_max=max(steps),
        steps_mean=statistics.fmean(steps),
        steps_median=float(statistics.median(steps)),
    )


def run_batch(
    config: RunConfig, policy: str | None = None
) -> tuple[BatchSummary, list[EpisodeResult]]:
    """Run every seed in the config; writes artifacts when out_dir is set."""
    results = []
    for seed in config.seeds:
        result, ep = run_one(config, seed, policy)
        if config.out_dir:
            write_episode(config.out_dir, result, ep, policy)
        results.append(result)
    summary = summarize(results, policy or "agent")
    if config.out_dir:
        stem = f"{results[0].plan_name}_{results[0].target}_{policy or 'agent'}"
        (Path(config.out_dir) / f"{stem}.summary.json").write_text(summary.to_json() + "\n")
    return summary, results


def load_results(paths: list[str | Path]) -> list[EpisodeResult]:
    """Read persisted result files back into EpisodeResult records."""
    out = []
    for path in paths:
        raw = json.loads(Path(path).read_text())
        raw["final_pose"] = tuple(raw["final_pose"])
        out.append(EpisodeResult(**raw))
    return out


def summarize_files(paths: list[str | Path], policy: str = "agent") -> BatchSummary:
    """Recompute a summary from per-episode files (audit path)."""
    return summarize(load_results(paths), policy)


# -- corpus ingestion -------------------------------------------------------------


def ingest(
    corpus: str,
    out_path: str | Path | None = None,
    params: KnowledgeParams | None = None,
    class_table: ClassTable | None = None,
) -> TripleStore:
    """Corpus JSON in, triple-store text export out."""
    table = class_table or bundled_class_table()
    graphs = load_scene_graphs(resolve_asset(corpus, "corpus").read_text())
    store = ingest_corpus(graphs, params or KnowledgeParams(), table)
    if out_path is not None:
        Path(out_path).write_text(export_triples(store))
    return store


# -- trace replay ---------------------------------------------------------------


@dataclass
class ReplayReport:
    """Outcome of re-executing a recorded trace against the world rules."""

    ok: bool
    final_pose: tuple[int, int, int]
    success: bool
    n_records: int
    n_blocked: int
    mismatches: list[str] = field(default_factory=list)


def parse_trace(text: str) -> list[dict]:
    records = []
    for i, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise ConfigError(f"trace line {i}: not valid JSON ({e})") from e
        for key in ("pose", "action", "blocked"):
            if key not in rec:
                raise ConfigError(f"trace line {i}: missing {key!r}")
        records.append(rec)
    if not records:
        raise ConfigError("trace is empty")
    if records[0]["action"] is not None:
        raise ConfigError("trace must start with the initial (action=null) frame")
    return records


def replay_trace(
    plan: Floorplan,
    trace_text: str,
    target: str,
    class_table: ClassTable | None = None,
    detector: DetectorModel | None = None,
    action_model: ActionModel | None = None,
) -> ReplayReport:
    """Re-execute a step trace; verify every pose and blocked flag matches.

    The success flag is recomputed from the final pose with the deterministic
    visibility check, so a replayed trace cannot smuggle in a fake win.
    """
    table = class_table or bundled_class_table()
    detector = detector or DetectorModel()
    model = action_model or ActionModel()
    records = parse_trace(trace_text)
    x, y, heading = records[0]["pose"]
    state = RobotState(int(x), int(y), int(heading))
    mismatches: list[str] = []
    n_blocked = 0
    if not plan.is_traversable(state.x, state.y):
        mismatches.append(f"record 0: start {state.xy} is not traversable")
    for i, rec in enumerate(records[1:], start=1):
        action = Action(rec["action"])
        ns, blocked = apply_action(state, action, plan, model)
        if blocked != bool(rec["blocked"]):
            mismatches.append(
                f"record {i}: blocked={blocked} but trace says {rec['blocked']}"
            )
        if blocked:
            n_blocked += 1
        else:
            state = ns
        got = [state.x, state.y, state.heading_deg]
        if got != list(rec["pose"]):
            mismatches.append(f"record {i}: pose {got} != recorded {rec['pose']}")
            break  # later poses are meaningless once diverged
    success = is_success(state, plan, target, detector, table)
    return ReplayReport(
        ok=not mismatches,
        final_pose=(state.x, state.y, state.heading_deg),
        success=success,
        n_records=len(records),
        n_blocked=n_blocked,
        mismatches=mismatches,
    )


def replay_file(config: RunConfig, trace_path: str | Path) -> ReplayReport:
    plan, _, table = load_world(config)
    p = Path(trace_path)
    if not p.is_file():
        raise ConfigError(f"trace file not found: {p}")
    return replay_trace(
        plan, p.read_text(), config.target, table, config.detector, config.action
    )
