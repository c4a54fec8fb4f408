"""Navigation policy: area filtering, relation-guided motion, bypass moves.

The agent never reads the floorplan directly for deciding where to go; it
sees only ego frames.  The plan is consulted solely as the collision oracle
(probing whether a motion would be blocked), standing in for the proximity
sensing a real platform would have.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .geosem import GeoSemMap, LandmarkParams
from .knowledge import TripleStore
from .perception import ClassTable, DetectorModel, EgoScene, detect, render_ego, segment_areas
from .world import (
    Action,
    ActionModel,
    Floorplan,
    ObjectInstance,
    RayCaster,
    RobotState,
    ROTATIONS,
    TRANSLATIONS,
    apply_action,
    blocking_entity,
    is_success,
)


@dataclass(frozen=True)
class AgentParams:
    tau_zone: float = 0.15  # below this the zone looks wrong for the target
    k_areas: int = 3
    tie_break: tuple[int, ...] | None = None  # area priority; default center-out
    bypass_max_cells: int = 6
    immediate_block_cells: float = 1.5  # obstacle this close discards its area

    def __post_init__(self) -> None:
        if not (0.0 < self.tau_zone < 1.0):
            raise ValueError("tau_zone must be in (0, 1)")
        if self.k_areas < 1:
            raise ValueError("k_areas must be >= 1")

    def priority(self) -> tuple[int, ...]:
        if self.tie_break is not None:
            return self.tie_break
        mid = self.k_areas // 2
        order = [mid]
        for off in range(1, self.k_areas):
            for i in (mid - off, mid + off):
                if 0 <= i < self.k_areas:
                    order.append(i)
        return tuple(order)


@dataclass
class Decision:
    actions: list[Action]
    rule: str
    area_index: int | None = None
    area_scores: dict[int, float] = field(default_factory=dict)
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "rule": self.rule,
            "actions": [a.value for a in self.actions],
            "area_index": self.area_index,
            "area_scores": {str(k): round(v, 6) for k, v in self.area_scores.items()},
            "note": self.note,
        }


def _bearing_of(x_img: float, fov_deg: float) -> float:
    return (x_img - 0.5) * fov_deg


def _turn_toward(bearing: float) -> Action:
    # positive bearing = right half of the frame
    return Action.ROTATE_RIGHT if bearing > 0 else Action.ROTATE_LEFT


def _approach(bearing: float, model: ActionModel) -> list[Action]:
    if abs(bearing) > model.rotation_deg / 2.0:
        return [_turn_toward(bearing)]
    return [Action.FORWARD]


def _enter_area(area_index: int, k: int, bearing: float, model: ActionModel) -> list[Action]:
    if area_index == k // 2:
        return [Action.FORWARD]
    if abs(bearing) > model.rotation_deg / 2.0:
        return [_turn_toward(bearing)]
    # near-diagonal side area: commit the turn, then step out
    return [_turn_toward(bearing if bearing != 0 else (-1 if area_index < k // 2 else 1)), Action.FORWARD]


def decide(
    ego: EgoScene,
    target: str,
    knowledge: TripleStore,
    gmap: GeoSemMap,
    params: AgentParams,
    model: ActionModel,
    plan: Floorplan,
) -> Decision:
    """One pass of the rule cascade over a segmented frame."""
    if not ego.areas:
        raise ValueError("frame must be segmented into areas before deciding")
    table = knowledge.class_table
    fov = ego.fov_deg

    # (1) diminishing landmark score: go back to the best open point
    if gmap.is_low():
        bp = gmap.best_backtrack_point()
        if bp is not None:
            cur = gmap.current_pose()
            path = gmap.path_to(plan, cur, bp, model)
            scan = [Action.ROTATE_LEFT] * (360 // model.rotation_deg)
            gmap.mark_backtrack()
            return Decision(path + scan, "backtrack", note=f"to {bp}")

    # (2) drop unusable areas
    surviving = [a for a in ego.areas if not a.has_restricted]
    kept = []
    for a in surviving:
        close_obstacle = any(
            d.distance <= params.immediate_block_cells
            for d in (ego.detections[i] for i in a.detection_indices)
            if d.class_name in table and table[d.class_name].obstacle
        )
        if not (a.has_obstacle and close_obstacle):
            kept.append(a)
    surviving = kept

    def detections_of(area):
        return [ego.detections[i] for i in area.detection_indices]

    if surviving:
        # (3) wrong zone + visible opening: head for the door
        zone_prob = knowledge.zone_relation(
            [d.class_name for d in ego.non_extension()], target
        )
        if zone_prob < params.tau_zone:
            openings = [
                (a, d)
                for a in surviving
                for d in ego.detections
                if d.class_name in ("door", "opening")
                and a.x_lo <= d.centroid_x < a.x_hi
                and a.has_opening
            ]
            if openings:
                order = {idx: r for r, idx in enumerate(params.priority())}
                area, door = min(
                    openings, key=lambda t: order.get(t[0].index, len(order))
                )
                b = _bearing_of(door.centroid_x, fov)
                return Decision(
                    _approach(b, model), "opening", area.index, note=f"zone_prob={zone_prob:.3f}"
                )

        # (4) relational pull: argmax of Σ rp·confidence per area
        scores: dict[int, float] = {}
        bearings: dict[int, float] = {}
        any_relational = False
        for a in surviving:
            num = 0.0
            wsum = 0.0
            bsum = 0.0
            for d in detections_of(a):
                if d.extension or d.class_name not in table:
                    continue
                if not (table[d.class_name].relational or d.class_name == target):
                    continue
                any_relational = True
                w = (1.0 if d.class_name == target else knowledge.rp(d.class_name, target)) * d.confidence
                num += w
                wsum += w
                bsum += w * _bearing_of(d.centroid_x, fov)
            scores[a.index] = num
            center = (a.x_lo + a.x_hi) / 2.0
            bearings[a.index] = bsum / wsum if wsum > 0 else _bearing_of(center, fov)
        if any_relational:
            order = {idx: r for r, idx in enumerate(params.priority())}
            best = max(
                scores,
                key=lambda i: (scores[i], -order.get(i, len(order))),
            )
            return Decision(
                _approach(bearings[best], model), "relational", best, area_scores=scores
            )

        # (5) open floor
        free = [a for a in surviving if a.has_free_space]
        if free:
            order = {idx: r for r, idx in enumerate(params.priority())}
            area = min(free, key=lambda a: order.get(a.index, len(order)))
            b = _bearing_of((area.x_lo + area.x_hi) / 2.0, fov)
            return Decision(
                _enter_area(area.index, params.k_areas, b, model), "free_space", area.index
            )

    # (6) nowhere to go: undo the last step
    last_move = next(
        (r.action_taken for r in reversed(gmap.steps) if r.action_taken in TRANSLATIONS),
        None,
    )
    if last_move is Action.FORWARD:
        return Decision([Action.BACKWARD], "last_step")
    return Decision([Action.ROTATE_LEFT], "last_step")



def manhattan_bypass(
    plan: Floorplan,
    state: RobotState,
    model: ActionModel,
    max_cells: int = 6,
    side_order: tuple[Action, ...] = (Action.ROTATE_RIGHT, Action.ROTATE_LEFT),
) -> list[Action] | None:
    """Grid detour around an obstacle straight ahead.

    Probes one side, then the other: step laterally until the original
    direction clears, advance past the obstacle, then rejoin the original
    trajectory line with the original heading.  Returns None when both
    sides fail within ``max_cells``.
    """
    quarter = 90 // model.rotation_deg  # rotations per 90°

    def probe(seq: list[Action], s: RobotState) -> RobotState | None:
        for a in seq:
            s, blocked = apply_action(s, a, plan, model)
            if blocked:
                return None
        return s

    def try_side(first_turn: Action) -> list[Action] | None:
        back_turn = (
            Action.ROTATE_LEFT if first_turn is Action.ROTATE_RIGHT else Action.ROTATE_RIGHT
        )
        seq: list[Action] = [first_turn] * quarter
        s = probe(seq, state)
        if s is None:
            return None
        lateral = 0
        while lateral < max_cells:
            s2 = probe([Action.FORWARD], s)
            if s2 is None:
                return None
            s = s2
            seq.append(Action.FORWARD)
            lateral += 1
            if probe([back_turn] * quarter + [Action.FORWARD], s) is not None:
                break
        else:
            return None
        seq.extend([back_turn] * quarter)
        s = probe([back_turn] * quarter, s)
        advanced = 0
        while advanced <= max_cells:
            s2 = probe([Action.FORWARD], s)
            if s2 is None:
                return None
            s = s2
            seq.append(Action.FORWARD)
            advanced += 1
            rejoin = [back_turn] * quarter + [Action.FORWARD] * lateral + [first_turn] * quarter
            if probe(rejoin, s) is not None:
                seq.extend(rejoin)
                return seq
        return None

    for side in side_order:
        found = try_side(side)
        if found:
            return found
    return None


@dataclass
class EpisodeResult:
    success: bool
    actions: list[str]
    sim_time_s: float
    steps: int
    landmark_trace: list[float]
    termination: str  # found | scan_full | budget
    final_pose: tuple[int, int, int]
    target: str
    plan_name: str
    seed: int
    decisions: list[dict] = field(default_factory=list)

    def to_json(self, indent: int | None = None) -> str:
        d = dict(self.__dict__)
        d["final_pose"] = list(self.final_pose)
        d["sim_time_s"] = round(self.sim_time_s, 6)
        d["landmark_trace"] = [round(v, 9) for v in self.landmark_trace]
        return json.dumps(d, indent=indent)


class Episode:
    """One navigation run: world stepping, frame processing, bookkeeping.

    The same machinery drives the autonomous agent, the trivial baselines and
    live human sessions, so all of them share success semantics and timing.
    """

    def __init__(
        self,
        plan: Floorplan,
        start: RobotState,
        target: str,
        store: TripleStore,
        class_table: ClassTable,
        detector: DetectorModel | None = None,
        action_model: ActionModel | None = None,
        agent_params: AgentParams | None = None,
        landmark_params: LandmarkParams | None = None,
        seed: int = 0,
        caster: RayCaster | None = None,
    ):
        if target not in class_table:
            raise KeyError(f"unknown class name {target!r}")
        if not class_table[target].target_eligible:
            raise ValueError(f"class {target!r} is not an eligible target")
        class_table.validate_plan(plan)
        if not plan.is_traversable(start.x, start.y):
            raise ValueError(f"start cell {start.xy} is not traversable")
        self.plan = plan
        self.state = start
        self.target = target
        self.store = store
        self.class_table = class_table
        self.detector = detector or DetectorModel()
        self.model = action_model or ActionModel()
        self.params = agent_params or AgentParams()
        self.lm_params = landmark_params or LandmarkParams()
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.caster = caster or RayCaster(plan)
        self.gmap = GeoSemMap(self.lm_params, self.model.rotation_deg)
        self.sim_time = 0.0
        self.actions: list[Action] = []
        self.decisions: list[Decision] = []
        self.queue: deque[Action] = deque()
        self.success = False
        self.last_ego: EgoScene | None = None
        self._did_initial_scan = False

    # -- frame pipeline -----------------------------------------------------

    def process_frame(self, action: Action | None, blocked: bool = False) -> EgoScene:
        truth = render_ego(self.state, self.plan, self.class_table, self.detector, self.caster)
        ego = detect(truth, self.detector, self.rng)
        ego = segment_areas(ego, self.class_table, self.params.k_areas)
        self.sim_time += ego.latency_s
        zone_guess = self.store.infer_zone([d.class_name for d in ego.non_extension()])
        self.store.update_relations(ego, zone_guess)
        self.gmap.update(action, ego, self.state, self.sim_time, self.target, self.store, blocked)
        self.last_ego = ego
        if not self.success:
            self.success = is_success(
                self.state, self.plan, self.target, self.detector, self.class_table, self.caster
            )
        return ego

    def execute(self, action: Action) -> bool:
        """Apply one action if possible; returns False when it would block."""
        ns, blocked = apply_action(self.state, action, self.plan, self.model)
        if blocked:
            return False
        self.state = ns
        self.sim_time += self.model.duration(action)
        self.actions.append(action)
        self.process_frame(action)
        return True

    def step_external(self, action: Action) -> tuple[EgoScene, bool]:
        """Apply an action chosen outside the decision loop (live play, replay).

        Unlike :meth:`execute` a blocked attempt still costs its duration and
        is logged, because a human player really did spend that time bumping
        into the wall.
        """
        ns, blocked = apply_action(self.state, action, self.plan, self.model)
        if not blocked:
            self.state = ns
        self.sim_time += self.model.duration(action)
        self.actions.append(action)
        ego = self.process_frame(action, blocked=blocked)
        return ego, blocked

    def rotation_scan(self) -> list[tuple[int, EgoScene]]:
        """Full turn in place, one processed frame per heading."""
        out = []
        for _ in range(360 // self.model.rotation_deg):
            self.execute(Action.ROTATE_LEFT)
            out.append((self.state.heading_deg, self.last_ego))
        return out

    # -- the decision loop ---------------------------------------------------

    def _frame_suggests_anything(self, ego: EgoScene) -> bool:
        for d in ego.detections:
            if d.class_name == self.target:
                return True
            if d.class_name in ("door", "opening"):
                return True
            if not d.extension and d.class_name in self.class_table and self.class_table[
                d.class_name
            ].relational:
                return True
        return False

    def _next_decision(self) -> Decision:
        if not self._did_initial_scan and not self._frame_suggests_anything(self.last_ego):
            self._did_initial_scan = True
            return Decision(
                [Action.ROTATE_LEFT] * (360 // self.model.rotation_deg), "initial_scan"
            )
        self._did_initial_scan = True
        return decide(
            self.last_ego, self.target, self.store, self.gmap, self.params, self.model, self.plan
        )

    def _on_blocked(self, action: Action) -> Decision | None:
        self.queue.clear()
        blocker = blocking_entity(self.state, action, self.plan, self.model)
        if action is Action.FORWARD and isinstance(blocker, ObjectInstance):
            plan_actions = manhattan_bypass(
                self.plan, self.state, self.model, self.params.bypass_max_cells
            )
            if plan_actions:
                return Decision(plan_actions, "bypass", note=blocker.class_name)
        # wall dead-end or failed bypass: turn and let the next frame decide
        return Decision([Action.ROTATE_LEFT], "recover", note=str(getattr(blocker, "class_name", blocker)))

    def run(self, policy=None) -> EpisodeResult:
        self.process_frame(None)
        termination = None
        while True:
            if self.success:
                termination = "found"
                break
            if self.gmap.scan_full():
                termination = "budget" if len(self.gmap.steps) >= self.lm_params.budget else "scan_full"
                break
            if not self.queue:
                decision = policy(self) if policy else self._next_decision()
                self.decisions.append(decision)
                self.queue.extend(decision.actions)
                if not decision.actions:
                    self.queue.append(Action.ROTATE_LEFT)
            action = self.queue.popleft()
            if not self.execute(action):
                recovery = self._on_blocked(action)
                if recovery is not None:
                    self.decisions.append(recovery)
                    self.queue.extend(recovery.actions)
        if termination == "found":
            self.sim_time += self.model.duration(Action.STOP)
            self.actions.append(Action.STOP)
        return self.result(termination)

    def result(self, termination: str) -> EpisodeResult:
        """Freeze the episode's current state into a result record."""
        return EpisodeResult(
            success=self.success,
            actions=[a.value for a in self.actions],
            sim_time_s=self.sim_time,
            steps=len(self.gmap.steps),
            landmark_trace=self.gmap.landmark_trace(),
            termination=termination,
            final_pose=(self.state.x, self.state.y, self.state.heading_deg),
            target=self.target,
            plan_name=self.plan.name,
            seed=self.seed,
            decisions=[d.to_dict() for d in self.decisions],
        )


def rotation_scan(episode: Episode) -> list[tuple[int, EgoScene]]:
    return episode.rotation_scan()


def run_episode(
    plan: Floorplan,
    start: RobotState,
    target: str,
    store: TripleStore,
    class_table: ClassTable,
    seed: int = 0,
    **kwargs,
) -> EpisodeResult:
    return Episode(plan, start, target, store, class_table, seed=seed, **kwargs).run()


# -- trivial baselines -------------------------------------------------------

_BASELINE_MOVES = (Action.FORWARD, Action.BACKWARD, Action.ROTATE_LEFT, Action.ROTATE_RIGHT)


def random_walk_policy(episode: Episode) -> Decision:
    a = _BASELINE_MOVES[int(episode.rng.integers(len(_BASELINE_MOVES)))]
    return Decision([a], "random")


def greedy_free_space_policy(episode: Episode) -> Decision:
    areas = episode.last_ego.areas
    mid = episode.params.k_areas // 2
    if areas and areas[mid].has_free_space:
        return Decision([Action.FORWARD], "greedy")
    return Decision([Action.ROTATE_LEFT], "greedy")


BASELINES = {
    "random_walk": random_walk_policy,
    "greedy_free_space": greedy_free_space_policy,
}
