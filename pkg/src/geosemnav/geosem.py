"""GeoSem map: pose-stamped semantic snapshots with landmark scores.

Every processed frame becomes a step record holding the pose, the detected
classes and a landmark score.  A per-cell index tracks which headings have
been observed and the best score seen there, which is what backtracking
queries and the exploration-exhaustion check run on.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

from .perception import EgoScene
from .world import Action, ActionModel, Floorplan, RobotState, TRANSLATIONS, ROTATIONS, apply_action


@dataclass(frozen=True)
class LandmarkParams:
    alpha: float = 1.0  # environment scaling for the landmark score
    tau_lm: float = 0.25  # low-score threshold, fraction of the running max
    budget: int = 500  # max step records per episode

    def __post_init__(self) -> None:
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if not (0.0 < self.tau_lm < 1.0):
            raise ValueError("tau_lm must be in (0, 1)")


@dataclass(frozen=True)
class StepRecord:
    step_index: int
    pose: tuple[int, int, int]
    action_taken: Action | None  # None for the initial frame
    detections: tuple[tuple[str, float], ...]  # (class, confidence)
    landmark_score: float
    cum_rotation_deg: float  # |rotation| accumulated since arriving at this cell
    sim_time_s: float
    blocked: bool = False

    def to_json(self) -> str:
        return json.dumps(
            {
                "step_index": self.step_index,
                "pose": list(self.pose),
                "action": self.action_taken.value if self.action_taken else None,
                "detections": [[c, conf] for c, conf in self.detections],
                "landmark_score": self.landmark_score,
                "cum_rotation_deg": self.cum_rotation_deg,
                "sim_time_s": round(self.sim_time_s, 6),
                "blocked": self.blocked,
            },
            separators=(",", ":"),
        )


def landmark_score(
    detections,
    target: str,
    zone_prob: float,
    cum_rotation_deg: float,
    knowledge,
    params: LandmarkParams,
) -> float:
    """Probability-flavored score for how promising the current view is.

    ``detections`` is a list of (class, confidence) pairs.  Extension classes
    are ignored; the target itself counts with relation 1.  A point only
    earns full trust once it has been scanned through a complete turn.
    """
    table = knowledge.class_table
    classes = [c for c, _ in detections if not table.is_extension(c)]
    total = sum(1.0 if c == target else knowledge.rp(c, target) for c in classes)
    rotation_factor = min(1.0, max(0.0, cum_rotation_deg) / 360.0)
    return (total / max(1, len(classes))) * zone_prob * params.alpha * rotation_factor


@dataclass
class _CellEntry:
    heading_mask: int = 0
    best_score: float = 0.0
    last_step: int = -1
    cum_rotation: float = 0.0


class GeoSemMap:
    """Single-episode spatial memory."""

    def __init__(self, params: LandmarkParams, rotation_deg: int = 90):
        self.params = params
        self.rotation_deg = rotation_deg
        self.n_headings = 360 // rotation_deg
        self.steps: list[StepRecord] = []
        self.visited: dict[tuple[int, int], _CellEntry] = {}
        self.observed_free: set[tuple[int, int]] = set()
        self._cum_rotation = 0.0
        self._max_score = 0.0
        self._backtrack_epoch = 0  # step index of the last backtrack plan

    # -- bookkeeping --------------------------------------------------------

    def _heading_bit(self, heading_deg: int) -> int:
        return 1 << ((heading_deg % 360) // self.rotation_deg)

    def full_mask(self) -> int:
        return (1 << self.n_headings) - 1

    def update(
        self,
        action: Action | None,
        ego: EgoScene,
        pose: RobotState,
        sim_time: float,
        target: str,
        knowledge,
        blocked: bool = False,
    ) -> StepRecord:
        """Record one processed frame after ``action`` completed."""
        if action in ROTATIONS:
            self._cum_rotation += self.rotation_deg
        elif action in TRANSLATIONS and not blocked:
            self._cum_rotation = 0.0
        dets = tuple((d.class_name, d.confidence) for d in ego.detections if not d.extension)
        classes = [c for c, _ in dets]
        zone_prob = knowledge.zone_relation(classes, target)
        score = landmark_score(dets, target, zone_prob, self._cum_rotation, knowledge, self.params)
        rec = StepRecord(
            step_index=len(self.steps),
            pose=(pose.x, pose.y, pose.heading_deg),
            action_taken=action,
            detections=dets,
            landmark_score=score,
            cum_rotation_deg=self._cum_rotation,
            sim_time_s=sim_time,
            blocked=blocked,
        )
        self.steps.append(rec)
        entry = self.visited.setdefault(pose.xy, _CellEntry())
        entry.heading_mask |= self._heading_bit(pose.heading_deg)
        entry.best_score = max(entry.best_score, score)
        entry.last_step = rec.step_index
        entry.cum_rotation = self._cum_rotation
        self.observed_free |= ego.free_cells
        self._max_score = max(self._max_score, score)
        return rec

    def mark_backtrack(self) -> None:
        # is_low stays quiet until fresh translations accrue after a backtrack
        self._backtrack_epoch = len(self.steps)

    # -- queries -------------------------------------------------------------

    @property
    def frontier(self) -> set[tuple[int, int]]:
        out = set()
        for cell in self.observed_free:
            if cell in self.visited:
                continue
            x, y = cell
            if any(
                (x + dx, y + dy) in self.visited
                for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1))
            ):
                out.add(cell)
        return out

    def current_pose(self) -> tuple[int, int, int] | None:
        return self.steps[-1].pose if self.steps else None

    def is_low(self) -> bool:
        """Diminishing-landmark test over translation steps."""
        if not self.steps or self.steps[-1].action_taken not in TRANSLATIONS:
            return False
        trans = [
            r
            for r in self.steps[self._backtrack_epoch :]
            if r.action_taken in TRANSLATIONS and not r.blocked
        ]
        if len(trans) < 3:
            return False
        a, b, c = trans[-3].landmark_score, trans[-2].landmark_score, trans[-1].landmark_score
        return c < b < a and c < self.params.tau_lm * self._max_score

    def best_backtrack_point(self) -> tuple[int, int, int] | None:
        """Most promising partially-explored visited pose; None = scan-full."""
        frontier = self.frontier
        full = self.full_mask()
        best: tuple[float, int, tuple[int, int]] | None = None
        for cell, entry in self.visited.items():
            open_headings = entry.heading_mask != full
            borders_frontier = any(
                (cell[0] + dx, cell[1] + dy) in frontier
                for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1))
            )
            if not (open_headings or borders_frontier):
                continue
            key = (entry.best_score, entry.last_step, cell)
            if best is None or key[:2] > best[:2]:
                best = key
        if best is None:
            return None
        cell = best[2]
        entry = self.visited[cell]
        heading = self._suggest_heading(cell, entry, frontier)
        return (cell[0], cell[1], heading)

    def _suggest_heading(self, cell, entry: _CellEntry, frontier) -> int:
        for i in range(self.n_headings):
            if not entry.heading_mask & (1 << i):
                return i * self.rotation_deg
        for dx, dy, h in ((1, 0, 0), (0, 1, 90), (-1, 0, 180), (0, -1, 270)):
            if (cell[0] + dx, cell[1] + dy) in frontier:
                return h
        return 0

    def path_to(
        self,
        plan: Floorplan,
        from_pose: tuple[int, int, int],
        to_pose: tuple[int, int, int],
        model: ActionModel,
    ) -> list[Action]:
        """Fewest-actions route across already-charted cells.

        Breadth-first over (x, y, heading) states restricted to visited and
        frontier cells, using the real kinematics for transitions so the
        returned plan replays without a Blocked outcome.
        """
        if from_pose == to_pose:
            return []
        allowed = set(self.visited) | self.frontier
        start = RobotState(*from_pose)
        goal = to_pose
        seen = {from_pose}
        queue = deque([(start, [])])
        moves = (Action.FORWARD, Action.BACKWARD, Action.ROTATE_LEFT, Action.ROTATE_RIGHT)
        while queue:
            state, path = queue.popleft()
            for a in moves:
                ns, blocked = apply_action(state, a, plan, model)
                if blocked or ns.xy not in allowed:
                    continue
                key = (ns.x, ns.y, ns.heading_deg)
                if key in seen:
                    continue
                npath = path + [a]
                if key == goal:
                    return npath
                seen.add(key)
                queue.append((ns, npath))
        raise RuntimeError(f"no charted path from {from_pose} to {to_pose}")

    def scan_full(self) -> bool:
        """True when exploration is exhausted or the step budget is spent."""
        if not self.steps:
            return False
        if len(self.steps) >= self.params.budget:
            return True
        full = self.full_mask()
        return not self.frontier and all(
            e.heading_mask == full for e in self.visited.values()
        )

    def landmark_trace(self) -> list[float]:
        return [r.landmark_score for r in self.steps]

    def increasing_translation_fraction(self) -> float:
        """Fraction of translation steps whose score rose; reported, never asserted."""
        scores = [
            r.landmark_score
            for r in self.steps
            if r.action_taken in TRANSLATIONS and not r.blocked
        ]
        if len(scores) < 2:
            return 0.0
        ups = sum(1 for a, b in zip(scores, scores[1:]) if b > a)
        return ups / (len(scores) - 1)

    def export_trace(self) -> str:
        return "\n".join(r.to_json() for r in self.steps) + "\n"
