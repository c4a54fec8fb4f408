"""Grid world: floorplans, discrete robot kinematics, ray-cast visibility.

The world is a desk-scale lattice.  Cell (x, y) spans the unit square
centered on the integer point (x, y); the robot occupies whole cells and
moves between integer poses.  Heading 0 points along +x and rotating left
increases the heading, so the lattice headings are the multiples of the
action model's rotation step.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence


class Action(str, Enum):
    FORWARD = "Forward"
    BACKWARD = "Backward"
    ROTATE_LEFT = "RotateLeft"
    ROTATE_RIGHT = "RotateRight"
    STOP = "Stop"

    def __str__(self) -> str:  # keep trace files readable
        return self.value


TRANSLATIONS = (Action.FORWARD, Action.BACKWARD)
ROTATIONS = (Action.ROTATE_LEFT, Action.ROTATE_RIGHT)

HEIGHT_CLASSES = ("floor-level", "surface-level", "tall")
_HEIGHT_RANK = {name: i for i, name in enumerate(HEIGHT_CLASSES)}

# Unit step for each lattice heading (dx, dy).  Diagonal headings advance one
# cell along both axes so poses stay integral.
_HEADING_VEC = {
    0: (1, 0),
    45: (1, 1),
    90: (0, 1),
    135: (-1, 1),
    180: (-1, 0),
    225: (-1, -1),
    270: (0, -1),
    315: (1, -1),
}

# Sample points per footprint cell used when estimating how much of an object
# a viewpoint can see: the center plus four inset corners.
_OCCLUSION_OFFSETS = ((0.0, 0.0), (0.3, 0.3), (0.3, -0.3), (-0.3, 0.3), (-0.3, -0.3))
_RAY_STEP = 0.2  # cells; fine enough that a unit cell cannot be stepped over


class FloorplanError(ValueError):
    """Malformed or inconsistent floorplan document."""


@dataclass(frozen=True)
class ObjectInstance:
    """A placed object: a class name plus the cells it stands on.

    ``footprint`` cells are Free cells; the object does not change the wall
    grid.  ``on_top_of`` names the index of the supporting instance, if any,
    and ``obstacle`` marks footprints the robot may not enter.
    """

    class_name: str
    anchor: tuple[int, int]
    footprint: tuple[tuple[int, int], ...]
    height_class: str = "floor-level"
    on_top_of: int | None = None
    restricted: bool = False
    obstacle: bool = False

    @property
    def height_rank(self) -> int:
        return _HEIGHT_RANK[self.height_class]


@dataclass(frozen=True)
class RobotState:
    """Pose on the lattice.  ``dims`` is the (width, depth) footprint in cells."""

    x: int
    y: int
    heading_deg: int = 0
    dims: tuple[int, int] = (1, 1)

    @property
    def xy(self) -> tuple[int, int]:
        return (self.x, self.y)


@dataclass(frozen=True)
class ActionModel:
    """Discretization of the five actions.

    ``rotation_deg`` must divide 360 and be a multiple of 45 so headings stay
    on the lattice.  Durations are simulated seconds per completed action.
    """

    step_cells: int = 1
    rotation_deg: int = 90
    durations: dict[Action, float] = field(
        default_factory=lambda: {
            Action.FORWARD: 1.5,
            Action.BACKWARD: 1.5,
            Action.ROTATE_LEFT: 1.0,
            Action.ROTATE_RIGHT: 1.0,
            Action.STOP: 0.1,
        }
    )

    def __post_init__(self) -> None:
        if self.rotation_deg not in (45, 90, 180):
            raise ValueError("rotation_deg must be one of 45, 90, 180")
        if self.step_cells < 1:
            raise ValueError("step_cells must be >= 1")

    def duration(self, action: Action) -> float:
        return self.durations[action]


@dataclass
class Floorplan:
    """Static scene: walls, zone paint, doors and placed objects."""

    name: str
    width: int
    height: int
    walls: frozenset[tuple[int, int]]
    zone_of: dict[tuple[int, int], str]
    doors: frozenset[tuple[int, int]]
    objects: list[ObjectInstance]
    cell_size_m: float = 0.5
    start: tuple[int, int, int] | None = None

    # cell -> (instance index, height rank); derived once in __post_init__
    obstacle_cells: dict[tuple[int, int], tuple[int, int]] = field(init=False)
    footprint_of: dict[tuple[int, int], list[int]] = field(init=False)

    def __post_init__(self) -> None:
        self.obstacle_cells = {}
        self.footprint_of = {}
        for i, obj in enumerate(self.objects):
            rank = self._effective_rank(i)
            for cell in obj.footprint:
                self.footprint_of.setdefault(cell, []).append(i)
                if obj.obstacle:
                    prev = self.obstacle_cells.get(cell)
                    if prev is None or rank > prev[1]:
                        self.obstacle_cells[cell] = (i, rank)

    def _effective_rank(self, index: int) -> int:
        # An object inherits the height of whatever it stands on.
        obj = self.objects[index]
        rank = obj.height_rank
        seen = {index}
        while obj.on_top_of is not None and obj.on_top_of not in seen:
            seen.add(obj.on_top_of)
            obj = self.objects[obj.on_top_of]
            rank = max(rank, obj.height_rank)
        return rank

    def effective_rank(self, index: int) -> int:
        return self._effective_rank(index)

    def in_bounds(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height

    def is_wall(self, x: int, y: int) -> bool:
        return (x, y) in self.walls

    def is_free(self, x: int, y: int) -> bool:
        return self.in_bounds(x, y) and (x, y) not in self.walls

    def is_traversable(self, x: int, y: int) -> bool:
        """Free and not covered by an obstacle footprint."""
        return self.is_free(x, y) and (x, y) not in self.obstacle_cells

    def zone_at(self, x: int, y: int) -> str | None:
        return self.zone_of.get((x, y))

    def free_cells(self) -> Iterable[tuple[int, int]]:
        for y in range(self.height):
            for x in range(self.width):
                if (x, y) not in self.walls:
                    yield (x, y)


def _parse_cells(doc: dict) -> tuple[int, int, frozenset[tuple[int, int]]]:
    width = doc.get("width")
    height = doc.get("height")
    rows = doc.get("cells")
    if not isinstance(width, int) or not isinstance(height, int) or width < 1 or height < 1:
        raise FloorplanError("width and height must be positive integers")
    if not isinstance(rows, list) or len(rows) != height:
        raise FloorplanError(f"cells must list exactly {height} rows")
    walls = set()
    for y, row in enumerate(rows):
        if not isinstance(row, str) or len(row) != width:
            raise FloorplanError(f"cells row {y} must be a string of length {width}")
        for x, ch in enumerate(row):
            if ch == "#":
                walls.add((x, y))
            elif ch != ".":
                raise FloorplanError(f"cells row {y} has unknown glyph {ch!r}")
    return width, height, frozenset(walls)


def _paint_zones(doc: dict, width: int, height: int) -> dict[tuple[int, int], str]:
    zones = doc.get("zones", [])
    if not isinstance(zones, list):
        raise FloorplanError("zones must be a list of painted rectangles")
    painted: dict[tuple[int, int], str] = {}
    for i, z in enumerate(zones):
        label = z.get("label")
        rect = z.get("rect")
        if not label or not isinstance(label, str):
            raise FloorplanError(f"zone #{i} needs a non-empty label")
        if not (isinstance(rect, list) and len(rect) == 4):
            raise FloorplanError(f"zone {label!r}: rect must be [x0, y0, x1, y1]")
        x0, y0, x1, y1 = rect
        if not (0 <= x0 <= x1 < width and 0 <= y0 <= y1 < height):
            raise FloorplanError(f"zone {label!r}: rect {rect} outside {width}x{height} grid")
        for y in range(y0, y1 + 1):
            for x in range(x0, x1 + 1):
                painted[(x, y)] = label  # later zones win overlaps
    return painted


def _parse_objects(doc: dict, plan_walls: frozenset, width: int, height: int) -> list[ObjectInstance]:
    objects = []
    raw = doc.get("objects", [])
    if not isinstance(raw, list):
        raise FloorplanError("objects must be a list")
    for i, o in enumerate(raw):
        cls = o.get("class")
        if not cls or not isinstance(cls, str):
            raise FloorplanError(f"object #{i} needs a class name")
        tag = f"object {cls!r} (#{i})"
        cells = o.get("footprint") or [o.get("at")]
        if cells == [None]:
            raise FloorplanError(f"{tag}: needs 'at' or 'footprint'")
        footprint = []
        for cell in cells:
            if not (isinstance(cell, (list, tuple)) and len(cell) == 2):
                raise FloorplanError(f"{tag}: footprint cells must be [x, y] pairs")
            x, y = int(cell[0]), int(cell[1])
            if not (0 <= x < width and 0 <= y < height):
                raise FloorplanError(f"{tag}: cell ({x}, {y}) outside {width}x{height} grid")
            if (x, y) in plan_walls:
                raise FloorplanError(f"{tag}: cell ({x}, {y}) is inside a wall")
            footprint.append((x, y))
        anchor = o.get("at") or footprint[0]
        anchor = (int(anchor[0]), int(anchor[1]))
        if anchor not in footprint:
            raise FloorplanError(f"{tag}: anchor {anchor} not part of its footprint")
        height_class = o.get("height_class", "floor-level")
        if height_class not in _HEIGHT_RANK:
            raise FloorplanError(f"{tag}: unknown height_class {height_class!r}")
        on_top_of = o.get("on_top_of")
        if on_top_of is not None:
            if not isinstance(on_top_of, int) or not (0 <= on_top_of < len(raw)):
                raise FloorplanError(f"{tag}: on_top_of must index another object")
            if on_top_of == i:
                raise FloorplanError(f"{tag}: cannot stand on itself")
        objects.append(
            ObjectInstance(
                class_name=cls,
                anchor=anchor,
                footprint=tuple(footprint),
                height_class=height_class,
                on_top_of=on_top_of,
                restricted=bool(o.get("restricted", False)),
                obstacle=bool(o.get("obstacle", False)),
            )
        )
    # supports must contain the rider's anchor
    for i, obj in enumerate(objects):
        if obj.on_top_of is not None:
            base = objects[obj.on_top_of]
            if obj.anchor not in base.footprint:
                raise FloorplanError(
                    f"object {obj.class_name!r} (#{i}): anchor {obj.anchor} not on its base"
                )
    return objects


def load_floorplan(text: str) -> Floorplan:
    """Parse a floorplan document (JSON text) and validate its invariants."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise FloorplanError(f"floorplan is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise FloorplanError("floorplan document must be a JSON object")
    width, height, walls = _parse_cells(doc)
    zone_of = _paint_zones(doc, width, height)
    for y in range(height):
        for x in range(width):
            if (x, y) not in walls and (x, y) not in zone_of:
                raise FloorplanError(f"free cell ({x}, {y}) has no zone")
    doors = set()
    for i, cell in enumerate(doc.get("doors", [])):
        if not (isinstance(cell, (list, tuple)) and len(cell) == 2):
            raise FloorplanError(f"door #{i} must be an [x, y] pair")
        x, y = int(cell[0]), int(cell[1])
        if (x, y) in walls or not (0 <= x < width and 0 <= y < height):
            raise FloorplanError(f"door #{i} at ({x}, {y}) must sit on a free cell")
        doors.add((x, y))
    objects = _parse_objects(doc, walls, width, height)
    start = doc.get("start")
    if start is not None:
        if not (isinstance(start, list) and len(start) == 3):
            raise FloorplanError("start must be [x, y, heading]")
        sx, sy, sh = int(start[0]), int(start[1]), int(start[2])
        if (sx, sy) in walls or not (0 <= sx < width and 0 <= sy < height):
            raise FloorplanError(f"start cell ({sx}, {sy}) must be free")
        if sh % 360 not in _HEADING_VEC:
            raise FloorplanError(f"start heading {sh} is not a lattice heading")
        start = (sx, sy, sh % 360)
    return Floorplan(
        name=str(doc.get("name", "unnamed")),
        width=width,
        height=height,
        walls=walls,
        zone_of=zone_of,
        doors=frozenset(doors),
        objects=objects,
        cell_size_m=float(doc.get("cell_size_m", 0.5)),
        start=start,
    )


def load_floorplan_file(path) -> Floorplan:
    with open(path, "r", encoding="utf-8") as f:
        return load_floorplan(f.read())


def heading_vector(heading_deg: int) -> tuple[int, int]:
    try:
        return _HEADING_VEC[heading_deg % 360]
    except KeyError:
        raise ValueError(f"heading {heading_deg} is not a lattice heading") from None


def _body_cells(x: int, y: int, dims: tuple[int, int]) -> list[tuple[int, int]]:
    w, d = dims
    return [
        (x + ox, y + oy)
        for ox in range(-((w - 1) // 2), w // 2 + 1)
        for oy in range(-((d - 1) // 2), d // 2 + 1)
    ]


def _swept_cells(state: RobotState, dx: int, dy: int, steps: int) -> list[tuple[int, int]]:
    cells = []
    for i in range(1, steps + 1):
        nx, ny = state.x + i * dx, state.y + i * dy
        cells.extend(_body_cells(nx, ny, state.dims))
        if dx != 0 and dy != 0:
            # diagonal moves may not cut corners: both orthogonal neighbors of
            # the step must be enterable too
            cells.append((state.x + i * dx, state.y + (i - 1) * dy))
            cells.append((state.x + (i - 1) * dx, state.y + i * dy))
    return cells


def apply_action(
    state: RobotState, action: Action, plan: Floorplan, model: ActionModel
) -> tuple[RobotState, bool]:
    """Execute one action.  Returns (new_state, blocked).

    A blocked translation leaves the pose unchanged.  Rotations and Stop
    never block.
    """
    if action is Action.STOP:
        return state, False
    if action in ROTATIONS:
        sign = 1 if action is Action.ROTATE_LEFT else -1
        return (
            RobotState(state.x, state.y, (state.heading_deg + sign * model.rotation_deg) % 360, state.dims),
            False,
        )
    dx, dy = heading_vector(state.heading_deg)
    if action is Action.BACKWARD:
        dx, dy = -dx, -dy
    for cell in _swept_cells(state, dx, dy, model.step_cells):
        if not plan.is_traversable(*cell):
            return state, True
    n = model.step_cells
    return RobotState(state.x + n * dx, state.y + n * dy, state.heading_deg, state.dims), False


def blocking_entity(
    state: RobotState, action: Action, plan: Floorplan, model: ActionModel
) -> ObjectInstance | str | None:
    """What a blocked translation ran into: an instance, "wall", or None."""
    if action not in TRANSLATIONS:
        return None
    dx, dy = heading_vector(state.heading_deg)
    if action is Action.BACKWARD:
        dx, dy = -dx, -dy
    for cell in _swept_cells(state, dx, dy, model.step_cells):
        if not plan.in_bounds(*cell) or plan.is_wall(*cell):
            return "wall"
        hit = plan.obstacle_cells.get(cell)
        if hit is not None:
            return plan.objects[hit[0]]
    return None


@dataclass(frozen=True)
class Sighting:
    """One object as seen from a pose: range, bearing and visible fraction."""

    index: int
    instance: ObjectInstance
    distance: float
    bearing_deg: float
    occluded_fraction: float


class RayCaster:
    """Pose-keyed visibility cache for one floorplan.

    Object visibility (distance, world angle, occluded fraction) only depends
    on the viewpoint cell, so it is computed once per (x, y) and filtered by
    heading and field of view afterwards.
    """

    def __init__(self, plan: Floorplan, ray_step: float = _RAY_STEP):
        self.plan = plan
        self.ray_step = ray_step
        self._point_cache: dict[tuple[int, int], list[tuple[int, float, float, float]]] = {}
        self._profile_cache: dict[tuple, "RayProfile"] = {}

    # -- per-object visibility -------------------------------------------

    def _blockers_for(self, index: int) -> tuple[set[tuple[int, int]], int]:
        obj = self.plan.objects[index]
        skip = set(obj.footprint)
        if obj.on_top_of is not None:
            skip |= set(self.plan.objects[obj.on_top_of].footprint)
        return skip, self.plan.effective_rank(index)

    def _sample_blocked(
        self, sx: float, sy: float, tx: float, ty: float, skip: set, min_rank: int
    ) -> bool:
        dist = math.hypot(tx - sx, ty - sy)
        if dist < 1e-9:
            return False
        n = max(1, int(dist / self.ray_step))
        for k in range(1, n + 1):
            t = k / (n + 1)  # strictly interior points
            cell = (round(sx + (tx - sx) * t), round(sy + (ty - sy) * t))
            if cell == (round(sx), round(sy)) or cell in skip:
                continue
            if cell in self.plan.walls:
                return True
            hit = self.plan.obstacle_cells.get(cell)
            if hit is not None and hit[1] >= min_rank:
                return True
        return False

    def _position_sightings(self, x: int, y: int) -> list[tuple[int, float, float, float]]:
        cached = self._point_cache.get((x, y))
        if cached is not None:
            return cached
        out = []
        for i, obj in enumerate(self.plan.objects):
            skip, rank = self._blockers_for(i)
            total = 0
            blocked = 0
            best = None
            for (cx, cy) in obj.footprint:
                for ox, oy in _OCCLUSION_OFFSETS:
                    total += 1
                    if self._sample_blocked(x, y, cx + ox, cy + oy, skip, rank):
                        blocked += 1
                d = math.hypot(cx - x, cy - y)
                if best is None or d < best[0]:
                    best = (d, cx, cy)
            ax = sum(c[0] for c in obj.footprint) / len(obj.footprint)
            ay = sum(c[1] for c in obj.footprint) / len(obj.footprint)
            angle = math.degrees(math.atan2(ay - y, ax - x))
            out.append((i, best[0], angle, blocked / total))
        self._point_cache[(x, y)] = out
        return out

    def sightings(
        self, state: RobotState, fov_deg: float, range_cells: float
    ) -> list[Sighting]:
        """Objects within range and field of view that are not fully hidden."""
        result = []
        for i, dist, angle, occ in self._position_sightings(state.x, state.y):
            if dist > range_cells or occ >= 1.0:
                continue
            bearing = (state.heading_deg - angle + 180.0) % 360.0 - 180.0
            if abs(bearing) > fov_deg / 2.0 + 1e-9:
                continue
            result.append(Sighting(i, self.plan.objects[i], dist, bearing, occ))
        result.sort(key=lambda s: (s.distance, s.index))
        return result

    # -- ray profile for walls / floor / doors ----------------------------

    def profile(
        self, state: RobotState, fov_deg: float, range_cells: float, n_rays: int = 31
    ) -> "RayProfile":
        key = (state.x, state.y, state.heading_deg, round(fov_deg, 3), round(range_cells, 3), n_rays)
        cached = self._profile_cache.get(key)
        if cached is not None:
            return cached
        bearings = [
            -fov_deg / 2.0 + i * fov_deg / (n_rays - 1) for i in range(n_rays)
        ]
        wall_hits: list[float | None] = []
        door_hits: list[float | None] = []
        free_depths: list[int] = []
        free_cells: set[tuple[int, int]] = set()
        plan = self.plan
        n_steps = int(round(range_cells / self.ray_step))
        for b in bearings:
            ang = math.radians(state.heading_deg - b)
            cos_a, sin_a = math.cos(ang), math.sin(ang)
            wall_d = None
            door_d = None
            seen: set[tuple[int, int]] = set()
            run_open = True
            for k in range(1, n_steps + 1):
                t = k * self.ray_step
                cell = (round(state.x + cos_a * t), round(state.y + sin_a * t))
                if cell != state.xy:
                    if not plan.in_bounds(*cell) or plan.is_wall(*cell):
                        wall_d = t
                        break
                    if run_open:
                        if cell not in plan.obstacle_cells:
                            free_cells.add(cell)
                            seen.add(cell)
                        else:
                            run_open = False
                    if door_d is None and cell in plan.doors:
                        door_d = t
            depth = len(seen)
            wall_hits.append(wall_d)
            door_hits.append(door_d)
            free_depths.append(depth)
        prof = RayProfile(tuple(bearings), tuple(wall_hits), tuple(door_hits), tuple(free_depths), frozenset(free_cells))
        self._profile_cache[key] = prof
        return prof


@dataclass(frozen=True)
class RayProfile:
    """Per-ray scan results across the field of view, left to right."""

    bearings: tuple[float, ...]
    wall_hits: tuple[float | None, ...]
    door_hits: tuple[float | None, ...]
    free_depths: tuple[int, ...]
    free_cells: frozenset[tuple[int, int]]


def is_success(
    state: RobotState,
    plan: Floorplan,
    target: str,
    detector,
    class_table,
    caster: RayCaster | None = None,
) -> bool:
    """Deterministic goal check: some instance of ``target`` is well visible.

    The detector model supplies the field of view, range and the visibility
    thresholds; noise plays no part here.
    """
    if target not in class_table:
        raise KeyError(f"unknown class name {target!r}")
    caster = caster or RayCaster(plan)
    for s in caster.sightings(state, detector.fov_deg, detector.range_cells):
        if s.instance.class_name != target:
            continue
        conf = 1.0 - s.occluded_fraction
        if s.occluded_fraction <= detector.max_occluded and conf >= detector.min_confidence:
            return True
    return False
