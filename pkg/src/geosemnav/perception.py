"""Simulated egocentric perception.

Frames are synthesized from ray-cast visibility rather than pixels: each
visible object becomes a detection with a normalized image box, and walls,
floor and door openings are added as extension detections so a frame looks
like the output of a semantic segmentation stage.  A fast noisy detector
tier drops and perturbs detections; an expensive fallback tier re-reports
the truth when the fast tier comes back empty.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

from .world import Floorplan, RayCaster, RobotState, Sighting

EXTENSION_CLASSES = ("wall", "floor", "ceiling", "door", "opening")


class ClassTableError(ValueError):
    """Malformed class table document."""


@dataclass(frozen=True)
class ClassEntry:
    name: str
    dims_m: tuple[float, float, float]  # width, height, depth in meters
    target_eligible: bool = False
    relational: bool = False
    extension: bool = False
    obstacle: bool = False
    restricted: bool = False

    @property
    def frontal_area(self) -> float:
        return self.dims_m[0] * self.dims_m[1]


class ClassTable:
    """Registry of known object classes and their physical stats."""

    def __init__(self, entries: list[ClassEntry]):
        names = [e.name for e in entries]
        dupes = {n for n in names if names.count(n) > 1}
        if dupes:
            raise ClassTableError(f"duplicate class entries: {sorted(dupes)}")
        self._entries = {e.name: e for e in entries}

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def __getitem__(self, name: str) -> ClassEntry:
        try:
            return self._entries[name]
        except KeyError:
            raise KeyError(f"unknown class name {name!r}") from None

    def __iter__(self):
        return iter(self._entries.values())

    def __len__(self) -> int:
        return len(self._entries)

    def names(self) -> list[str]:
        return list(self._entries)

    def is_extension(self, name: str) -> bool:
        e = self._entries.get(name)
        return e.extension if e else False

    def is_relational(self, name: str) -> bool:
        e = self._entries.get(name)
        return e.relational if e else False

    def validate_plan(self, plan: Floorplan) -> None:
        for i, obj in enumerate(plan.objects):
            if obj.class_name not in self._entries:
                raise ClassTableError(
                    f"object {obj.class_name!r} (#{i}) in plan {plan.name!r} is not in the class table"
                )


def load_class_table(text: str) -> ClassTable:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ClassTableError(f"class table is not valid JSON: {e}") from e
    raw = doc.get("classes") if isinstance(doc, dict) else doc
    if not isinstance(raw, list) or not raw:
        raise ClassTableError("class table must list at least one class")
    entries = []
    for i, c in enumerate(raw):
        name = c.get("name")
        if not name or not isinstance(name, str):
            raise ClassTableError(f"class #{i} needs a name")
        dims = c.get("dims_m")
        if not (isinstance(dims, list) and len(dims) == 3 and all(d > 0 for d in dims)):
            raise ClassTableError(f"class {name!r}: dims_m must be three positive numbers")
        entries.append(
            ClassEntry(
                name=name,
                dims_m=tuple(float(d) for d in dims),
                target_eligible=bool(c.get("target_eligible", False)),
                relational=bool(c.get("relational", False)),
                extension=bool(c.get("extension", False)),
                obstacle=bool(c.get("obstacle", False)),
                restricted=bool(c.get("restricted", False)),
            )
        )
    return ClassTable(entries)


def bundled_class_table() -> ClassTable:
    text = resources.files("geosemnav.data").joinpath("class_table.json").read_text()
    return load_class_table(text)


@dataclass(frozen=True)
class DetectorModel:
    """Detector stats shared by the truth renderer and the noise model.

    ``p_miss`` and ``confidence_noise_sd`` shape the fast tier; the fallback
    tier is noise free but slow.  Success thresholds live here so that every
    consumer of "the target is well visible" agrees.
    """

    fov_deg: float = 90.0
    range_cells: float = 8.0
    p_miss: float = 0.1
    confidence_noise_sd: float = 0.05
    latency_s: float = 0.033
    fallback_latency_s: float = 0.5
    max_occluded: float = 0.7
    min_confidence: float = 0.5

    def __post_init__(self) -> None:
        if not (0.0 < self.fov_deg <= 180.0):
            raise ValueError("fov_deg must be in (0, 180]")
        if not (0.0 <= self.p_miss < 1.0):
            raise ValueError("p_miss must be in [0, 1)")


@dataclass(frozen=True)
class Detection:
    """One labeled region in the normalized image frame.

    ``box`` is (x_min, y_min, x_max, y_max) with x growing rightward and y
    downward, both in [0, 1].  ``distance`` is in cells; extension detections
    for the floor report 0.
    """

    class_name: str
    confidence: float
    box: tuple[float, float, float, float]
    distance: float = 0.0
    instance_index: int | None = None
    restricted: bool = False
    extension: bool = False

    @property
    def centroid_x(self) -> float:
        return (self.box[0] + self.box[2]) / 2.0

    @property
    def width(self) -> float:
        return self.box[2] - self.box[0]


@dataclass(frozen=True)
class SceneArea:
    """One vertical band of the frame with pooled navigation flags."""

    index: int
    x_lo: float
    x_hi: float
    label: str
    detection_indices: tuple[int, ...] = ()
    has_free_space: bool = False
    has_obstacle: bool = False
    has_opening: bool = False
    has_restricted: bool = False
    is_passage: bool = False


@dataclass(frozen=True)
class TruthScene:
    """Noise-free frame plus bookkeeping the noise model never touches."""

    detections: tuple[Detection, ...]
    free_cells: frozenset[tuple[int, int]]
    pose: tuple[int, int, int]
    fov_deg: float = 90.0


@dataclass(frozen=True)
class EgoScene:
    """What the agent (or a human player) actually receives for one frame."""

    detections: tuple[Detection, ...]
    free_cells: frozenset[tuple[int, int]]
    pose: tuple[int, int, int]
    fov_deg: float = 90.0
    produced_by: str = "fast"
    latency_s: float = 0.0
    areas: tuple[SceneArea, ...] = ()

    def non_extension(self) -> list[Detection]:
        return [d for d in self.detections if not d.extension]


def _angular_halfwidth_deg(width_m: float, dist_cells: float, cell_m: float) -> float:
    dist_m = max(dist_cells * cell_m, 1e-6)
    return math.degrees(math.atan2(width_m / 2.0, dist_m))


def _project_box(
    s: Sighting, entry: ClassEntry, fov_deg: float, cell_m: float
) -> tuple[float, float, float, float]:
    # pin-hole-ish projection: angular size maps linearly onto the frame
    cx = 0.5 + s.bearing_deg / fov_deg
    half_w = _angular_halfwidth_deg(entry.dims_m[0], s.distance, cell_m) / fov_deg
    half_h = _angular_halfwidth_deg(entry.dims_m[1], s.distance, cell_m) / fov_deg
    x_min = max(0.0, cx - half_w)
    x_max = min(1.0, cx + half_w)
    y_mid = 0.5
    y_min = max(0.0, y_mid - half_h)
    y_max = min(1.0, y_mid + half_h)
    return (x_min, y_min, x_max, y_max)


def _x_of(bearing: float, fov_deg: float) -> float:
    return min(1.0, max(0.0, 0.5 + bearing / fov_deg))


def _runs(flags: list[bool]) -> list[tuple[int, int]]:
    runs = []
    start = None
    for i, f in enumerate(flags):
        if f and start is None:
            start = i
        elif not f and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, len(flags) - 1))
    return runs


def render_ego(
    state: RobotState,
    plan: Floorplan,
    class_table: ClassTable,
    model: DetectorModel,
    caster: RayCaster | None = None,
) -> TruthScene:
    """Synthesize the noise-free frame for a pose."""
    class_table.validate_plan(plan)
    caster = caster or RayCaster(plan)
    dets: list[Detection] = []
    for s in caster.sightings(state, model.fov_deg, model.range_cells):
        entry = class_table[s.instance.class_name]
        conf = round(1.0 - s.occluded_fraction, 6)
        dets.append(
            Detection(
                class_name=s.instance.class_name,
                confidence=conf,
                box=_project_box(s, entry, model.fov_deg, plan.cell_size_m),
                distance=s.distance,
                instance_index=s.index,
                restricted=s.instance.restricted or entry.restricted,
                extension=False,
            )
        )

    prof = caster.profile(state, model.fov_deg, model.range_cells)
    n = len(prof.bearings)
    spacing = (prof.bearings[1] - prof.bearings[0]) if n > 1 else model.fov_deg
    half = spacing / 2.0 / model.fov_deg

    def run_box(i0: int, i1: int, y_lo: float, y_hi: float) -> tuple:
        x0 = max(0.0, _x_of(prof.bearings[i0], model.fov_deg) - half)
        x1 = min(1.0, _x_of(prof.bearings[i1], model.fov_deg) + half)
        return (x0, y_lo, x1, y_hi)

    wall_h = class_table["wall"].dims_m[1] if "wall" in class_table else 2.5
    for i0, i1 in _runs([d is not None for d in prof.wall_hits]):
        hits = [prof.wall_hits[i] for i in range(i0, i1 + 1)]
        mean_d = sum(hits) / len(hits)
        hh = min(0.5, _angular_halfwidth_deg(wall_h, mean_d, plan.cell_size_m) / model.fov_deg)
        dets.append(
            Detection("wall", 1.0, run_box(i0, i1, 0.5 - hh, 0.5 + hh), mean_d, extension=True)
        )
    for i0, i1 in _runs([d >= 1 for d in prof.free_depths]):
        depth = max(prof.free_depths[i0 : i1 + 1])
        dets.append(
            Detection("floor", 1.0, run_box(i0, i1, 0.65, 1.0), float(depth), extension=True)
        )
    if "door" in class_table:
        for i0, i1 in _runs([d is not None for d in prof.door_hits]):
            hits = [prof.door_hits[i] for i in range(i0, i1 + 1)]
            mean_d = sum(hits) / len(hits)
            dets.append(
                Detection("door", 1.0, run_box(i0, i1, 0.2, 0.85), mean_d, extension=True)
            )
    return TruthScene(
        tuple(dets), prof.free_cells, (state.x, state.y, state.heading_deg), model.fov_deg
    )


def detect(truth: TruthScene, model: DetectorModel, rng: np.random.Generator) -> EgoScene:
    """Run the two-tier detector over a noise-free frame.

    The fast tier drops each object detection with probability ``p_miss``
    and jitters the survivors' confidences.  If it loses every object while
    the frame actually contained some, the robust fallback re-reports the
    truth at a latency cost.  Extension detections pass through untouched.
    """
    kept: list[Detection] = []
    n_objects = 0
    for d in truth.detections:
        if d.extension:
            kept.append(d)
            continue
        n_objects += 1
        if rng.random() < model.p_miss:
            continue
        noisy = float(np.clip(d.confidence + rng.normal(0.0, model.confidence_noise_sd), 0.0, 1.0))
        kept.append(replace(d, confidence=round(noisy, 6)))
    n_kept = sum(1 for d in kept if not d.extension)
    if n_objects > 0 and n_kept == 0:
        return EgoScene(
            detections=truth.detections,
            free_cells=truth.free_cells,
            pose=truth.pose,
            fov_deg=truth.fov_deg,
            produced_by="fallback",
            latency_s=model.latency_s + model.fallback_latency_s,
        )
    return EgoScene(
        detections=tuple(kept),
        free_cells=truth.free_cells,
        pose=truth.pose,
        fov_deg=truth.fov_deg,
        produced_by="fast",
        latency_s=model.latency_s,
    )


def area_label(index: int, k: int) -> str:
    if k == 3:
        return ("Left", "Middle", "Right")[index]
    return f"A{index}"


def segment_areas(
    scene: EgoScene,
    class_table: ClassTable,
    k: int = 3,
    floor_fraction: float = 0.3,
) -> EgoScene:
    """Split the frame into ``k`` vertical bands and pool flags per band.

    Non-extension detections belong to the band holding their centroid;
    floor and wall influence is measured by how much of the band's width
    their boxes cover.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    edges = [(i / k, (i + 1) / k) for i in range(k)]

    def band_of(x: float) -> int:
        return min(k - 1, int(x * k))

    def coverage(d: Detection, lo: float, hi: float) -> float:
        overlap = min(hi, d.box[2]) - max(lo, d.box[0])
        return max(0.0, overlap) / (hi - lo)

    floors = [d for d in scene.detections if d.class_name == "floor"]
    walls = [d for d in scene.detections if d.class_name == "wall"]
    floor_in = [
        any(coverage(d, lo, hi) > floor_fraction for d in floors) for lo, hi in edges
    ]
    wall_in = [
        any(coverage(d, lo, hi) > floor_fraction for d in walls) for lo, hi in edges
    ]

    members: list[list[int]] = [[] for _ in range(k)]
    for i, d in enumerate(scene.detections):
        if d.extension:
            continue
        members[band_of(d.centroid_x)].append(i)

    areas = []
    for b, (lo, hi) in enumerate(edges):
        dets = [scene.detections[i] for i in members[b]]
        has_obstacle = any(
            d.class_name in class_table and class_table[d.class_name].obstacle for d in dets
        )
        # openings count wherever their centroid falls, member or extension
        has_opening = any(d.class_name in ("door", "opening") for d in dets) or any(
            d.class_name in ("door", "opening") and band_of(d.centroid_x) == b
            for d in scene.detections
        )
        areas.append(
            SceneArea(
                index=b,
                x_lo=lo,
                x_hi=hi,
                label=area_label(b, k),
                detection_indices=tuple(members[b]),
                has_free_space=floor_in[b],
                has_obstacle=has_obstacle,
                has_opening=has_opening,
                has_restricted=any(d.restricted for d in dets),
                is_passage=floor_in[b]
                and b > 0
                and b < k - 1
                and wall_in[b - 1]
                and wall_in[b + 1],
            )
        )
    return replace(scene, areas=tuple(areas))
