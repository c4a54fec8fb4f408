"""Semantic relation store learned from scene-graph statistics.

Relations between object classes (co-location, zone membership, stacking,
occlusion potential) are derived by counting over a corpus of annotated
scenes.  Scenes observed online are appended with a diminishing weight so
the store keeps learning during an episode without forgetting the corpus.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field

from .perception import ClassTable, EgoScene


class KnowledgeError(ValueError):
    """Bad corpus, bad query, or unparsable export document."""


@dataclass(frozen=True)
class SceneObject:
    class_name: str
    centroid: tuple[float, float]  # normalized, y grows downward
    dims: tuple[float, float]  # normalized box width / height

    @property
    def bottom(self) -> float:
        return self.centroid[1] + self.dims[1] / 2.0

    @property
    def top(self) -> float:
        return self.centroid[1] - self.dims[1] / 2.0


@dataclass(frozen=True)
class SceneGraph:
    scene_id: str
    objects: tuple[SceneObject, ...]
    zone_label: str | None = None
    weight: float = 1.0
    provenance: str = "corpus"


@dataclass(frozen=True)
class KnowledgeParams:
    beta_mode: str = "fixed"  # fixed | density
    beta_fixed: float = 1.0
    lam: float = 0.5  # distance decay length, normalized units
    tau_co: float = 0.2  # co-location gate for occlusion facts
    stack_tol: float = 0.05  # how far below a support's top still counts
    stack_region: float = 0.25  # fraction of the support's height forming its top

    def __post_init__(self) -> None:
        if self.lam <= 0:
            raise ValueError("lambda must be positive")
        if not (0.0 < self.beta_fixed <= 1.0):
            raise ValueError("beta_fixed must be in (0, 1]")
        if self.beta_mode not in ("fixed", "density"):
            raise ValueError("beta_mode must be 'fixed' or 'density'")


@dataclass(frozen=True)
class Fact:
    relation: str
    subject: str
    object: str
    p: float
    weight: float
    provenance: str


def _pair(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


def _stacked(a: SceneObject, b: SceneObject, tol: float, region: float) -> bool:
    # a rests on b: horizontal extents overlap and a's bottom edge sits at or
    # just inside b's top region (y grows downward)
    if abs(a.centroid[0] - b.centroid[0]) > (a.dims[0] + b.dims[0]) / 2.0:
        return False
    return (b.top - tol) <= a.bottom <= (b.top + region * b.dims[1])


@dataclass
class CorpusStats:
    """Weighted counting state, updated scene by scene."""

    n_scenes: int = 0
    total_weight: float = 0.0
    class_w: dict = field(default_factory=dict)  # class -> Σ scene weights
    pair_w: dict = field(default_factory=dict)  # pair -> Σ co-occurrence weights
    pair_decay: dict = field(default_factory=dict)  # pair -> Σ w·exp(−d/λ)
    stack_w: dict = field(default_factory=dict)  # (a, b) ordered -> Σ w·[a on b]
    zone_w: dict = field(default_factory=dict)  # (class, zone) -> Σ weights
    zones: set = field(default_factory=set)
    classes: set = field(default_factory=set)
    src_of: dict = field(default_factory=dict)  # class or pair -> set of provenance

    @property
    def distinct_edges(self) -> int:
        return len(self.pair_w)


_NAME_RE = re.compile(r"^\S+$")


class TripleStore:
    """Queryable relation store over a (possibly growing) scene corpus."""

    def __init__(self, params: KnowledgeParams, class_table: ClassTable):
        self.params = params
        self.class_table = class_table
        self.stats = CorpusStats()
        self._graphs: list[SceneGraph] = []

    # -- ingestion ---------------------------------------------------------

    def _check_graph(self, g: SceneGraph) -> None:
        if not _NAME_RE.match(g.scene_id):
            raise KnowledgeError(f"scene id {g.scene_id!r} must be non-empty without spaces")
        if any(h.scene_id == g.scene_id for h in self._graphs):
            raise KnowledgeError(f"duplicate scene id {g.scene_id!r}")
        if g.zone_label is not None and not _NAME_RE.match(g.zone_label):
            raise KnowledgeError(f"zone label {g.zone_label!r} must not contain spaces")
        for o in g.objects:
            if o.class_name not in self.class_table:
                raise KnowledgeError(
                    f"scene {g.scene_id!r}: class {o.class_name!r} not in the class table"
                )
            if not (0.0 <= o.centroid[0] <= 1.0 and 0.0 <= o.centroid[1] <= 1.0):
                raise KnowledgeError(
                    f"scene {g.scene_id!r}: centroid {o.centroid} outside the unit square"
                )

    def _absorb(self, g: SceneGraph) -> None:
        self._check_graph(g)
        self._graphs.append(g)
        st = self.stats
        st.n_scenes += 1
        st.total_weight += g.weight
        classes = {o.class_name for o in g.objects}
        by_class: dict[str, list[SceneObject]] = {}
        for o in g.objects:
            by_class.setdefault(o.class_name, []).append(o)
        for c in classes:
            st.classes.add(c)
            st.class_w[c] = st.class_w.get(c, 0.0) + g.weight
            st.src_of.setdefault(c, set()).add(g.provenance)
            if g.zone_label:
                key = (c, g.zone_label)
                st.zone_w[key] = st.zone_w.get(key, 0.0) + g.weight
        if g.zone_label:
            st.zones.add(g.zone_label)
        ordered = sorted(classes)
        lam = self.params.lam
        for i, a in enumerate(ordered):
            for b in ordered[i + 1 :]:
                # duplicate instances: the closest pair stands in for the scene
                d = min(
                    math.dist(oa.centroid, ob.centroid)
                    for oa in by_class[a]
                    for ob in by_class[b]
                )
                key = _pair(a, b)
                st.pair_w[key] = st.pair_w.get(key, 0.0) + g.weight
                st.pair_decay[key] = st.pair_decay.get(key, 0.0) + g.weight * math.exp(-d / lam)
                st.src_of.setdefault(key, set()).add(g.provenance)
                for top, base in ((a, b), (b, a)):
                    hit = any(
                        _stacked(ot, ob, self.params.stack_tol, self.params.stack_region)
                        for ot in by_class[top]
                        for ob in by_class[base]
                    )
                    if hit:
                        st.stack_w[(top, base)] = st.stack_w.get((top, base), 0.0) + g.weight

    def update_relations(self, detections: EgoScene, zone_guess: str | None) -> None:
        """Append the observed frame as a synthetic scene with weight 1/(n+1)."""
        gamma = 1.0 / (self.stats.n_scenes + 1)
        objs = tuple(
            SceneObject(
                class_name=d.class_name,
                centroid=(min(1.0, max(0.0, d.centroid_x)), min(1.0, max(0.0, (d.box[1] + d.box[3]) / 2.0))),
                dims=(d.box[2] - d.box[0], d.box[3] - d.box[1]),
            )
            for d in detections.non_extension()
        )
        self._absorb(
            SceneGraph(
                scene_id=f"online-{self.stats.n_scenes + 1}",
                objects=objs,
                zone_label=zone_guess,
                weight=gamma,
                provenance="online",
            )
        )

    # -- queries -----------------------------------------------------------

    def _require(self, *names: str) -> None:
        for n in names:
            if n not in self.class_table:
                raise KeyError(f"unknown class name {n!r}")

    def _beta(self) -> float:
        if self.params.beta_mode == "fixed":
            return self.params.beta_fixed
        v = len(self.stats.classes)
        possible = v * (v - 1) / 2
        if possible <= 0:
            return 1.0
        density = self.stats.distinct_edges / possible
        return min(1.0, density) if density > 0 else 1.0

    def rp(self, a: str, b: str) -> float:
        self._require(a, b)
        key = _pair(a, b)
        decay = self.stats.pair_decay.get(key)
        if not decay:
            return 0.0
        union = (
            self.stats.class_w.get(a, 0.0)
            + self.stats.class_w.get(b, 0.0)
            - self.stats.pair_w.get(key, 0.0)
        )
        return self._beta() * decay / max(1.0, union)

    def located_at(self, obj: str, zone: str) -> float:
        self._require(obj)
        w = self.stats.class_w.get(obj, 0.0)
        if w <= 0.0:
            return 0.0
        return self.stats.zone_w.get((obj, zone), 0.0) / max(1.0, w)

    def on_top_of(self, a: str, b: str) -> float:
        self._require(a, b)
        co = self.stats.pair_w.get(_pair(a, b), 0.0)
        if co <= 0.0:
            return 0.0
        return self.stats.stack_w.get((a, b), 0.0) / co

    def located_below(self, b: str, a: str) -> float:
        return self.on_top_of(a, b)

    def occlusion_by(self, target: str, blocker: str) -> float:
        self._require(target, blocker)
        if self.rp(target, blocker) < self.params.tau_co:
            return 0.0
        area_t = self.class_table[target].frontal_area
        area_b = self.class_table[blocker].frontal_area
        if area_t <= 0.0:
            raise KnowledgeError(f"class {target!r} has no usable frontal area")
        return min(1.0, area_b / area_t)

    def infer_zone(self, detections: list[str]) -> str | None:
        if not detections or not self.stats.zones:
            return None
        best = None
        for z in sorted(self.stats.zones):
            vote = sum(
                self.located_at(c, z) for c in detections if c in self.class_table
            )
            if best is None or vote > best[1]:
                best = (z, vote)
        return best[0]

    def zone_relation(self, detections: list[str], target: str) -> float:
        zhat = self.infer_zone(detections)
        if zhat is None or target not in self.class_table:
            return 0.0
        return self.located_at(target, zhat)

    # -- fact enumeration and serialization ---------------------------------

    def _src(self, key) -> str:
        return "+".join(sorted(self.stats.src_of.get(key, {"corpus"})))

    def facts(self) -> list[Fact]:
        out: list[Fact] = []
        for (c, z) in sorted(self.stats.zone_w):
            out.append(
                Fact("locatedAt", c, z, self.located_at(c, z), self.stats.zone_w[(c, z)], self._src(c))
            )
        for key in sorted(self.stats.pair_w):
            a, b = key
            src = self._src(key)
            out.append(Fact("coLocatedWith", a, b, self.rp(a, b), self.stats.pair_w[key], src))
            for top, base in ((a, b), (b, a)):
                p = self.on_top_of(top, base)
                if p > 0.0:
                    w = self.stats.stack_w.get((top, base), 0.0)
                    out.append(Fact("locatedOnTopOf", top, base, p, w, src))
                    out.append(Fact("locatedBelow", base, top, p, w, src))
            for t, blk in ((a, b), (b, a)):
                p = self.occlusion_by(t, blk)
                if p > 0.0:
                    out.append(Fact("occlusionBy", t, blk, p, self.stats.pair_w[key], src))
        return out

    def graphs(self) -> list[SceneGraph]:
        return list(self._graphs)


def ingest_corpus(
    graphs: list[SceneGraph], params: KnowledgeParams, class_table: ClassTable
) -> TripleStore:
    """Build a store by counting over an annotated scene corpus."""
    if not graphs:
        raise KnowledgeError("corpus must contain at least one scene")
    store = TripleStore(params, class_table)
    for g in graphs:
        store._absorb(g)
    return store


def load_scene_graphs(text: str) -> list[SceneGraph]:
    """Parse a corpus document (JSON with a top-level ``scenes`` list)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise KnowledgeError(f"corpus is not valid JSON: {e}") from e
    raw = doc.get("scenes") if isinstance(doc, dict) else doc
    if not isinstance(raw, list):
        raise KnowledgeError("corpus must hold a list of scenes")
    graphs = []
    for i, s in enumerate(raw):
        sid = s.get("scene_id")
        if not sid:
            raise KnowledgeError(f"scene #{i} needs a scene_id")
        objs = tuple(
            SceneObject(
                class_name=o["class_name"],
                centroid=(float(o["centroid"][0]), float(o["centroid"][1])),
                dims=(float(o["dims"][0]), float(o["dims"][1])),
            )
            for o in s.get("objects", [])
        )
        graphs.append(
            SceneGraph(
                scene_id=str(sid),
                objects=objs,
                zone_label=s.get("zone_label"),
                weight=float(s.get("weight", 1.0)),
                provenance=str(s.get("provenance", "corpus")),
            )
        )
    return graphs


def bundled_corpus() -> list[SceneGraph]:
    from importlib import resources

    text = resources.files("geosemnav.data").joinpath("corpus_mini.json").read_text()
    return load_scene_graphs(text)


_HEADER = "# geosemnav triples v1"


def export_triples(store: TripleStore) -> str:
    """Serialize a store to a line-oriented text document.

    Scene lines carry everything needed to rebuild the statistics; fact
    lines repeat the derived probabilities for human and tool consumption.
    """
    lines = [_HEADER]
    p = store.params
    lines.append(
        f"params beta_mode={p.beta_mode} beta_fixed={p.beta_fixed!r} lam={p.lam!r} "
        f"tau_co={p.tau_co!r} stack_tol={p.stack_tol!r} stack_region={p.stack_region!r}"
    )
    for g in store.graphs():
        objs = json.dumps(
            [
                {"class_name": o.class_name, "centroid": list(o.centroid), "dims": list(o.dims)}
                for o in g.objects
            ],
            separators=(",", ":"),
        )
        zone = g.zone_label if g.zone_label is not None else "-"
        lines.append(f"scene {g.scene_id} zone={zone} w={g.weight!r} src={g.provenance} objects={objs}")
    for f in store.facts():
        lines.append(
            f"{f.relation} {f.subject} {f.object} p={f.p!r} w={f.weight!r} src={f.provenance}"
        )
    return "\n".join(lines) + "\n"


def import_triples(text: str, class_table: ClassTable) -> TripleStore:
    """Rebuild a store from an exported document.  Fact lines are checked
    against the recomputed values rather than trusted."""
    lines = text.splitlines()
    if not lines or lines[0].strip() != _HEADER:
        raise KnowledgeError("line 1: missing document header")
    params = KnowledgeParams()
    store: TripleStore | None = None
    graphs: list[SceneGraph] = []
    for no, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        kind, _, rest = line.partition(" ")
        try:
            if kind == "params":
                kv = dict(tok.split("=", 1) for tok in rest.split())
                params = KnowledgeParams(
                    beta_mode=kv.get("beta_mode", "fixed"),
                    beta_fixed=float(kv.get("beta_fixed", 1.0)),
                    lam=float(kv.get("lam", 0.5)),
                    tau_co=float(kv.get("tau_co", 0.2)),
                    stack_tol=float(kv.get("stack_tol", 0.05)),
                    stack_region=float(kv.get("stack_region", 0.25)),
                )
            elif kind == "scene":
                sid, rest2 = rest.split(" ", 1)
                kv = {}
                for key in ("zone", "w", "src", "objects"):
                    m = re.search(rf"{key}=(\S.*?)(?= \w+=|$)", rest2)
                    if not m:
                        raise ValueError(f"missing field {key}")
                    kv[key] = m.group(1)
                objs = tuple(
                    SceneObject(o["class_name"], tuple(o["centroid"]), tuple(o["dims"]))
                    for o in json.loads(kv["objects"])
                )
                graphs.append(
                    SceneGraph(
                        scene_id=sid,
                        objects=objs,
                        zone_label=None if kv["zone"] == "-" else kv["zone"],
                        weight=float(kv["w"]),
                        provenance=kv["src"],
                    )
                )
            elif kind in ("locatedAt", "coLocatedWith", "locatedOnTopOf", "locatedBelow", "occlusionBy"):
                pass  # derived lines; recomputed from scene lines
            else:
                raise ValueError(f"unknown record kind {kind!r}")
        except (ValueError, KeyError, json.JSONDecodeError) as e:
            raise KnowledgeError(f"line {no}: {e}") from e
    store = TripleStore(params, class_table)
    for g in graphs:
        store._absorb(g)
    return store
