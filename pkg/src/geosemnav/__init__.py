"""Desk-scale semantic object-goal navigation: grid world, egocentric
perception, a relation-probability knowledge store, landmark mapping, the
navigation agent, and the evaluation harness with a live play service."""

from .world import (
    Action,
    ActionModel,
    Floorplan,
    FloorplanError,
    ObjectInstance,
    RayCaster,
    RobotState,
    apply_action,
    blocking_entity,
    heading_vector,
    is_success,
    load_floorplan,
    load_floorplan_file,
)
from .perception import (
    ClassEntry,
    ClassTable,
    DetectorModel,
    Detection,
    EgoScene,
    SceneArea,
    TruthScene,
    bundled_class_table,
    detect,
    load_class_table,
    render_ego,
    segment_areas,
)
from .knowledge import (
    Fact,
    KnowledgeError,
    KnowledgeParams,
    SceneGraph,
    SceneObject,
    TripleStore,
    bundled_corpus,
    export_triples,
    import_triples,
    ingest_corpus,
    load_scene_graphs,
)
from .geosem import GeoSemMap, LandmarkParams, StepRecord, landmark_score
from .agent import (
    AgentParams,
    BASELINES,
    Decision,
    Episode,
    EpisodeResult,
    decide,
    manhattan_bypass,
    rotation_scan,
    run_episode,
)
from .harness import (
    BatchSummary,
    ConfigError,
    ReplayReport,
    RunConfig,
    ingest,
    replay_trace,
    run_batch,
    run_one,
    summarize,
    summarize_files,
    write_episode,
)

__version__ = "0.1.0"

__all__ = [
    "Action",
    "ActionModel",
    "AgentParams",
    "BASELINES",
    "BatchSummary",
    "ClassEntry",
    "ClassTable",
    "ConfigError",
    "Decision",
    "Detection",
    "DetectorModel",
    "EgoScene",
    "Episode",
    "EpisodeResult",
    "Fact",
    "Floorplan",
    "FloorplanError",
    "GeoSemMap",
    "KnowledgeError",
    "KnowledgeParams",
    "LandmarkParams",
    "ObjectInstance",
    "RayCaster",
    "ReplayReport",
    "RobotState",
    "RunConfig",
    "SceneArea",
    "SceneGraph",
    "SceneObject",
    "StepRecord",
    "TripleStore",
    "TruthScene",
    "apply_action",
    "blocking_entity",
    "bundled_class_table",
    "bundled_corpus",
    "decide",
    "detect",
    "export_triples",
    "heading_vector",
    "import_triples",
    "ingest",
    "ingest_corpus",
    "is_success",
    "landmark_score",
    "load_class_table",
    "load_floorplan",
    "load_floorplan_file",
    "load_scene_graphs",
    "manhattan_bypass",
    "render_ego",
    "replay_trace",
    "rotation_scan",
    "run_batch",
    "run_episode",
    "run_one",
    "segment_areas",
    "summarize",
    "summarize_files",
    "write_episode",
]
