"""
Egocentric frames: detection, noise, fallback, and scene areas
==============================================================

Casts rays from a pose on the bundled office plan and prints what the
two-tier detector reports, then slices the frame into the Left/Middle/Right
areas the decision rules operate on.
"""

import numpy as np

from geosemnav.harness import resolve_asset
from geosemnav.perception import DetectorModel, bundled_class_table, detect, render_ego, segment_areas
from geosemnav.world import RayCaster, RobotState, load_floorplan_file


def show_frame(ego, table):
    print(f"  produced_by={ego.produced_by}  latency={ego.latency_s * 1000:.0f} ms")
    for d in ego.detections:
        span = f"[{d.box[0]:.2f}..{d.box[2]:.2f}]"
        kind = "ext" if d.extension else "obj"
        print(f"    {kind}  {d.class_name:<7s} conf={d.confidence:.3f} x={span} dist={d.distance:.1f}")
    for a in segment_areas(ego, table).areas:
        flags = [
            name
            for name, on in [
                ("free", a.has_free_space),
                ("obstacle", a.has_obstacle),
                ("opening", a.has_opening),
                ("passage", a.is_passage),
            ]
            if on
        ]
        members = sorted({ego.detections[i].class_name for i in a.detection_indices})
        print(f"    area {a.index} {a.label:<6s} {flags} members={members}")


def main():
    table = bundled_class_table()
    plan = load_floorplan_file(resolve_asset("office_fig3", "floorplan"))
    caster = RayCaster(plan)
    pose = RobotState(2, 1, 0)
    truth = render_ego(pose, plan, table, DetectorModel(), caster)

    print("clean detector (no miss, no jitter):")
    clean = DetectorModel(p_miss=0.0, confidence_noise_sd=0.0)
    show_frame(detect(truth, clean, np.random.default_rng(0)), table)

    print("\nsame pose, default noise:")
    show_frame(detect(truth, DetectorModel(), np.random.default_rng(3)), table)

    print("\nalmost-blind fast pass, robust fallback takes over:")
    flaky = DetectorModel(p_miss=0.98)
    for seed in range(50):
        ego = detect(truth, flaky, np.random.default_rng(seed))
        if ego.produced_by == "fallback":
            show_frame(ego, table)
            break


if __name__ == "__main__":
    main()
