// Shared message builders for the tests; defaults mimic what the service
// actually emits for a 3-band frame.

import type { FrameMsg, WireArea, WireDetection } from "../src/protocol.js";

const BAND_LABELS = ["Left", "Middle", "Right"];

export function det(partial: Partial<WireDetection> & { class: string }): WireDetection {
  return {
    confidence: 1.0,
    box: [0.4, 0.4, 0.6, 0.6],
    distance: 3.0,
    restricted: false,
    extension: false,
    ...partial,
  };
}

export function area(index: number, partial: Partial<WireArea> = {}): WireArea {
  return {
    index,
    label: BAND_LABELS[index] ?? `Band${index}`,
    free_space: true,
    obstacle: false,
    opening: false,
    restricted: false,
    passage: false,
    detections: [],
    ...partial,
  };
}

export function frameWith(
  detections: WireDetection[],
  areas: WireArea[],
  target = "cup",
): FrameMsg {
  return {
    type: "frame",
    areas,
    detections,
    pose_hidden: true,
    elapsed_s: 1.5,
    sim_time_s: 3.0,
    target,
    produced_by: "fast",
  };
}

/** Empty corridor: walls and floor only, every band walkable. */
export function corridorFrame(): FrameMsg {
  const walls = [0, 1, 2].map((i) =>
    det({ class: "wall", box: [i / 3, 0.3, (i + 1) / 3, 0.7], distance: 5.0, extension: true }),
  );
  const floor = det({ class: "floor", box: [0, 0.65, 1, 1], distance: 0, extension: true });
  return frameWith(
    [...walls, floor],
    [area(0, { detections: [0, 3] }), area(1, { detections: [1, 3] }), area(2, { detections: [2, 3] })],
  );
}
