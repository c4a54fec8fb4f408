// Pseudo-3D view of one egocentric frame.
//
// The server frame is already the whole game state a player is allowed to
// see: per-band flags plus labeled detection boxes in normalized image
// coordinates. renderFrame turns exactly that into a list of draw ops and
// nothing else, so rendering stays a pure function of the latest frame and
// snapshot tests can pin it down. paint() replays ops onto a real canvas.

import type { FrameMsg, WireArea, WireDetection } from "./protocol.js";

export interface View {
  width: number;
  height: number;
}

export const DEFAULT_VIEW: View = { width: 720, height: 480 };

export type DrawOp =
  | { op: "clear"; color: string }
  | { op: "rect"; x: number; y: number; w: number; h: number; color: string }
  | { op: "poly"; points: [number, number][]; color: string }
  | { op: "line"; x0: number; y0: number; x1: number; y1: number; color: string }
  | { op: "box"; x: number; y: number; w: number; h: number; label: string; color: string }
  | {
      op: "text";
      x: number;
      y: number;
      text: string;
      color: string;
      size: number;
      align: "left" | "center" | "right";
    };

export const COLORS = {
  ceiling: "#1c2026",
  floor: "#3a3f46",
  floorFree: "#4a5058",
  floorPassage: "#565e68",
  wall: "#6b7280",
  wallFar: "#30343b",
  door: "#8a6d3b",
  obstacle: "#23262b",
  restrictedTint: "rgba(190,60,60,0.25)",
  separator: "#101216",
  boxTarget: "#6ee76e",
  box: "#e7d56e",
  boxRestricted: "#e76e6e",
  hud: "#d4d8e0",
  bandLabel: "#8a9099",
} as const;

// apparent slab height for something d cells away; d=0 fills the view
function apparentH(viewH: number, d: number): number {
  return viewH * Math.min(1, 1.5 / (1 + d));
}

function nearestWall(areaDet: WireDetection[]): number | null {
  let best: number | null = null;
  for (const det of areaDet) {
    if (det.extension && det.class === "wall") {
      if (best === null || det.distance < best) best = det.distance;
    }
  }
  return best;
}

function bandOps(area: WireArea, dets: WireDetection[], view: View, k: number): DrawOp[] {
  const ops: DrawOp[] = [];
  const w = view.width / k;
  const x0 = area.index * w;
  const horizon = view.height / 2;
  const areaDet = area.detections.map((i) => dets[i]).filter((d) => d !== undefined);

  // far wall slab: nearer walls loom larger; an open band gets a haze sliver
  const wallD = nearestWall(areaDet);
  const slabH = wallD === null ? view.height * 0.08 : apparentH(view.height, wallD);
  const slabColor = wallD !== null && wallD <= 1.5 ? COLORS.wall : COLORS.wallFar;
  ops.push({ op: "rect", x: x0, y: horizon - slabH / 2, w, h: slabH, color: slabColor });

  // floor and ceiling wedges narrowing toward the slab give the depth cue
  const inset = w * 0.12;
  const floorColor = area.passage
    ? COLORS.floorPassage
    : area.free_space
      ? COLORS.floorFree
      : COLORS.floor;
  ops.push({
    op: "poly",
    points: [
      [x0, view.height],
      [x0 + w, view.height],
      [x0 + w - inset, horizon + slabH / 2],
      [x0 + inset, horizon + slabH / 2],
    ],
    color: floorColor,
  });
  ops.push({
    op: "poly",
    points: [
      [x0, 0],
      [x0 + w, 0],
      [x0 + w - inset, horizon - slabH / 2],
      [x0 + inset, horizon - slabH / 2],
    ],
    color: COLORS.ceiling,
  });

  if (area.opening) {
    const doorH = slabH * 0.85;
    ops.push({
      op: "rect",
      x: x0 + w * 0.3,
      y: horizon - doorH / 2,
      w: w * 0.4,
      h: doorH,
      color: COLORS.door,
    });
  }
  if (area.obstacle) {
    ops.push({
      op: "rect",
      x: x0 + w * 0.15,
      y: view.height * 0.72,
      w: w * 0.7,
      h: view.height * 0.2,
      color: COLORS.obstacle,
    });
  }
  if (area.restricted) {
    ops.push({ op: "rect", x: x0, y: 0, w, h: view.height, color: COLORS.restrictedTint });
  }
  return ops;
}

export function renderFrame(frame: FrameMsg, view: View = DEFAULT_VIEW): DrawOp[] {
  const ops: DrawOp[] = [{ op: "clear", color: COLORS.ceiling }];
  ops.push({
    op: "rect",
    x: 0,
    y: view.height / 2,
    w: view.width,
    h: view.height / 2,
    color: COLORS.floor,
  });

  const k = Math.max(1, frame.areas.length);
  for (const area of frame.areas) {
    ops.push(...bandOps(area, frame.detections, view, k));
  }

  for (let i = 1; i < k; i++) {
    const x = (view.width / k) * i;
    ops.push({ op: "line", x0: x, y0: 0, x1: x, y1: view.height, color: COLORS.separator });
  }
  for (const area of frame.areas) {
    ops.push({
      op: "text",
      x: (area.index + 0.5) * (view.width / k),
      y: view.height - 8,
      text: area.label,
      color: COLORS.bandLabel,
      size: 12,
      align: "center",
    });
  }

  // labeled boxes only for real objects; scene structure stays as fills
  for (const det of frame.detections) {
    if (det.extension) continue;
    const [bx0, by0, bx1, by1] = det.box;
    const color =
      det.class === frame.target
        ? COLORS.boxTarget
        : det.restricted
          ? COLORS.boxRestricted
          : COLORS.box;
    ops.push({
      op: "box",
      x: bx0 * view.width,
      y: by0 * view.height,
      w: (bx1 - bx0) * view.width,
      h: (by1 - by0) * view.height,
      label: `${det.class} ${det.confidence.toFixed(2)}`,
      color,
    });
  }

  ops.push({
    op: "text",
    x: 10,
    y: 20,
    text: `find: ${frame.target}`,
    color: COLORS.hud,
    size: 16,
    align: "left",
  });
  ops.push({
    op: "text",
    x: view.width - 10,
    y: 20,
    text: `${frame.elapsed_s.toFixed(1)}s`,
    color: COLORS.hud,
    size: 16,
    align: "right",
  });
  ops.push({
    op: "text",
    x: view.width - 10,
    y: view.height - 8,
    text: `detector: ${frame.produced_by}`,
    color: COLORS.bandLabel,
    size: 11,
    align: "right",
  });
  return ops;
}

export function paint(ops: DrawOp[], ctx: CanvasRenderingContext2D): void {
  for (const o of ops) {
    switch (o.op) {
      case "clear":
        ctx.fillStyle = o.color;
        ctx.fillRect(0, 0, ctx.canvas.width, ctx.canvas.height);
        break;
      case "rect":
        ctx.fillStyle = o.color;
        ctx.fillRect(o.x, o.y, o.w, o.h);
        break;
      case "poly": {
        ctx.fillStyle = o.color;
        ctx.beginPath();
        ctx.moveTo(o.points[0][0], o.points[0][1]);
        for (const [px, py] of o.points.slice(1)) ctx.lineTo(px, py);
        ctx.closePath();
        ctx.fill();
        break;
      }
      case "line":
        ctx.strokeStyle = o.color;
        ctx.beginPath();
        ctx.moveTo(o.x0, o.y0);
        ctx.lineTo(o.x1, o.y1);
        ctx.stroke();
        break;
      case "box":
        ctx.strokeStyle = o.color;
        ctx.lineWidth = 2;
        ctx.strokeRect(o.x, o.y, o.w, o.h);
        ctx.fillStyle = o.color;
        ctx.font = "12px monospace";
        ctx.textAlign = "left";
        ctx.fillText(o.label, o.x, Math.max(12, o.y - 4));
        break;
      case "text":
        ctx.fillStyle = o.color;
        ctx.font = `${o.size}px monospace`;
        ctx.textAlign = o.align;
        ctx.fillText(o.text, o.x, o.y);
        break;
    }
  }
}
