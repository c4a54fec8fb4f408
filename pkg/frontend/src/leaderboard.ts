import type { LeaderboardEntry } from "./protocol.js";

export interface BoardRow {
  player: string;
  n: number;
  min: number;
  max: number;
  avg: number;
}

/**
 * Min/max/average wall seconds per player type, successful runs only
 * (a quit or exhausted run has no completion time to rank).
 */
export function summarize(entries: LeaderboardEntry[]): BoardRow[] {
  const times = new Map<string, number[]>();
  for (const e of entries) {
    if (!e.success) continue;
    const bucket = times.get(e.player);
    if (bucket) bucket.push(e.elapsed_s);
    else times.set(e.player, [e.elapsed_s]);
  }
  const rows: BoardRow[] = [];
  for (const [player, ts] of times) {
    rows.push({
      player,
      n: ts.length,
      min: Math.min(...ts),
      max: Math.max(...ts),
      avg: ts.reduce((a, b) => a + b, 0) / ts.length,
    });
  }
  rows.sort((a, b) => (a.player < b.player ? -1 : a.player > b.player ? 1 : 0));
  return rows;
}

const fmt = (v: number) => (Number.isInteger(v) ? String(v) : v.toFixed(1));

/** Plain-text table for the overlay; one line per row. */
export function formatBoard(rows: BoardRow[]): string[] {
  if (rows.length === 0) return ["no results yet"];
  const lines = ["player    runs   min     max     avg"];
  for (const r of rows) {
    lines.push(
      `${r.player.padEnd(10)}${String(r.n).padEnd(7)}${fmt(r.min).padEnd(8)}${fmt(r.max).padEnd(8)}${fmt(r.avg)}`,
    );
  }
  return lines;
}
