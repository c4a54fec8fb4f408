import { describe, expect, it } from "vitest";

import { formatBoard, summarize } from "../src/leaderboard.js";
import type { LeaderboardEntry } from "../src/protocol.js";

function entry(player: string, elapsed_s: number, success = true): LeaderboardEntry {
  return { player, success, elapsed_s, sim_time_s: elapsed_s, steps: 50 };
}

describe("summarize", () => {
  it("handles an empty feed", () => {
    expect(summarize([])).toEqual([]);
    expect(formatBoard(summarize([]))).toEqual(["no results yet"]);
  });

  it("gives one row per player type", () => {
    const rows = summarize([entry("human", 300), entry("agent", 117)]);
    expect(rows.map((r) => r.player)).toEqual(["agent", "human"]);
    expect(rows[1]).toEqual({ player: "human", n: 1, min: 300, max: 300, avg: 300 });
  });

  it("recomputes the demo fixture stats exactly", () => {
    const humanTimes = [83, 200, 632, 700, 786];
    const feed = [...humanTimes.map((t) => entry("human", t)), entry("agent", 117)];
    const rows = summarize(feed);

    const human = rows.find((r) => r.player === "human")!;
    expect(human.n).toBe(5);
    expect(human.min).toBe(83);
    expect(human.max).toBe(786);
    expect(human.avg).toBe((83 + 200 + 632 + 700 + 786) / 5);

    const agent = rows.find((r) => r.player === "agent")!;
    expect(agent).toEqual({ player: "agent", n: 1, min: 117, max: 117, avg: 117 });
  });

  it("drops unsuccessful runs from the timings", () => {
    const rows = summarize([entry("human", 83), entry("human", 900, false)]);
    expect(rows).toEqual([{ player: "human", n: 1, min: 83, max: 83, avg: 83 }]);
    expect(summarize([entry("human", 900, false)])).toEqual([]);
  });
});

describe("formatBoard", () => {
  it("lays out the fixture as a readable table", () => {
    const feed = [83, 200, 632, 700, 786].map((t) => entry("human", t));
    feed.push(entry("agent", 117));
    const lines = formatBoard(summarize(feed));
    expect(lines).toHaveLength(3);
    expect(lines[0]).toMatch(/player\s+runs\s+min\s+max\s+avg/);
    const human = lines.find((l) => l.startsWith("human"))!;
    expect(human).toMatch(/\b83\b/);
    expect(human).toMatch(/\b786\b/);
    expect(human).toMatch(/\b480\.2\b/);
    const agent = lines.find((l) => l.startsWith("agent"))!;
    expect(agent.match(/\b117\b/g)).toHaveLength(3);
  });
});
