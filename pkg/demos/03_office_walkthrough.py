"""
One office episode, narrated decision by decision
=================================================

Runs the agent on the bundled office plan (seed 0) and prints the rule each
movement came from, the route over the grid, and the landmark-score trace.
"""

import json

from geosemnav.harness import RunConfig, resolve_asset, run_one


def route_map(plan_doc, steps):
    grid = [list(row) for row in plan_doc["cells"]]
    for o in plan_doc.get("objects", []):
        x, y = o["at"]
        grid[y][x] = o["class"][0].upper()
    for i, rec in enumerate(steps):
        x, y, _ = rec.pose
        if grid[y][x] == ".":
            grid[y][x] = str(i % 10)
    return "\n".join("".join(row) for row in grid)


def main():
    config = RunConfig.from_dict({"floorplan": "office_fig3", "target": "cup"})
    result, episode = run_one(config, seed=0)

    print(f"target: {result.target}   seed: {result.seed}\n")
    for i, d in enumerate(result.decisions):
        extra = f" -> area {d['area_index']}" if d.get("area_index") is not None else ""
        scores = d.get("area_scores")
        tail = f"  scores={scores}" if scores else ""
        print(f"  decision {i}: {d['rule']}{extra}  actions={d['actions']}{tail}")

    print(f"\nactions: {result.actions}")
    print(f"success={result.success} termination={result.termination} "
          f"steps={result.steps} sim_time={result.sim_time_s:.2f} s")

    doc = json.loads(resolve_asset("office_fig3", "floorplan").read_text())
    print("\nroute (digits are step order, letters are object cells):")
    print(route_map(doc, episode.gmap.steps))

    print("\nlandmark score after each step:")
    print(" ", [round(v, 3) for v in result.landmark_trace])
    seen = sorted({d.class_name for d in episode.last_ego.detections if not d.extension})
    print(f"\nfinal frame sees: {seen}")


if __name__ == "__main__":
    main()
