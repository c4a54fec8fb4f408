"""
Seeded sweep on the long corridor plan, against a random walk
=============================================================

Twenty seeds of the agent on `webots_replica`, then the same seeds driven
by the uninformed random-walk baseline under the identical budget.
"""

import statistics

from geosemnav.harness import RunConfig, run_batch


def main():
    cfg = RunConfig.from_dict({
        "floorplan": "webots_replica",
        "target": "orange",
        "seeds": list(range(20)),
    })

    print("agent:")
    summary, agent_results = run_batch(cfg)
    print(summary.table())

    print("random walk, same seeds and budget:")
    base_summary, base_results = run_batch(cfg, policy="random_walk")
    print(base_summary.table())

    a = statistics.median(r.steps for r in agent_results)
    b = statistics.median(r.steps for r in base_results)
    print(f"median steps: agent {a:.0f} vs random walk {b:.0f} "
          f"({a / b:.2f}x)")


if __name__ == "__main__":
    main()
