"""
Episode artifacts and trace replay
==================================

Every run can leave two files behind: a result JSON and a step-by-step
trace (JSON lines).  The replay tool re-executes a trace against the same
config and flags any divergence, so a trace doubles as a tamper-evident
record of the run.
"""

import json
import tempfile
from pathlib import Path

from geosemnav.harness import RunConfig, replay_file, run_batch


def main():
    out = Path(tempfile.mkdtemp(prefix="geosemnav_demo_"))
    cfg = RunConfig.from_dict({
        "floorplan": "office_fig3", "target": "cup",
        "seeds": [0], "out_dir": str(out),
    })
    run_batch(cfg)
    trace = out / "office_fig3_cup_s0.trace.jsonl"
    print(f"wrote {sorted(p.name for p in out.iterdir())}\n")

    print("first trace records:")
    for line in trace.read_text().splitlines()[:3]:
        print(" ", line)

    report = replay_file(cfg, trace)
    print(f"\nreplay of the genuine trace: ok={report.ok} "
          f"final_pose={report.final_pose} success={report.success}")

    # now forge one pose and watch the replay call it out
    lines = trace.read_text().splitlines()
    doc = json.loads(lines[2])
    doc["pose"][0] += 3
    lines[2] = json.dumps(doc)
    forged = out / "forged.jsonl"
    forged.write_text("\n".join(lines) + "\n")
    report = replay_file(cfg, forged)
    print(f"\nreplay of a forged trace: ok={report.ok}")
    for m in report.mismatches:
        print("  mismatch:", m)


if __name__ == "__main__":
    main()
