"""
The play service, driven in-process
===================================

The same episode machinery the agent uses can be steered one action at a
time, which is what the WebSocket service exposes to a browser.  This demo
drives a session directly and prints the exact JSON a client would see.

To host it for real:  geosemnav serve --floorplan office_fig3 --target cup \
    --record-agent --leaderboard /tmp/board.jsonl
(then open the browser client from frontend/ against ws://127.0.0.1:8000/ws)
"""

from geosemnav.harness import RunConfig, run_one
from geosemnav.service import (
    PlayService,
    ServiceConfig,
    encode_message,
    frame_message,
    result_message,
)
from geosemnav.world import Action


def main():
    cfg = RunConfig.from_dict({"floorplan": "office_fig3", "target": "cup"})
    service = PlayService(ServiceConfig(run=cfg))

    # what the agent did, so we can replay the winning line
    golden, _ = run_one(cfg, seed=0)
    service.record_result(golden, "agent", golden.sim_time_s)

    session = service.create_session(player="demo-human")
    print(f"session {session.session_id} opened; first frame on the wire:")
    print(" ", encode_message(frame_message(session.episode.last_ego, 0.0, 0.0, "cup")))

    for name in golden.actions:
        if session.done:
            break
        ego = service.step(session, Action(name))
        msg = frame_message(ego, session.elapsed_s(), session.episode.sim_time, "cup")
        classes = sorted({d["class"] for d in msg["detections"] if not d["extension"]})
        print(f"  {name:<11s} -> frame sees {classes}")
        final = service.maybe_finalize(session)
        if final is not None:
            print("\nresult on the wire:")
            print(" ", encode_message(result_message(final, session.elapsed_s())))

    print("\nleaderboard for this plan and target:")
    for e in service.leaderboard_entries("office_fig3", "cup"):
        print(f"  {e['player']:<10s} success={e['success']} steps={e['steps']} "
              f"sim={e['sim_time_s']}s")


if __name__ == "__main__":
    main()
