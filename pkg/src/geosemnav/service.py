"""Live play service: WebSocket sessions, frame streaming, leaderboard.

A session drives the very same :class:`~geosemnav.agent.Episode` machinery the
autonomous agent uses; only the action source differs.  Frames sent to the
client carry egocentric information exclusively (detections, scene areas,
clocks) and never the global pose or map.

Wire protocol, JSON per message:

* client -> server: ``{"type": "start", "plan": …, "target": …}`` (both fields
  optional, service defaults apply), ``{"type": "action", "value": "Forward"}``,
  ``{"type": "leaderboard"}``, ``{"type": "quit"}``.
* server -> client: ``{"type": "frame", …}``, ``{"type": "result", …}``,
  ``{"type": "leaderboard", "entries": […]}``, ``{"type": "error", "code":
  "busy" | "malformed" | "unknown_session"}``.
"""

from __future__ import annotations

import asyncio
import json
import time
from dataclasses import dataclass, replace
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .agent import Episode, EpisodeResult
from .harness import RunConfig, build_store, load_world, run_one
from .perception import EgoScene
from .world import Action

ERROR_CODES = ("busy", "malformed", "unknown_session")

_ACTION_NAMES = {a.value for a in Action}

# required fields (name -> type) per message type, by direction
_CLIENT_REQUIRED = {
    "start": {},
    "action": {"value": str},
    "quit": {},
    "leaderboard": {},
}
_CLIENT_OPTIONAL = {
    "start": {"plan": str, "target": str},
    "action": {},
    "quit": {},
    "leaderboard": {"plan": str, "target": str},
}
_SERVER_REQUIRED = {
    "frame": {"areas": list, "detections": list, "pose_hidden": bool, "elapsed_s": (int, float)},
    "result": {"success": bool, "elapsed_s": (int, float), "steps": int},
    "error": {"code": str},
    "leaderboard": {"entries": list},
}


class ProtocolError(ValueError):
    """A message violating the wire protocol; always maps to code=malformed."""

    code = "malformed"


def encode_message(msg: dict) -> str:
    return json.dumps(msg, separators=(",", ":"))


def parse_message(text: str, direction: str = "client") -> dict:
    """Validate one wire message; returns the parsed dict unchanged."""
    try:
        msg = json.loads(text)
    except json.JSONDecodeError as e:
        raise ProtocolError(f"not valid JSON: {e}") from e
    if not isinstance(msg, dict):
        raise ProtocolError("message must be a JSON object")
    kind = msg.get("type")
    schemas = _CLIENT_REQUIRED if direction == "client" else _SERVER_REQUIRED
    if kind not in schemas:
        raise ProtocolError(f"unknown message type {kind!r}")
    for name, types in schemas[kind].items():
        if name not in msg:
            raise ProtocolError(f"{kind} message is missing {name!r}")
        if not isinstance(msg[name], types):
            raise ProtocolError(f"{kind}.{name} has the wrong type")
    if direction == "client":
        for name, types in _CLIENT_OPTIONAL[kind].items():
            if name in msg and not isinstance(msg[name], types):
                raise ProtocolError(f"{kind}.{name} has the wrong type")
        if kind == "action" and msg["value"] not in _ACTION_NAMES:
            raise ProtocolError(f"unknown action {msg['value']!r}")
    elif kind == "error" and msg["code"] not in ERROR_CODES:
        raise ProtocolError(f"unknown error code {msg['code']!r}")
    return msg


def frame_message(ego: EgoScene, elapsed_s: float, sim_time_s: float, target: str) -> dict:
    """Egocentric frame for the client; deliberately pose-free."""
    detections = [
        {
            "class": d.class_name,
            "confidence": round(d.confidence, 6),
            "box": [round(v, 4) for v in d.box],
            "distance": round(d.distance, 3),
            "restricted": d.restricted,
            "extension": d.extension,
        }
        for d in ego.detections
    ]
    areas = [
        {
            "index": a.index,
            "label": a.label,
            "free_space": a.has_free_space,
            "obstacle": a.has_obstacle,
            "opening": a.has_opening,
            "restricted": a.has_restricted,
            "passage": a.is_passage,
            "detections": list(a.detection_indices),
        }
        for a in ego.areas
    ]
    return {
        "type": "frame",
        "areas": areas,
        "detections": detections,
        "pose_hidden": True,
        "elapsed_s": round(elapsed_s, 3),
        "sim_time_s": round(sim_time_s, 3),
        "target": target,
        "produced_by": ego.produced_by,
    }


def result_message(result: EpisodeResult, elapsed_s: float) -> dict:
    return {
        "type": "result",
        "success": result.success,
        "elapsed_s": round(elapsed_s, 3),
        "steps": result.steps,
        "termination": result.termination,
        "target": result.target,
    }


def error_message(code: str, detail: str | None = None) -> dict:
    msg = {"type": "error", "code": code}
    if detail:
        msg["detail"] = detail
    return msg


# -- sessions ---------------------------------------------------------------------


@dataclass(frozen=True)
class ServiceConfig:
    run: RunConfig
    leaderboard_path: str | None = None
    # real-time pause per action; lets a second action arrive "in flight"
    actuation_delay_s: float = 0.0


class SessionState:
    """One live game: the episode plus in-flight and finalization bookkeeping."""

    def __init__(self, session_id: str, player: str, episode: Episode):
        self.session_id = session_id
        self.player = player
        self.episode = episode
        self.started_at = time.monotonic()
        self.in_flight = False
        self.result: EpisodeResult | None = None

    @property
    def done(self) -> bool:
        return self.result is not None

    def elapsed_s(self) -> float:
        return time.monotonic() - self.started_at

    def begin_action(self) -> bool:
        """Claim the single action slot; False when one is already in flight."""
        if self.in_flight or self.done:
            return False
        self.in_flight = True
        return True

    def finish_action(self) -> None:
        self.in_flight = False

    def finalize(self, result: EpisodeResult) -> None:
        if self.result is not None:
            raise RuntimeError(f"session {self.session_id} was already finalized")
        self.result = result


class PlayService:
    """Session factory and leaderboard keeper shared by all connections."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.sessions: dict[str, SessionState] = {}
        self._memory_board: list[dict] = []
        self._counter = 0

    # -- session lifecycle ---------------------------------------------------

    def create_session(
        self, plan: str | None = None, target: str | None = None, player: str = "human"
    ) -> SessionState:
        cfg = self.config.run
        if plan is not None:
            cfg = replace(cfg, floorplan=plan)
        if target is not None:
            cfg = replace(cfg, target=target)
        world, start, table = load_world(cfg)
        store = build_store(cfg, table)
        episode = Episode(
            world,
            start,
            cfg.target,
            store,
            table,
            detector=cfg.detector,
            action_model=cfg.action,
            agent_params=cfg.agent,
            landmark_params=cfg.landmark,
            seed=cfg.seeds[0],
        )
        self._counter += 1
        session = SessionState(f"s{self._counter:04d}", player, episode)
        self.sessions[session.session_id] = session
        episode.process_frame(None)
        return session

    def step(self, session: SessionState, action: Action) -> EgoScene:
        ego, _ = session.episode.step_external(action)
        return ego

    def maybe_finalize(self, session: SessionState) -> EpisodeResult | None:
        """Close out the session if it just succeeded or ran out of map/budget."""
        if session.done:
            return None
        ep = session.episode
        if ep.success:
            return self.finalize(session, "found")
        if ep.gmap.scan_full():
            term = "budget" if len(ep.gmap.steps) >= ep.lm_params.budget else "scan_full"
            return self.finalize(session, term)
        return None

    def finalize(self, session: SessionState, termination: str) -> EpisodeResult:
        session.finalize(session.episode.result(termination))
        self.record_result(session.result, session.player, session.elapsed_s())
        return session.result

    # -- leaderboard ----------------------------------------------------------

    def record_result(self, result: EpisodeResult, player: str, elapsed_s: float) -> None:
        entry = json.loads(result.to_json())
        entry.pop("decisions", None)
        entry.pop("landmark_trace", None)
        entry["player"] = player
        entry["elapsed_s"] = round(elapsed_s, 3)
        if self.config.leaderboard_path:
            path = Path(self.config.leaderboard_path)
            path.parent.mkdir(parents=True, exist_ok=True)
            with path.open("a") as fh:
                fh.write(json.dumps(entry, separators=(",", ":")) + "\n")
        else:
            self._memory_board.append(entry)

    def record_agent(self, seed: int | None = None) -> EpisodeResult:
        """Run the configured agent once and post it to the leaderboard."""
        cfg = self.config.run
        result, _ = run_one(cfg, cfg.seeds[0] if seed is None else seed)
        self.record_result(result, "agent", result.sim_time_s)
        return result

    def leaderboard_entries(self, plan: str | None = None, target: str | None = None) -> list[dict]:
        raw: list[dict] = []
        if self.config.leaderboard_path and Path(self.config.leaderboard_path).is_file():
            with Path(self.config.leaderboard_path).open() as fh:
                raw = [json.loads(line) for line in fh if line.strip()]
        else:
            raw = list(self._memory_board)
        out = []
        for e in raw:
            if plan is not None and e.get("plan_name") != plan:
                continue
            if target is not None and e.get("target") != target:
                continue
            out.append(
                {
                    "player": e.get("player", "human"),
                    "success": e.get("success", False),
                    "elapsed_s": e.get("elapsed_s", 0.0),
                    "sim_time_s": e.get("sim_time_s", 0.0),
                    "steps": e.get("steps", 0),
                }
            )
        return out


# -- the websocket endpoint ----------------------------------------------------


class _Connection:
    """Per-connection reader state: at most one live session, one action task."""

    def __init__(self, service: PlayService, ws: WebSocket):
        self.service = service
        self.ws = ws
        self.session: SessionState | None = None
        self.task: asyncio.Task | None = None
        self._send_lock = asyncio.Lock()

    async def send(self, msg: dict) -> None:
        async with self._send_lock:
            await self.ws.send_text(encode_message(msg))

    async def drain(self) -> None:
        if self.task is not None:
            try:
                await self.task
            except asyncio.CancelledError:
                pass
            self.task = None

    async def handle(self, text: str) -> bool:
        """Process one client message; False means the connection should close."""
        try:
            msg = parse_message(text, "client")
        except ProtocolError as e:
            await self.send(error_message("malformed", str(e)))
            return True
        kind = msg["type"]
        if kind == "start":
            return await self._on_start(msg)
        if kind == "action":
            return await self._on_action(msg)
        if kind == "leaderboard":
            return await self._on_leaderboard(msg)
        return await self._on_quit()

    async def _on_start(self, msg: dict) -> bool:
        if self.session is not None and not self.session.done:
            await self.send(error_message("busy", "a session is already live"))
            return True
        try:
            self.session = self.service.create_session(msg.get("plan"), msg.get("target"))
        except Exception as e:  # bad plan/target names arrive over the wire
            await self.send(error_message("malformed", str(e)))
            return True
        ep = self.session.episode
        await self.send(frame_message(ep.last_ego, 0.0, ep.sim_time, ep.target))
        final = self.service.maybe_finalize(self.session)
        if final is not None:  # target visible from the start pose
            await self.send(result_message(final, self.session.elapsed_s()))
        return True

    async def _on_action(self, msg: dict) -> bool:
        if self.session is None or self.session.done:
            await self.send(error_message("unknown_session", "no live session"))
            return True
        if not self.session.begin_action():
            await self.send(error_message("busy", "previous action still in flight"))
            return True
        self.task = asyncio.create_task(self._apply(self.session, Action(msg["value"])))
        return True

    async def _apply(self, session: SessionState, action: Action) -> None:
        try:
            if self.service.config.actuation_delay_s > 0:
                await asyncio.sleep(self.service.config.actuation_delay_s)
            ego = self.service.step(session, action)
            await self.send(
                frame_message(ego, session.elapsed_s(), session.episode.sim_time, session.episode.target)
            )
            final = self.service.maybe_finalize(session)
            if final is not None:
                await self.send(result_message(final, session.elapsed_s()))
        finally:
            session.finish_action()

    async def _on_leaderboard(self, msg: dict) -> bool:
        plan = msg.get("plan")
        target = msg.get("target")
        if self.session is not None:
            plan = plan or self.session.episode.plan.name
            target = target or self.session.episode.target
        entries = self.service.leaderboard_entries(plan, target)
        await self.send({"type": "leaderboard", "entries": entries})
        return True

    async def _on_quit(self) -> bool:
        await self.drain()
        if self.session is not None and not self.session.done:
            self.service.finalize(self.session, "quit")
        if self.session is not None:
            await self.send(result_message(self.session.result, self.session.elapsed_s()))
        return False

    async def close(self) -> None:
        if self.task is not None:
            self.task.cancel()
            await self.drain()
        if self.session is not None and not self.session.done:
            self.service.finalize(self.session, "quit")


def create_app(config: ServiceConfig) -> FastAPI:
    app = FastAPI(title="geosemnav play service")
    app.state.service = PlayService(config)

    @app.websocket("/ws")
    async def session_socket(ws: WebSocket) -> None:
        await ws.accept()
        conn = _Connection(app.state.service, ws)
        try:
            while True:
                text = await ws.receive_text()
                if not await conn.handle(text):
                    break
        except WebSocketDisconnect:
            pass
        finally:
            await conn.close()

    return app
