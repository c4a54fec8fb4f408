// Browser entry point: wires the websocket, keyboard, canvas, and overlays.
// Everything game-shaped lives in the other modules; this file only touches
// the DOM.

import { installInput } from "./input.js";
import { formatBoard, summarize } from "./leaderboard.js";
import { DEFAULT_VIEW, paint, renderFrame } from "./renderer.js";
import { ClientSession } from "./session.js";

const params = new URLSearchParams(location.search);
const serverUrl = params.get("server") ?? "ws://127.0.0.1:8000/ws";
const plan = params.get("plan") ?? undefined;
const target = params.get("target") ?? undefined;

const canvas = document.getElementById("view") as HTMLCanvasElement;
canvas.width = DEFAULT_VIEW.width;
canvas.height = DEFAULT_VIEW.height;
const ctx = canvas.getContext("2d")!;

const statusEl = document.getElementById("status")!;
const overlayEl = document.getElementById("overlay")!;
const boardEl = document.getElementById("board")!;

const ws = new WebSocket(serverUrl);
const session = new ClientSession((text) => ws.send(text));

// local ticking between server frames so the timer feels live
let elapsedBase = 0;
let baseAt = performance.now();

function redraw() {
  if (session.frame) paint(renderFrame(session.frame, DEFAULT_VIEW), ctx);
}

function showResult() {
  const r = session.result;
  if (!r) return;
  overlayEl.textContent = r.success
    ? `found the ${r.target} in ${r.elapsed_s.toFixed(1)}s (${r.steps} steps)`
    : `no ${r.target}: ${r.termination} after ${r.steps} steps`;
  overlayEl.classList.remove("hidden");
  session.requestLeaderboard();
}

ws.onopen = () => {
  statusEl.textContent = "connected";
  session.start(plan, target);
};
ws.onclose = () => {
  statusEl.textContent = "disconnected";
};
ws.onmessage = (ev) => {
  const msg = session.receive(String(ev.data));
  if (msg.type === "frame") {
    elapsedBase = msg.elapsed_s;
    baseAt = performance.now();
    redraw();
  } else if (msg.type === "result") {
    showResult();
  } else if (msg.type === "leaderboard") {
    boardEl.textContent = formatBoard(summarize(msg.entries)).join("\n");
  } else if (msg.code !== "busy") {
    statusEl.textContent = `error: ${msg.code}${msg.detail ? ` (${msg.detail})` : ""}`;
  }
};

installInput(window, session);

setInterval(() => {
  if (session.phase === "playing" && session.frame) {
    const live = elapsedBase + (performance.now() - baseAt) / 1000;
    statusEl.textContent = `playing  ${live.toFixed(1)}s  ${session.pending ? "moving..." : "ready"}`;
  }
}, 100);
