import {
  ActionName,
  ErrorMsg,
  FrameMsg,
  LeaderboardEntry,
  ResultMsg,
  ServerMessage,
  encodeClient,
  parseServer,
} from "./protocol.js";

export type Phase = "idle" | "playing" | "done";

/**
 * Client-side session state machine.
 *
 * Owns the single-in-flight-action rule: while `pending` is set, key presses
 * are dropped instead of queued, so the server should never answer us with
 * `busy`. The session only ever sees what came over the wire; there is no
 * pose or map state to leak into the UI.
 */
export class ClientSession {
  phase: Phase = "idle";
  pending: ActionName | null = null;
  frame: FrameMsg | null = null;
  result: ResultMsg | null = null;
  lastError: ErrorMsg | null = null;
  board: LeaderboardEntry[] | null = null;

  constructor(private send: (text: string) => void) {}

  start(plan?: string, target?: string): boolean {
    if (this.phase !== "idle") return false;
    const msg: { type: "start"; plan?: string; target?: string } = { type: "start" };
    if (plan) msg.plan = plan;
    if (target) msg.target = target;
    this.send(encodeClient(msg));
    this.phase = "playing";
    return true;
  }

  /** Send one action if the session is live and nothing is in flight. */
  pressAction(action: ActionName): boolean {
    if (this.phase !== "playing" || this.pending !== null) return false;
    this.pending = action;
    this.send(encodeClient({ type: "action", value: action }));
    return true;
  }

  quit(): boolean {
    if (this.phase !== "playing") return false;
    this.send(encodeClient({ type: "quit" }));
    return true;
  }

  requestLeaderboard(plan?: string, target?: string): void {
    const msg: { type: "leaderboard"; plan?: string; target?: string } = { type: "leaderboard" };
    if (plan) msg.plan = plan;
    if (target) msg.target = target;
    this.send(encodeClient(msg));
  }

  /** Parse one incoming message and fold it into the session state. */
  receive(text: string): ServerMessage {
    const msg = parseServer(text);
    switch (msg.type) {
      case "frame":
        this.frame = msg;
        this.pending = null;
        break;
      case "result":
        this.result = msg;
        this.phase = "done";
        this.pending = null;
        break;
      case "error":
        this.lastError = msg;
        // busy means an earlier action is still in flight and will still
        // produce its frame; anything else orphans the pending action
        if (msg.code !== "busy") this.pending = null;
        if (msg.code === "unknown_session") this.phase = "done";
        break;
      case "leaderboard":
        this.board = msg.entries;
        break;
    }
    return msg;
  }

  /** Server-reported wall seconds, favoring the final result. */
  elapsedS(): number {
    if (this.result) return this.result.elapsed_s;
    if (this.frame) return this.frame.elapsed_s;
    return 0;
  }
}
