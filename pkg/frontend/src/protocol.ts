// Wire types for the play service session protocol, one JSON object per
// websocket text message. The TypeScript side mirrors the server's schema
// tables: we validate everything we receive and encode compactly (the server
// does the same in the other direction).

export type ActionName = "Forward" | "Backward" | "RotateLeft" | "RotateRight" | "Stop";

export const ACTION_NAMES: readonly ActionName[] = [
  "Forward",
  "Backward",
  "RotateLeft",
  "RotateRight",
  "Stop",
];

export const ERROR_CODES = ["busy", "malformed", "unknown_session"] as const;
export type ErrorCode = (typeof ERROR_CODES)[number];

// client -> server

export interface StartMsg {
  type: "start";
  plan?: string;
  target?: string;
}

export interface ActionMsg {
  type: "action";
  value: ActionName;
}

export interface QuitMsg {
  type: "quit";
}

export interface LeaderboardReqMsg {
  type: "leaderboard";
  plan?: string;
  target?: string;
}

export type ClientMessage = StartMsg | ActionMsg | QuitMsg | LeaderboardReqMsg;

// server -> client

export interface WireDetection {
  class: string;
  confidence: number;
  box: [number, number, number, number]; // x0,y0,x1,y1 normalized, y down
  distance: number;
  restricted: boolean;
  extension: boolean;
}

export interface WireArea {
  index: number;
  label: string;
  free_space: boolean;
  obstacle: boolean;
  opening: boolean;
  restricted: boolean;
  passage: boolean;
  detections: number[]; // indices into FrameMsg.detections
}

export interface FrameMsg {
  type: "frame";
  areas: WireArea[];
  detections: WireDetection[];
  pose_hidden: boolean;
  elapsed_s: number;
  sim_time_s: number;
  target: string;
  produced_by: string;
}

export interface ResultMsg {
  type: "result";
  success: boolean;
  elapsed_s: number;
  steps: number;
  termination: string;
  target: string;
}

export interface ErrorMsg {
  type: "error";
  code: ErrorCode;
  detail?: string;
}

export interface LeaderboardEntry {
  player: string;
  success: boolean;
  elapsed_s: number;
  sim_time_s: number;
  steps: number;
}

export interface LeaderboardMsg {
  type: "leaderboard";
  entries: LeaderboardEntry[];
}

export type ServerMessage = FrameMsg | ResultMsg | ErrorMsg | LeaderboardMsg;

export class ProtocolError extends Error {}

// required fields (name -> runtime check) per server message type
const SERVER_REQUIRED: Record<string, Record<string, (v: unknown) => boolean>> = {
  frame: {
    areas: Array.isArray,
    detections: Array.isArray,
    pose_hidden: (v) => typeof v === "boolean",
    elapsed_s: (v) => typeof v === "number",
  },
  result: {
    success: (v) => typeof v === "boolean",
    elapsed_s: (v) => typeof v === "number",
    steps: (v) => typeof v === "number",
  },
  error: {
    code: (v) => typeof v === "string",
  },
  leaderboard: {
    entries: Array.isArray,
  },
};

export function encodeClient(msg: ClientMessage): string {
  return JSON.stringify(msg);
}

export function parseServer(text: string): ServerMessage {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (e) {
    throw new ProtocolError(`not valid JSON: ${e}`);
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new ProtocolError("message must be a JSON object");
  }
  const msg = raw as Record<string, unknown>;
  const kind = msg["type"];
  if (typeof kind !== "string" || !(kind in SERVER_REQUIRED)) {
    throw new ProtocolError(`unknown message type ${JSON.stringify(kind)}`);
  }
  for (const [name, ok] of Object.entries(SERVER_REQUIRED[kind])) {
    if (!(name in msg)) {
      throw new ProtocolError(`${kind} message is missing '${name}'`);
    }
    if (!ok(msg[name])) {
      throw new ProtocolError(`${kind}.${name} has the wrong type`);
    }
  }
  if (kind === "error" && !ERROR_CODES.includes(msg["code"] as ErrorCode)) {
    throw new ProtocolError(`unknown error code ${JSON.stringify(msg["code"])}`);
  }
  return msg as unknown as ServerMessage;
}
