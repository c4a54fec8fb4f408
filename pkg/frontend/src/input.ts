import type { ActionName } from "./protocol.js";
import type { ClientSession } from "./session.js";

// physical key codes so WASD works on any layout
const KEY_ACTIONS: Record<string, ActionName> = {
  ArrowUp: "Forward",
  KeyW: "Forward",
  ArrowDown: "Backward",
  KeyS: "Backward",
  ArrowLeft: "RotateLeft",
  KeyA: "RotateLeft",
  ArrowRight: "RotateRight",
  KeyD: "RotateRight",
  Space: "Stop",
};

export function actionForCode(code: string): ActionName | "quit" | null {
  if (code === "Escape") return "quit";
  return KEY_ACTIONS[code] ?? null;
}

/** Route keydown events into the session; returns an uninstall function. */
export function installInput(target: EventTarget, session: ClientSession): () => void {
  const onKey = (ev: Event) => {
    const mapped = actionForCode((ev as KeyboardEvent).code);
    if (mapped === null) return;
    ev.preventDefault();
    if (mapped === "quit") session.quit();
    else session.pressAction(mapped);
  };
  target.addEventListener("keydown", onKey);
  return () => target.removeEventListener("keydown", onKey);
}
