import { describe, expect, it } from "vitest";

import { actionForCode, installInput } from "../src/input.js";
import { ClientSession } from "../src/session.js";
import { corridorFrame } from "./helpers.js";

describe("actionForCode", () => {
  it.each([
    ["ArrowUp", "Forward"],
    ["KeyW", "Forward"],
    ["ArrowDown", "Backward"],
    ["KeyS", "Backward"],
    ["ArrowLeft", "RotateLeft"],
    ["KeyA", "RotateLeft"],
    ["ArrowRight", "RotateRight"],
    ["KeyD", "RotateRight"],
    ["Space", "Stop"],
    ["Escape", "quit"],
  ] as const)("%s -> %s", (code, expected) => {
    expect(actionForCode(code)).toBe(expected);
  });

  it("ignores unbound keys", () => {
    expect(actionForCode("KeyQ")).toBeNull();
    expect(actionForCode("Enter")).toBeNull();
    expect(actionForCode("")).toBeNull();
  });
});

function keydown(target: EventTarget, code: string) {
  // node has EventTarget but not KeyboardEvent; a coded Event is close enough
  const ev = new Event("keydown", { cancelable: true });
  (ev as Event & { code: string }).code = code;
  target.dispatchEvent(ev);
  return ev;
}

describe("installInput", () => {
  it("sends the mapped action for an idle session", () => {
    const sent: string[] = [];
    const session = new ClientSession((t) => sent.push(t));
    session.start();
    session.receive(JSON.stringify(corridorFrame()));
    const target = new EventTarget();
    installInput(target, session);

    const ev = keydown(target, "ArrowUp");
    expect(sent.at(-1)).toBe('{"type":"action","value":"Forward"}');
    expect(ev.defaultPrevented).toBe(true);
  });

  it("swallows keys while an action is pending", () => {
    const sent: string[] = [];
    const session = new ClientSession((t) => sent.push(t));
    session.start();
    session.receive(JSON.stringify(corridorFrame()));
    const target = new EventTarget();
    installInput(target, session);

    keydown(target, "KeyW");
    keydown(target, "KeyA");
    keydown(target, "ArrowUp");
    expect(sent.filter((t) => t.includes('"action"'))).toEqual([
      '{"type":"action","value":"Forward"}',
    ]);
  });

  it("leaves unbound keys alone", () => {
    const sent: string[] = [];
    const session = new ClientSession((t) => sent.push(t));
    session.start();
    const target = new EventTarget();
    installInput(target, session);

    const ev = keydown(target, "KeyZ");
    expect(ev.defaultPrevented).toBe(false);
    expect(sent).toHaveLength(1); // just the start message
  });

  it("maps Escape to quit and the result closes the game", () => {
    const sent: string[] = [];
    const session = new ClientSession((t) => sent.push(t));
    session.start();
    session.receive(JSON.stringify(corridorFrame()));
    const target = new EventTarget();
    installInput(target, session);

    keydown(target, "Escape");
    expect(sent.at(-1)).toBe('{"type":"quit"}');
    session.receive(
      '{"type":"result","success":false,"elapsed_s":3.1,"steps":2,"termination":"quit","target":"cup"}',
    );
    expect(session.phase).toBe("done");
    expect(session.result?.termination).toBe("quit");
  });

  it("uninstalls cleanly", () => {
    const sent: string[] = [];
    const session = new ClientSession((t) => sent.push(t));
    session.start();
    session.receive(JSON.stringify(corridorFrame()));
    const target = new EventTarget();
    const uninstall = installInput(target, session);
    uninstall();

    keydown(target, "ArrowUp");
    expect(sent.filter((t) => t.includes('"action"'))).toEqual([]);
  });
});
