// Scripted interactions over the send path: frames only ever leave on the
// control's bound channel, and the composer refuses unparsable commands.

import { describe, expect, it } from "vitest";

import { buildFrame, SendContext } from "../src/outbox.js";
import { Envelope, SEND_CHANNELS } from "../src/protocol.js";
import { consoleFor, dmView, rnView } from "../src/viewtree.js";

function ctx(role: "participant" | "dm" | "rn", busy = false): SendContext {
  return { session: "t", role, robotBusy: busy };
}

const SCRIPT_TEXTS = [
  "hello there",
  "move forward five feet",
  "move forward 1.524 m",
  "turn left",
  "turn right 90 deg",
  "stop",
  "send image",
  "pick up the box",
  "",
  "   ",
];

describe("channel bindings over a scripted interaction", () => {
  it("emits only (role, bound channel) pairs from the allow-table", () => {
    for (const role of ["participant", "dm", "rn"] as const) {
      const spec = consoleFor(role);
      const emitted: Envelope[] = [];
      for (const control of spec.controls) {
        for (const text of SCRIPT_TEXTS) {
          const attempt = buildFrame(ctx(role), control, text);
          if (attempt.frame !== null) {
            emitted.push(attempt.frame);
            expect(attempt.frame.channel).toBe(control.channel);
          }
        }
      }
      for (const frame of emitted) {
        expect(SEND_CHANNELS[role]).toContain(frame.channel);
        expect(frame.from).toBe(role);
      }
      expect(emitted.length).toBeGreaterThan(0);
    }
  });
});

describe("rn composer parser gate", () => {
  const composer = rnView().controls.find((c) => c.id === "composer")!;

  it("blocks unparsable commands client-side with the parse error", () => {
    const attempt = buildFrame(ctx("rn"), composer, "turn left");
    expect(attempt.frame).toBeNull();
    expect(attempt.error).toContain("missing_magnitude");
  });

  it("blocks arbitrary chat text", () => {
    const attempt = buildFrame(ctx("rn"), composer, "sure, on my way");
    expect(attempt.frame).toBeNull();
  });

  it("compiles well-formed commands to motion frames", () => {
    const attempt = buildFrame(ctx("rn"), composer, "move forward five feet");
    expect(attempt.error).toBeNull();
    expect(attempt.frame!.kind).toBe("motion");
    expect(attempt.frame!.payload).toEqual({ primitive: "translate", magnitude: 1.524 });
  });

  it("applies the sign convention: right turns rotate negative", () => {
    const attempt = buildFrame(ctx("rn"), composer, "turn right 45 deg");
    expect(attempt.frame!.payload).toEqual({ primitive: "rotate", magnitude: -45 });
  });

  it("is disabled while a primitive executes", () => {
    const attempt = buildFrame(ctx("rn", true), composer, "move forward 1 m");
    expect(attempt.frame).toBeNull();
    expect(attempt.error).toContain("executing");
  });

  it("stop and send-image buttons emit fixed motions", () => {
    const stop = rnView().controls.find((c) => c.id === "stop")!;
    const sendImage = rnView().controls.find((c) => c.id === "send-image")!;
    expect(buildFrame(ctx("rn"), stop, "").frame!.payload).toEqual({
      primitive: "halt",
      magnitude: 0,
    });
    expect(buildFrame(ctx("rn"), sendImage, "").frame!.payload).toEqual({
      primitive: "capture",
      magnitude: 0,
    });
  });
});

describe("dm rn-box kind selection", () => {
  const toRn = dmView().controls.find((c) => c.id === "to-rn")!;

  it("sends parsable text as a command", () => {
    const attempt = buildFrame(ctx("dm"), toRn, "move forward 1.524 m");
    expect(attempt.frame!.kind).toBe("command");
    expect(attempt.frame!.channel).toBe("dm_rn_chat");
  });

  it("sends coordination text as chat on the same bound channel", () => {
    const attempt = buildFrame(ctx("dm"), toRn, "hold position, participant is thinking");
    expect(attempt.frame!.kind).toBe("chat");
    expect(attempt.frame!.channel).toBe("dm_rn_chat");
  });

  it("refuses empty input", () => {
    expect(buildFrame(ctx("dm"), toRn, "  ").frame).toBeNull();
  });
});
