/**
 * The only path from a console control to a wire frame. Every emission
 * goes through buildFrame, which stamps the control's bound channel and
 * applies the composer's parser gate, so the UI cannot produce a
 * (role, channel) pair the routing table forbids.
 */

import { compile, parse } from "./ccl.js";
import { Envelope, makeEnvelope } from "./protocol.js";
import type { SendControlSpec } from "./viewtree.js";

export interface SendAttempt {
  frame: Envelope | null;
  error: string | null;
}

export interface SendContext {
  session: string;
  role: "participant" | "dm" | "rn";
  /** true while a motion primitive is executing (disables the composer) */
  robotBusy: boolean;
}

export function buildFrame(
  ctx: SendContext,
  control: SendControlSpec,
  text: string,
): SendAttempt {
  if (control.id === "stop") {
    return {
      frame: makeEnvelope(ctx.session, ctx.role, control.channel, "motion", {
        primitive: "halt",
        magnitude: 0,
      }),
      error: null,
    };
  }
  if (control.id === "send-image") {
    return {
      frame: makeEnvelope(ctx.session, ctx.role, control.channel, "motion", {
        primitive: "capture",
        magnitude: 0,
      }),
      error: null,
    };
  }

  const trimmed = text.trim();
  if (control.gated === "ccl") {
    if (ctx.robotBusy) {
      return { frame: null, error: "a primitive is still executing" };
    }
    const result = parse(trimmed);
    if (!result.ok) {
      return { frame: null, error: `${result.code}: expected ${result.expected}` };
    }
    const motion = compile(result.command);
    return {
      frame: makeEnvelope(ctx.session, ctx.role, control.channel, "motion", {
        primitive: motion.primitive,
        magnitude: motion.magnitude,
      }),
      error: null,
    };
  }

  if (trimmed.length === 0) {
    return { frame: null, error: "nothing to send" };
  }

  if (control.kind === "auto") {
    // the DM's RN box: well-formed command text goes out as a command
    const kind = parse(trimmed).ok ? "command" : "chat";
    return {
      frame: makeEnvelope(ctx.session, ctx.role, control.channel, kind, { text: trimmed }),
      error: null,
    };
  }

  return {
    frame: makeEnvelope(ctx.session, ctx.role, control.channel, control.kind, {
      text: trimmed,
    }),
    error: null,
  };
}
