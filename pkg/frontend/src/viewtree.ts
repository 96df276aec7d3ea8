/**
 * Console structure as data: which panes exist, which message kinds each
 * console consumes, and which send controls it exposes with their fixed
 * channel bindings. The DOM layer renders these specs verbatim, so the
 * structural guarantees (the participant has no live-video element, a
 * console can only ever emit on its bound channels) hold by construction
 * and are asserted by tests against this module.
 */

import type { Channel, MessageKind } from "./protocol.js";

export interface PaneSpec {
  id: string;
  title: string;
  /** Message kinds this pane consumes, possibly narrowed to one channel. */
  subscribes: { kind: MessageKind; channel?: Channel }[];
}

export interface SendControlSpec {
  id: string;
  label: string;
  channel: Channel; // hard binding: the only channel this control emits on
  kind: MessageKind | "auto"; // "auto": command when CCL-parsable, else chat
  gated?: "ccl"; // refuses to emit unless the text parses
}

export interface ConsoleSpec {
  role: "participant" | "dm" | "rn";
  panes: PaneSpec[];
  controls: SendControlSpec[];
}

export function participantView(): ConsoleSpec {
  return {
    role: "participant",
    panes: [
      {
        id: "map",
        title: "Map",
        subscribes: [{ kind: "map_delta" }, { kind: "pose" }],
      },
      {
        id: "chat",
        title: "Robot chat",
        subscribes: [{ kind: "chat", channel: "dm_p_chat" }],
      },
      {
        id: "chat-input",
        title: "Say something",
        subscribes: [],
      },
      {
        id: "last-image",
        title: "Last image from the robot",
        subscribes: [{ kind: "image" }],
      },
    ],
    controls: [
      { id: "speak", label: "Send", channel: "p_dm_speech", kind: "chat" },
    ],
  };
}

export function dmView(): ConsoleSpec {
  return {
    role: "dm",
    panes: [
      {
        id: "participant-stream",
        title: "From participant",
        subscribes: [{ kind: "chat", channel: "p_dm_speech" }],
      },
      {
        id: "rn-stream",
        title: "From RN",
        subscribes: [{ kind: "chat", channel: "rn_dm_speech" }],
      },
      {
        id: "suggestions",
        title: "Guideline suggestions",
        subscribes: [{ kind: "status", channel: "server_ctrl" }],
      },
      {
        id: "map",
        title: "Map (same as participant)",
        subscribes: [{ kind: "map_delta" }, { kind: "pose" }],
      },
      {
        id: "last-image",
        title: "Last image sent",
        subscribes: [{ kind: "image" }],
      },
      {
        id: "live-view",
        title: "Robot camera (live)",
        subscribes: [{ kind: "live_view" }],
      },
    ],
    controls: [
      { id: "to-participant", label: "Send to participant", channel: "dm_p_chat", kind: "chat" },
      { id: "to-rn", label: "Send to RN", channel: "dm_rn_chat", kind: "auto" },
    ],
  };
}

export function rnView(): ConsoleSpec {
  return {
    role: "rn",
    panes: [
      {
        id: "command-inbox",
        title: "Orders from DM",
        subscribes: [
          { kind: "command", channel: "dm_rn_chat" },
          { kind: "chat", channel: "dm_rn_chat" },
        ],
      },
      {
        id: "live-view",
        title: "Robot camera (live)",
        subscribes: [{ kind: "live_view" }],
      },
      {
        id: "pose",
        title: "Ground-truth pose",
        subscribes: [{ kind: "pose" }],
      },
      {
        id: "map",
        title: "Map with scan overlay",
        subscribes: [{ kind: "map_delta" }, { kind: "pose" }, { kind: "scan" }],
      },
      {
        id: "outcome",
        title: "Execution state",
        subscribes: [{ kind: "status", channel: "server_ctrl" }],
      },
    ],
    controls: [
      { id: "composer", label: "Execute", channel: "rn_sim_cmd", kind: "motion", gated: "ccl" },
      { id: "stop", label: "Stop", channel: "rn_sim_cmd", kind: "motion" },
      { id: "send-image", label: "Send image", channel: "rn_sim_cmd", kind: "motion" },
      { id: "speech", label: "Tell DM", channel: "rn_dm_speech", kind: "chat" },
    ],
  };
}

export function consoleFor(role: "participant" | "dm" | "rn"): ConsoleSpec {
  switch (role) {
    case "participant":
      return participantView();
    case "dm":
      return dmView();
    case "rn":
      return rnView();
  }
}

export function subscribedKinds(spec: ConsoleSpec): Set<MessageKind> {
  const kinds = new Set<MessageKind>();
  for (const pane of spec.panes) {
    for (const sub of pane.subscribes) {
      kinds.add(sub.kind);
    }
  }
  return kinds;
}
