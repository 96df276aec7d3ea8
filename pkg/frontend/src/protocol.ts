/**
 * Wire protocol: envelope frames, channels, kinds, and the send bindings
 * each console is allowed to use. Mirrors the server's contract; the
 * server remains the enforcement point.
 */

export type Role = "participant" | "dm" | "rn" | "sim" | "server";

export type Channel =
  | "p_dm_speech"
  | "dm_p_chat"
  | "dm_rn_chat"
  | "rn_dm_speech"
  | "rn_sim_cmd"
  | "sim_sensor"
  | "server_ctrl";

export type MessageKind =
  | "chat"
  | "command"
  | "motion"
  | "map_delta"
  | "pose"
  | "image"
  | "live_view"
  | "scan"
  | "status"
  | "error"
  | "join"
  | "ack";

export interface Envelope {
  v: number;
  id: string;
  session: string;
  seq: number;
  ts: string;
  from: Role;
  channel: Channel;
  kind: MessageKind;
  payload: Record<string, unknown>;
}

export interface Pose {
  x: number;
  y: number;
  theta: number;
}

export interface MapCell {
  cx: number;
  cy: number;
  state: "free" | "occupied";
}

/** The only channels each human role may ever emit on. */
export const SEND_CHANNELS: Record<"participant" | "dm" | "rn", Channel[]> = {
  participant: ["p_dm_speech"],
  dm: ["dm_p_chat", "dm_rn_chat"],
  rn: ["rn_sim_cmd", "rn_dm_speech"],
};

export function newId(): string {
  const hex = "0123456789abcdef";
  let out = "";
  for (let i = 0; i < 32; i++) {
    out += hex[Math.floor(Math.random() * 16)];
  }
  return out;
}

export function nowTs(): string {
  const iso = new Date().toISOString(); // already millisecond precision + Z
  return iso;
}

export function makeEnvelope(
  session: string,
  from: Role,
  channel: Channel,
  kind: MessageKind,
  payload: Record<string, unknown>,
): Envelope {
  return { v: 1, id: newId(), session, seq: 0, ts: nowTs(), from, channel, kind, payload };
}

export function encode(envelope: Envelope): string {
  return JSON.stringify(envelope);
}

export function decode(text: string): Envelope | null {
  let obj: unknown;
  try {
    obj = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof obj !== "object" || obj === null) return null;
  const frame = obj as Record<string, unknown>;
  if (frame.v !== 1) return null;
  for (const key of ["id", "session", "ts", "from", "channel", "kind"]) {
    if (typeof frame[key] !== "string") return null;
  }
  if (typeof frame.seq !== "number") return null;
  if (typeof frame.payload !== "object" || frame.payload === null) return null;
  return frame as unknown as Envelope;
}

/** Transport-level session close directive (not an envelope). */
export function closeDirective(): string {
  return JSON.stringify({ ctrl: "close" });
}

export function attachUrl(base: string, session: string, role: Role): string {
  return `${base}/session/${encodeURIComponent(session)}/attach?role=${role}`;
}
