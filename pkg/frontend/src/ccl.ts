/**
 * Client-side gate for the constrained command language.
 *
 * The RN composer refuses to transmit anything that does not parse, and
 * the DM's RN box uses the same check to tag well-formed text as a
 * command. This mirrors the server-side grammar; the server still has
 * the final word.
 */

export type Command =
  | { type: "move"; direction: "forward" | "back"; meters: number }
  | { type: "turn"; direction: "left" | "right"; degrees: number }
  | { type: "stop" }
  | { type: "send_image" };

export interface Motion {
  primitive: "translate" | "rotate" | "halt" | "capture";
  magnitude: number;
}

export type ParseResult =
  | { ok: true; command: Command }
  | { ok: false; code: string; expected: string };

const MOVE_VERBS = new Set(["move", "go", "drive"]);
const TURN_VERBS = new Set(["turn", "rotate"]);
const STOP_WORDS = new Set(["stop", "halt"]);
const IMAGE_WORDS = new Set(["image", "picture", "photo"]);
const LIN_DIRS: Record<string, "forward" | "back"> = {
  forward: "forward",
  ahead: "forward",
  back: "back",
  backward: "back",
  backwards: "back",
};
const LIN_UNITS: Record<string, number> = {
  feet: 0.3048,
  foot: 0.3048,
  ft: 0.3048,
  meters: 1,
  meter: 1,
  m: 1,
};
const DEG_UNITS = new Set(["degrees", "deg"]);

const NUMBER_WORDS: Record<string, number> = {
  one: 1, two: 2, three: 3, four: 4, five: 5, six: 6, seven: 7,
  eight: 8, nine: 9, ten: 10, eleven: 11, twelve: 12, thirteen: 13,
  fourteen: 14, fifteen: 15, sixteen: 16, seventeen: 17, eighteen: 18,
  nineteen: 19, twenty: 20,
};

function parseNumber(token: string): number | null {
  if (token in NUMBER_WORDS) return NUMBER_WORDS[token];
  if (/^\d+(\.\d+)?$/.test(token)) return parseFloat(token);
  return null;
}

function fail(code: string, expected: string): ParseResult {
  return { ok: false, code, expected };
}

export function parse(text: string): ParseResult {
  const tokens = text.toLowerCase().split(/\s+/).filter((t) => t.length > 0);
  if (tokens.length === 0) return fail("unknown_verb", "move | turn | stop | send image");
  const [verb] = tokens;

  if (STOP_WORDS.has(verb)) {
    if (tokens.length > 1) return fail("trailing_input", "end of command");
    return { ok: true, command: { type: "stop" } };
  }

  if (verb === "send") {
    if (tokens.length < 2 || !IMAGE_WORDS.has(tokens[1])) {
      return fail("unknown_verb", "send image | send picture | send photo");
    }
    if (tokens.length > 2) return fail("trailing_input", "end of command");
    return { ok: true, command: { type: "send_image" } };
  }

  if (MOVE_VERBS.has(verb)) {
    if (tokens.length < 2 || !(tokens[1] in LIN_DIRS)) {
      return fail("unknown_verb", "forward | ahead | back | backward | backwards");
    }
    if (tokens.length < 3) return fail("missing_magnitude", "<number> <unit>");
    const value = parseNumber(tokens[2]);
    if (value === null || value <= 0) return fail("bad_number", "a positive number");
    if (tokens.length < 4 || !(tokens[3] in LIN_UNITS)) {
      return fail("missing_unit", "feet | ft | meters | m");
    }
    if (tokens.length > 4) return fail("trailing_input", "end of command");
    const factor = LIN_UNITS[tokens[3]];
    const meters = factor === 1 ? value : (value * 3048.0) / 10000.0;
    return { ok: true, command: { type: "move", direction: LIN_DIRS[tokens[1]], meters } };
  }

  if (TURN_VERBS.has(verb)) {
    if (tokens.length < 2 || (tokens[1] !== "left" && tokens[1] !== "right")) {
      return fail("unknown_verb", "left | right");
    }
    if (tokens.length < 3) return fail("missing_magnitude", "<number> degrees");
    const value = parseNumber(tokens[2]);
    if (value === null || value <= 0 || value > 360) {
      return fail("bad_number", "an angle in (0, 360]");
    }
    if (tokens.length < 4 || !DEG_UNITS.has(tokens[3])) {
      return fail("missing_unit", "degrees | deg");
    }
    if (tokens.length > 4) return fail("trailing_input", "end of command");
    return {
      ok: true,
      command: { type: "turn", direction: tokens[1] as "left" | "right", degrees: value },
    };
  }

  return fail("unknown_verb", "move | turn | stop | send image");
}

/** Lower a parsed command to the sim's motion vocabulary. */
export function compile(command: Command): Motion {
  switch (command.type) {
    case "move":
      return {
        primitive: "translate",
        magnitude: command.direction === "forward" ? command.meters : -command.meters,
      };
    case "turn":
      return {
        primitive: "rotate",
        magnitude: command.direction === "left" ? command.degrees : -command.degrees,
      };
    case "stop":
      return { primitive: "halt", magnitude: 0 };
    case "send_image":
      return { primitive: "capture", magnitude: 0 };
  }
}
