/**
 * DOM wiring for the three consoles. The page is served at /ui/<role>
 * and renders the pane structure declared in viewtree.ts; every outbound
 * frame is built by outbox.buildFrame, so channel bindings are fixed.
 */

import { applyCells, emptyMap, MapState, rasterize } from "./mapview.js";
import { buildFrame, SendContext } from "./outbox.js";
import {
  attachUrl,
  closeDirective,
  decode,
  encode,
  Envelope,
  MapCell,
  Pose,
} from "./protocol.js";
import { decodePgm, toRgba } from "./pgm.js";
import { consoleFor, PaneSpec, SendControlSpec } from "./viewtree.js";

type HumanRole = "participant" | "dm" | "rn";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  cls?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

function roleFromPath(): HumanRole {
  const part = location.pathname.split("/").filter((p) => p.length > 0).pop() ?? "";
  if (part === "participant" || part === "dm" || part === "rn") return part;
  return "participant";
}

interface AppState {
  map: MapState | null;
  pose: Pose | null;
  robotBusy: boolean;
  sessionState: string;
}

function main(): void {
  const role = roleFromPath();
  const session = new URLSearchParams(location.search).get("session") ?? "main";
  const spec = consoleFor(role);
  const state: AppState = { map: null, pose: null, robotBusy: false, sessionState: "connecting" };

  document.title = `ozbench: ${role}`;
  const root = document.getElementById("root")!;
  root.innerHTML = "";
  const banner = el("div", "banner", `connecting as ${role}...`);
  root.appendChild(banner);
  const grid = el("div", `console console-${role}`);
  root.appendChild(grid);

  const paneBodies = new Map<string, HTMLDivElement>();
  const chatLogs = new Map<string, HTMLDivElement>();
  const canvases = new Map<string, HTMLCanvasElement>();

  for (const pane of spec.panes) {
    const box = el("div", `pane pane-${pane.id}`);
    box.appendChild(el("h2", "pane-title", pane.title));
    const body = el("div", "pane-body");
    box.appendChild(body);
    paneBodies.set(pane.id, body);
    if (pane.id === "map" || pane.id === "last-image" || pane.id === "live-view") {
      const canvas = el("canvas", "pane-canvas");
      body.appendChild(canvas);
      canvases.set(pane.id, canvas);
    } else if (pane.id !== "chat-input") {
      const log = el("div", "chat-log");
      body.appendChild(log);
      chatLogs.set(pane.id, log);
    }
    grid.appendChild(box);
  }

  const sendQueue: string[] = [];
  let socket: WebSocket | null = null;

  function transmit(text: string): void {
    if (socket !== null && socket.readyState === WebSocket.OPEN) {
      socket.send(text);
    } else {
      sendQueue.push(text);
    }
  }

  function appendLine(paneId: string, speaker: string, text: string, cls = ""): void {
    const log = chatLogs.get(paneId);
    if (!log) return;
    const line = el("div", `chat-line ${cls}`);
    line.appendChild(el("span", "chat-speaker", speaker));
    line.appendChild(el("span", "chat-text", text));
    log.appendChild(line);
    log.scrollTop = log.scrollHeight;
  }

  // --- controls -------------------------------------------------------------

  const controlInputs = new Map<string, HTMLInputElement>();
  const controlErrors = new Map<string, HTMLDivElement>();
  const controlButtons = new Map<string, HTMLButtonElement>();

  function activateControl(control: SendControlSpec): void {
    const input = controlInputs.get(control.id);
    const text = input ? input.value : "";
    const ctx: SendContext = { session, role, robotBusy: state.robotBusy };
    const attempt = buildFrame(ctx, control, text);
    const errorBox = controlErrors.get(control.id);
    if (attempt.frame === null) {
      if (errorBox) errorBox.textContent = attempt.error;
      return;
    }
    if (errorBox) errorBox.textContent = "";
    transmit(encode(attempt.frame));
    if (control.id === "composer") {
      const payload = attempt.frame.payload as { primitive?: string };
      if (payload.primitive === "translate" || payload.primitive === "rotate") {
        setBusy(true);
      }
    }
    if (input) input.value = "";
    if (control.channel === "p_dm_speech") {
      appendLine("chat", "you", (attempt.frame.payload as { text: string }).text, "mine");
    }
  }

  function setBusy(busy: boolean): void {
    state.robotBusy = busy;
    const execute = controlButtons.get("composer");
    if (execute) execute.disabled = busy;
  }

  const controlsBox = el("div", "controls");
  for (const control of spec.controls) {
    const row = el("div", `control control-${control.id}`);
    const needsText = control.id !== "stop" && control.id !== "send-image";
    if (needsText) {
      const input = el("input");
      input.placeholder = control.label;
      controlInputs.set(control.id, input);
      input.addEventListener("keydown", (event) => {
        if (event.key === "Enter") activateControl(control);
      });
      row.appendChild(input);
    }
    const button = el("button", "", control.label);
    button.addEventListener("click", () => activateControl(control));
    controlButtons.set(control.id, button);
    row.appendChild(button);
    const errorBox = el("div", "control-error");
    controlErrors.set(control.id, errorBox);
    row.appendChild(errorBox);
    controlsBox.appendChild(row);
  }
  const closeButton = el("button", "close-session", "End session");
  closeButton.addEventListener("click", () => transmit(closeDirective()));
  if (role !== "participant") controlsBox.appendChild(closeButton);
  const inputPane = paneBodies.get("chat-input");
  (inputPane ?? grid).appendChild(controlsBox);

  // --- rendering --------------------------------------------------------------

  function putPixels(
    canvas: HTMLCanvasElement, width: number, height: number, pixels: Uint8ClampedArray,
  ): void {
    canvas.width = width;
    canvas.height = height;
    const ctx2d = canvas.getContext("2d")!;
    const image = ctx2d.createImageData(width, height);
    image.data.set(pixels);
    ctx2d.putImageData(image, 0, 0);
  }

  function redrawMap(): void {
    const canvas = canvases.get("map");
    if (!canvas || state.map === null) return;
    const raster = rasterize(state.map, state.pose);
    putPixels(canvas, raster.width, raster.height, raster.pixels);
  }

  function drawImage(paneId: string, base64Data: string): void {
    const canvas = canvases.get(paneId);
    if (!canvas) return;
    const image = decodePgm(base64Data);
    if (!image) return;
    putPixels(canvas, image.width, image.height, toRgba(image));
  }

  function showSuggestion(payload: Record<string, unknown>): void {
    const log = chatLogs.get("suggestions");
    if (!log) return;
    const box = el("div", "suggestion");
    box.appendChild(
      el("div", "suggestion-head",
         `rule ${payload.rule} -> ${payload.disposition}`),
    );
    const drafts = (payload.drafts ?? []) as { channel: string; text: string }[];
    for (const draft of drafts) {
      const row = el("div", "suggestion-draft");
      row.appendChild(el("span", "", `${draft.channel}: ${draft.text}`));
      const accept = el("button", "", "accept");
      accept.addEventListener("click", () => {
        // accept-to-fill only; transmission stays a human act
        const target = draft.channel === "dm_rn_chat" ? "to-rn" : "to-participant";
        const input = controlInputs.get(target);
        if (input) input.value = draft.text;
      });
      row.appendChild(accept);
      box.appendChild(row);
    }
    log.appendChild(box);
    log.scrollTop = log.scrollHeight;
  }

  // --- inbound dispatch ------------------------------------------------------------

  const paneIndex: { pane: PaneSpec; kinds: Map<string, string | undefined> }[] =
    spec.panes.map((pane) => ({
      pane,
      kinds: new Map(pane.subscribes.map((s) => [s.kind, s.channel])),
    }));

  function wantedBy(envelope: Envelope): PaneSpec[] {
    const out: PaneSpec[] = [];
    for (const entry of paneIndex) {
      if (!entry.kinds.has(envelope.kind)) continue;
      const channel = entry.kinds.get(envelope.kind);
      if (channel !== undefined && channel !== envelope.channel) continue;
      out.push(entry.pane);
    }
    return out;
  }

  function handleEnvelope(envelope: Envelope): void {
    if (envelope.kind === "status" && envelope.channel === "server_ctrl") {
      const code = envelope.payload.code as string;
      if (code === "snapshot") {
        const map = envelope.payload.map as { width: number; height: number; resolution: number };
        state.map = emptyMap(map.width, map.height, map.resolution);
        applyCells(state.map, (envelope.payload.cells ?? []) as MapCell[]);
        state.pose = envelope.payload.pose as Pose;
        state.sessionState = envelope.payload.state as string;
        banner.textContent = `session ${session}: ${state.sessionState}`;
        redrawMap();
        return;
      }
      if (code === "running" || code === "paused" || code === "closed" || code === "lobby") {
        state.sessionState = code;
        banner.textContent = `session ${session}: ${code}`;
        return;
      }
      if (code === "completed" || code === "blocked" || code === "halted") {
        setBusy(false);
        appendLine("outcome", "robot", `${code} (${envelope.payload.detail ?? ""})`);
        return;
      }
      if (code === "suggestion") {
        showSuggestion(envelope.payload);
        return;
      }
      return;
    }
    if (envelope.kind === "error") {
      banner.textContent = `error: ${envelope.payload.code ?? "unknown"}`;
      if (envelope.payload.code === "role_taken") {
        banner.className = "banner banner-fatal";
        grid.classList.add("disabled");
      }
      return;
    }
    if (envelope.kind === "join" && envelope.channel === "server_ctrl") {
      banner.textContent = `session ${session}: ${state.sessionState} (${envelope.payload.role} joined)`;
      return;
    }
    if (envelope.kind === "ack") return;

    const panes = wantedBy(envelope);
    if (panes.length === 0) return;
    for (const pane of panes) {
      switch (envelope.kind) {
        case "chat":
        case "command":
          appendLine(pane.id, envelope.from, String(envelope.payload.text ?? ""));
          break;
        case "map_delta":
          if (state.map !== null) {
            const result = applyCells(state.map, (envelope.payload.cells ?? []) as MapCell[]);
            for (const bad of result.ignored) {
              console.warn("map delta outside the grid ignored", bad);
            }
            redrawMap();
          }
          break;
        case "pose":
          state.pose = envelope.payload as unknown as Pose;
          if (pane.id === "pose") {
            const body = paneBodies.get("pose");
            if (body) {
              body.textContent =
                `x=${state.pose.x.toFixed(3)} y=${state.pose.y.toFixed(3)} ` +
                `theta=${state.pose.theta.toFixed(1)}`;
            }
          } else {
            redrawMap();
          }
          break;
        case "image":
          drawImage("last-image", String(envelope.payload.data ?? ""));
          break;
        case "live_view":
          drawImage("live-view", String(envelope.payload.data ?? ""));
          break;
        case "scan":
          break; // consumed by the map overlay; ranges drive no extra widget yet
        default:
          break;
      }
    }
  }

  // --- connection -------------------------------------------------------------------

  const wsBase = `${location.protocol === "https:" ? "wss" : "ws"}://${location.host}`;
  socket = new WebSocket(attachUrl(wsBase, session, role));
  socket.onopen = () => {
    banner.textContent = `session ${session}: attached as ${role}`;
    for (const queued of sendQueue.splice(0)) {
      socket!.send(queued);
    }
  };
  socket.onmessage = (event) => {
    const envelope = decode(String(event.data));
    if (envelope !== null) handleEnvelope(envelope);
  };
  socket.onclose = () => {
    if (!banner.className.includes("fatal")) {
      banner.textContent = `disconnected (session ${session})`;
      banner.className = "banner banner-warn";
    }
    grid.classList.add("disabled");
  };
}

main();
