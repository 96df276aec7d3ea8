/**
 * Discovered-map state and rasterization: a pure fold over the snapshot
 * and delta stream. The same delta sequence always produces the same
 * pixels, and reapplying a delta is a no-op (cell writes are idempotent).
 */

import type { MapCell, Pose } from "./protocol.js";

export const UNKNOWN = 0;
export const FREE = 1;
export const OCCUPIED = 2;

export interface MapState {
  width: number;
  height: number;
  resolution: number;
  cells: Uint8Array; // index cy * width + cx, cy from the bottom row
}

export function emptyMap(width: number, height: number, resolution: number): MapState {
  return { width, height, resolution, cells: new Uint8Array(width * height) };
}

export interface ApplyResult {
  applied: number;
  ignored: MapCell[]; // out-of-bounds cells, reported for a console warning
}

export function applyCells(state: MapState, cells: MapCell[]): ApplyResult {
  let applied = 0;
  const ignored: MapCell[] = [];
  for (const cell of cells) {
    if (
      !Number.isInteger(cell.cx) || !Number.isInteger(cell.cy) ||
      cell.cx < 0 || cell.cx >= state.width || cell.cy < 0 || cell.cy >= state.height
    ) {
      ignored.push(cell);
      continue;
    }
    state.cells[cell.cy * state.width + cell.cx] = cell.state === "occupied" ? OCCUPIED : FREE;
    applied += 1;
  }
  return { applied, ignored };
}

// grayscale-ish palette: unknown neutral, free light, occupied dark
const COLORS: Record<number, [number, number, number]> = {
  [UNKNOWN]: [74, 78, 88],
  [FREE]: [226, 228, 222],
  [OCCUPIED]: [28, 30, 36],
};
const ROBOT: [number, number, number] = [208, 64, 48];

export interface Raster {
  width: number;
  height: number;
  pixels: Uint8ClampedArray; // RGBA rows top to bottom
}

/**
 * Render cells plus the robot marker (disc + heading line). Pure: the
 * raster is a function of (state, pose, scale) only.
 */
export function rasterize(state: MapState, pose: Pose | null, scale = 6): Raster {
  const width = state.width * scale;
  const height = state.height * scale;
  const pixels = new Uint8ClampedArray(width * height * 4);
  for (let py = 0; py < height; py++) {
    const cy = state.height - 1 - Math.floor(py / scale); // canvas rows top-down
    for (let px = 0; px < width; px++) {
      const cx = Math.floor(px / scale);
      const color = COLORS[state.cells[cy * state.width + cx]];
      const base = (py * width + px) * 4;
      pixels[base] = color[0];
      pixels[base + 1] = color[1];
      pixels[base + 2] = color[2];
      pixels[base + 3] = 255;
    }
  }
  if (pose !== null) {
    drawRobot(state, pose, scale, width, height, pixels);
  }
  return { width, height, pixels };
}

function putPixel(
  pixels: Uint8ClampedArray, width: number, height: number,
  px: number, py: number, color: [number, number, number],
): void {
  if (px < 0 || px >= width || py < 0 || py >= height) return;
  const base = (py * width + px) * 4;
  pixels[base] = color[0];
  pixels[base + 1] = color[1];
  pixels[base + 2] = color[2];
  pixels[base + 3] = 255;
}

function drawRobot(
  state: MapState, pose: Pose, scale: number,
  width: number, height: number, pixels: Uint8ClampedArray,
): void {
  const cxPix = (pose.x / state.resolution) * scale;
  const cyPix = height - (pose.y / state.resolution) * scale;
  const radius = Math.max(2, scale * 1.5);
  for (let dy = -radius; dy <= radius; dy++) {
    for (let dx = -radius; dx <= radius; dx++) {
      if (dx * dx + dy * dy <= radius * radius) {
        putPixel(pixels, width, height, Math.round(cxPix + dx), Math.round(cyPix + dy), ROBOT);
      }
    }
  }
  const rad = (pose.theta * Math.PI) / 180;
  const hx = Math.cos(rad);
  const hy = Math.sin(rad);
  const arrow = radius * 2.2;
  for (let t = 0; t <= arrow; t += 0.5) {
    putPixel(
      pixels, width, height,
      Math.round(cxPix + hx * t), Math.round(cyPix - hy * t), // screen y grows down
      ROBOT,
    );
  }
}
