/** Decode the robot camera's base64 binary PGM (P5) frames. */

export interface GrayImage {
  width: number;
  height: number;
  gray: Uint8Array; // row-major, top row first
}

export function decodePgm(base64Data: string): GrayImage | null {
  let bytes: Uint8Array;
  try {
    const bin = atob(base64Data);
    bytes = new Uint8Array(bin.length);
    for (let i = 0; i < bin.length; i++) {
      bytes[i] = bin.charCodeAt(i);
    }
  } catch {
    return null;
  }
  // header: "P5\n<width> <height>\n<maxval>\n"
  let pos = 0;
  const fields: string[] = [];
  let current = "";
  while (pos < bytes.length && fields.length < 4) {
    const ch = bytes[pos++];
    if (ch === 0x20 || ch === 0x0a || ch === 0x09 || ch === 0x0d) {
      if (current.length > 0) {
        fields.push(current);
        current = "";
      }
      if (fields.length === 4) break;
    } else {
      current += String.fromCharCode(ch);
    }
  }
  if (fields.length < 4 || fields[0] !== "P5") return null;
  const width = parseInt(fields[1], 10);
  const height = parseInt(fields[2], 10);
  if (!Number.isFinite(width) || !Number.isFinite(height)) return null;
  const body = bytes.subarray(pos, pos + width * height);
  if (body.length !== width * height) return null;
  return { width, height, gray: Uint8Array.from(body) };
}

export function toRgba(image: GrayImage): Uint8ClampedArray {
  const out = new Uint8ClampedArray(image.width * image.height * 4);
  for (let i = 0; i < image.gray.length; i++) {
    const v = image.gray[i];
    out[i * 4] = v;
    out[i * 4 + 1] = v;
    out[i * 4 + 2] = v;
    out[i * 4 + 3] = 255;
  }
  return out;
}
