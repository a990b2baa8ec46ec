/**
 * Image decoding and preprocessing. PNG (via pngjs) and binary PPM (P6) are
 * accepted; anything else is an UndecodableImageError, which the exporter
 * turns into a skip-with-warning rather than an abort.
 */

import pngjs from "pngjs";

const { PNG } = pngjs;

export class UndecodableImageError extends Error {}

export interface DecodedImage {
  width: number;
  height: number;
  /** Interleaved RGB in [0, 1], alpha dropped. */
  rgb: Float64Array;
}

function fromRgba(data: Buffer | Uint8Array, width: number, height: number): DecodedImage {
  const rgb = new Float64Array(width * height * 3);
  for (let p = 0; p < width * height; p++) {
    rgb[p * 3] = data[p * 4] / 255;
    rgb[p * 3 + 1] = data[p * 4 + 1] / 255;
    rgb[p * 3 + 2] = data[p * 4 + 2] / 255;
  }
  return { width, height, rgb };
}

function decodePpm(buffer: Buffer): DecodedImage {
  // P6 <width> <height> <maxval>\n followed by binary RGB triples
  const header = buffer.subarray(0, 64).toString("latin1");
  const match = /^P6\s+(\d+)\s+(\d+)\s+(\d+)\s/.exec(header);
  if (!match) throw new UndecodableImageError("malformed PPM header");
  const [, w, h, maxval] = match;
  const width = parseInt(w, 10);
  const height = parseInt(h, 10);
  const scale = parseInt(maxval, 10);
  const offset = match[0].length;
  const needed = width * height * 3;
  if (scale > 255 || buffer.length < offset + needed) {
    throw new UndecodableImageError("unsupported or truncated PPM body");
  }
  const rgb = new Float64Array(needed);
  for (let i = 0; i < needed; i++) rgb[i] = buffer[offset + i] / scale;
  return { width, height, rgb };
}

export function decodeImage(buffer: Buffer): DecodedImage {
  if (buffer.length >= 8 && buffer.subarray(0, 4).equals(Buffer.from([0x89, 0x50, 0x4e, 0x47]))) {
    let png;
    try {
      png = PNG.sync.read(buffer);
    } catch (err) {
      throw new UndecodableImageError(`PNG decode failed: ${(err as Error).message}`);
    }
    return fromRgba(png.data, png.width, png.height);
  }
  if (buffer.subarray(0, 2).toString("latin1") === "P6") {
    return decodePpm(buffer);
  }
  throw new UndecodableImageError("unrecognized image format (PNG and PPM are supported)");
}

/** Bilinear resample to a square target; pure arithmetic, so deterministic. */
export function resizeBilinear(image: DecodedImage, size: number): Float64Array {
  const out = new Float64Array(size * size * 3);
  const { width, height, rgb } = image;
  for (let y = 0; y < size; y++) {
    const sy = size === 1 ? 0 : (y * (height - 1)) / (size - 1);
    const y0 = Math.floor(sy);
    const y1 = Math.min(y0 + 1, height - 1);
    const fy = sy - y0;
    for (let x = 0; x < size; x++) {
      const sx = size === 1 ? 0 : (x * (width - 1)) / (size - 1);
      const x0 = Math.floor(sx);
      const x1 = Math.min(x0 + 1, width - 1);
      const fx = sx - x0;
      for (let c = 0; c < 3; c++) {
        const v00 = rgb[(y0 * width + x0) * 3 + c];
        const v01 = rgb[(y0 * width + x1) * 3 + c];
        const v10 = rgb[(y1 * width + x0) * 3 + c];
        const v11 = rgb[(y1 * width + x1) * 3 + c];
        const top = v00 * (1 - fx) + v01 * fx;
        const bottom = v10 * (1 - fx) + v11 * fx;
        out[(y * size + x) * 3 + c] = top * (1 - fy) + bottom * fy;
      }
    }
  }
  return out;
}
