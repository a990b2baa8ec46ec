import { describe, expect, it } from "vitest";
import pngjs from "pngjs";

import { decodeImage, resizeBilinear, UndecodableImageError } from "../src/image.js";

const { PNG } = pngjs;

function solidPng(width: number, height: number, rgb: [number, number, number]): Buffer {
  const png = new PNG({ width, height });
  for (let i = 0; i < width * height; i++) {
    png.data[i * 4] = rgb[0];
    png.data[i * 4 + 1] = rgb[1];
    png.data[i * 4 + 2] = rgb[2];
    png.data[i * 4 + 3] = 255;
  }
  return PNG.sync.write(png);
}

describe("decodeImage", () => {
  it("decodes PNG into [0,1] RGB", () => {
    const image = decodeImage(solidPng(4, 3, [255, 0, 51]));
    expect(image.width).toBe(4);
    expect(image.height).toBe(3);
    expect(image.rgb[0]).toBeCloseTo(1.0, 9);
    expect(image.rgb[1]).toBeCloseTo(0.0, 9);
    expect(image.rgb[2]).toBeCloseTo(0.2, 9);
  });

  it("decodes binary PPM", () => {
    const body = Buffer.from([255, 0, 0, 0, 255, 0]);
    const image = decodeImage(Buffer.concat([Buffer.from("P6 2 1 255\n", "latin1"), body]));
    expect(image.width).toBe(2);
    expect(image.rgb[0]).toBe(1);
    expect(image.rgb[4]).toBe(1);
  });

  it("rejects garbage", () => {
    expect(() => decodeImage(Buffer.from("definitely not an image"))).toThrow(
      UndecodableImageError
    );
  });

  it("rejects a truncated PNG", () => {
    const good = solidPng(8, 8, [10, 20, 30]);
    expect(() => decodeImage(good.subarray(0, good.length - 12))).toThrow(UndecodableImageError);
  });
});

describe("resizeBilinear", () => {
  it("keeps solid colors solid", () => {
    const image = decodeImage(solidPng(17, 9, [102, 51, 204]));
    const resized = resizeBilinear(image, 8);
    for (let p = 0; p < 8 * 8; p++) {
      expect(resized[p * 3]).toBeCloseTo(0.4, 9);
      expect(resized[p * 3 + 1]).toBeCloseTo(0.2, 9);
      expect(resized[p * 3 + 2]).toBeCloseTo(0.8, 9);
    }
  });

  it("interpolates a horizontal gradient", () => {
    const png = new PNG({ width: 3, height: 1 });
    for (let x = 0; x < 3; x++) {
      png.data[x * 4] = x * 100; // 0, 100, 200
      png.data[x * 4 + 1] = 0;
      png.data[x * 4 + 2] = 0;
      png.data[x * 4 + 3] = 255;
    }
    const image = decodeImage(PNG.sync.write(png));
    const resized = resizeBilinear(image, 5);
    expect(resized[0]).toBeCloseTo(0, 9);
    expect(resized[2 * 3]).toBeCloseTo(100 / 255, 9); // midpoint
    expect(resized[4 * 3]).toBeCloseTo(200 / 255, 9);
  });
});
