/**
 * Encoder presets. The pixel-projection family is self-contained and fully
 * deterministic (a seeded random projection of resized pixels), which is what
 * tests and desk-scale runs use. The pretrained-backbone presets carry their
 * published preprocessing constants but need model weights this repository
 * does not bundle; selecting one aborts with instructions, and a full-scale
 * run wires an actual runtime behind the same interface.
 */

import { DecodedImage, resizeBilinear } from "./image.js";
import { seedFromString, SplitMix64 } from "./rng.js";

export class ModelUnavailableError extends Error {}

export interface Encoder {
  preset: string;
  dimension: number;
  /** Recorded verbatim in the provenance sidecar. */
  preprocessing: Record<string, unknown>;
  encodeBatch(images: DecodedImage[]): Float32Array[];
}

class PixelProjectionEncoder implements Encoder {
  readonly preset: string;
  readonly dimension: number;
  readonly preprocessing: Record<string, unknown>;
  private readonly inputSize = 32;
  private readonly weights: Float64Array; // dimension x (32*32*3), row-major

  constructor(preset: string, dimension: number) {
    this.preset = preset;
    this.dimension = dimension;
    this.preprocessing = {
      resize: { width: this.inputSize, height: this.inputSize, interpolation: "bilinear" },
      pixel_range: "[0,1]",
      center: 0.5,
      projection: { kind: "seeded-gaussian", seed: preset, scale: "1/sqrt(input)" },
    };
    const input = this.inputSize * this.inputSize * 3;
    const rng = new SplitMix64(seedFromString(preset));
    const scale = 1 / Math.sqrt(input);
    this.weights = new Float64Array(dimension * input);
    for (let i = 0; i < this.weights.length; i++) {
      this.weights[i] = rng.nextNormal() * scale;
    }
  }

  encodeBatch(images: DecodedImage[]): Float32Array[] {
    const input = this.inputSize * this.inputSize * 3;
    return images.map((image) => {
      const pixels = resizeBilinear(image, this.inputSize);
      const centered = new Float64Array(input);
      for (let i = 0; i < input; i++) centered[i] = pixels[i] - 0.5;
      const out = new Float32Array(this.dimension);
      for (let row = 0; row < this.dimension; row++) {
        let acc = 0;
        const base = row * input;
        for (let i = 0; i < input; i++) acc += this.weights[base + i] * centered[i];
        out[row] = Math.fround(acc);
      }
      return out;
    });
  }
}

const CLIP_PREPROCESSING = {
  resize: { shortest_side: 224, interpolation: "bicubic" },
  center_crop: 224,
  pixel_range: "[0,1]",
  normalize: {
    mean: [0.48145466, 0.4578275, 0.40821073],
    std: [0.26862954, 0.26130258, 0.27577711],
  },
};

const VIT_PREPROCESSING = {
  resize: { width: 224, height: 224, interpolation: "bilinear" },
  pixel_range: "[0,1]",
  normalize: { mean: [0.5, 0.5, 0.5], std: [0.5, 0.5, 0.5] },
};

interface BackbonePreset {
  dimension: number;
  preprocessing: Record<string, unknown>;
  note: string;
}

/** Pretrained families reported in the model-comparison ablation. */
const BACKBONE_PRESETS: Record<string, BackbonePreset> = {
  "vit-base-patch16-224": {
    dimension: 768,
    preprocessing: VIT_PREPROCESSING,
    note: "generic vision transformer, pre-classifier representation",
  },
  "clip-vit-base-patch32": {
    dimension: 512,
    preprocessing: CLIP_PREPROCESSING,
    note: "generic image-text dual encoder, image tower output",
  },
  "fashion-clip-2": {
    dimension: 512,
    preprocessing: CLIP_PREPROCESSING,
    note: "fashion-specialized dual encoder",
  },
  "open-fashion-clip": {
    dimension: 512,
    preprocessing: CLIP_PREPROCESSING,
    note: "fashion-specialized dual encoder",
  },
  "marqo-fashion-clip": {
    dimension: 512,
    preprocessing: CLIP_PREPROCESSING,
    note: "fashion-specialized dual encoder; default preset for full-scale runs",
  },
};

const PIXEL_PRESETS: Record<string, number> = {
  "pixel-projection-64": 64,
  "pixel-projection-256": 256,
};

export const PRESET_NAMES = [...Object.keys(PIXEL_PRESETS), ...Object.keys(BACKBONE_PRESETS)];

export function createEncoder(preset: string): Encoder {
  if (preset in PIXEL_PRESETS) {
    return new PixelProjectionEncoder(preset, PIXEL_PRESETS[preset]);
  }
  const backbone = BACKBONE_PRESETS[preset];
  if (backbone) {
    throw new ModelUnavailableError(
      `preset '${preset}' (${backbone.note}) needs pretrained weights that are not ` +
        `bundled here; wire an inference runtime for it or use a pixel-projection ` +
        `preset. Expected embedding width: ${backbone.dimension}.`
    );
  }
  throw new Error(`unknown model preset '${preset}'; known presets: ${PRESET_NAMES.join(", ")}`);
}

export function presetPreprocessing(preset: string): Record<string, unknown> | undefined {
  return BACKBONE_PRESETS[preset]?.preprocessing;
}
