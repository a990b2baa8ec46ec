/**
 * Export manifest: which model, which images, where the table goes.
 */

import { existsSync, readFileSync } from "node:fs";
import { resolve, dirname } from "node:path";
import { z } from "zod";

import { PRESET_NAMES } from "./encoders.js";

export class ManifestError extends Error {}

const manifestSchema = z
  .object({
    model: z.string(),
    images: z
      .array(
        z
          .object({
            path: z.string(),
            label: z.string(),
            split: z.enum(["train", "test", "unassigned"]).default("unassigned"),
          })
          .strict()
      )
      .min(1),
    out: z.string(),
    batch_size: z.number().int().positive().default(32),
  })
  .strict();

export type Manifest = z.infer<typeof manifestSchema> & { baseDir: string };

export function parseManifest(raw: unknown, baseDir: string): Manifest {
  const parsed = manifestSchema.safeParse(raw);
  if (!parsed.success) {
    const issue = parsed.error.issues[0];
    throw new ManifestError(`invalid manifest: ${issue.path.join(".")}: ${issue.message}`);
  }
  const manifest = { ...parsed.data, baseDir };
  if (!PRESET_NAMES.includes(manifest.model)) {
    throw new ManifestError(
      `invalid manifest: model '${manifest.model}' is not a known preset ` +
        `(${PRESET_NAMES.join(", ")})`
    );
  }
  const missing = manifest.images
    .map((img) => resolve(baseDir, img.path))
    .filter((p) => !existsSync(p));
  if (missing.length) {
    throw new ManifestError(
      `invalid manifest: ${missing.length} image path(s) do not exist, first: ${missing[0]}`
    );
  }
  return manifest;
}

export function loadManifest(path: string): Manifest {
  let text: string;
  try {
    text = readFileSync(path, "utf-8");
  } catch (err) {
    throw new ManifestError(`cannot read manifest ${path}: ${(err as Error).message}`);
  }
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (err) {
    throw new ManifestError(`manifest ${path} is not valid JSON: ${(err as Error).message}`);
  }
  return parseManifest(raw, dirname(resolve(path)));
}
