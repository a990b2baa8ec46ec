/**
 * One-shot batch export: decode every manifest image, run the preset encoder
 * in batches, and write the EMB1 table plus provenance and rejects sidecars.
 *
 * The vocabulary is the manifest's label set in first-appearance order, even
 * if some of a label's images end up rejected. Record ids are the manifest
 * positions, so identical manifests always produce identical files. Vectors
 * are raw encoder outputs; the retrieval side normalizes at insert.
 */

import { createHash } from "node:crypto";
import { readFileSync, writeFileSync } from "node:fs";
import { resolve } from "node:path";

import { writeEmb1, Emb1Record, SPLIT_CODES } from "./emb1.js";
import { createEncoder } from "./encoders.js";
import { decodeImage, DecodedImage, UndecodableImageError } from "./image.js";
import { Manifest } from "./manifest.js";

export interface ExportResult {
  outPath: string;
  written: number;
  rejected: { path: string; reason: string }[];
  dimension: number;
}

export interface ExportOptions {
  warn?: (message: string) => void;
}

export function exportEmbeddings(manifest: Manifest, options: ExportOptions = {}): ExportResult {
  const warn = options.warn ?? ((message: string) => console.error(`warning: ${message}`));
  const encoder = createEncoder(manifest.model);

  const vocabulary: string[] = [];
  const labelIndex = new Map<string, number>();
  for (const image of manifest.images) {
    if (!labelIndex.has(image.label)) {
      labelIndex.set(image.label, vocabulary.length);
      vocabulary.push(image.label);
    }
  }

  const records: Emb1Record[] = [];
  const rejected: { path: string; reason: string }[] = [];
  let batch: { index: number; decoded: DecodedImage }[] = [];

  const flush = () => {
    if (!batch.length) return;
    const vectors = encoder.encodeBatch(batch.map((item) => item.decoded));
    batch.forEach((item, i) => {
      const image = manifest.images[item.index];
      records.push({
        id: BigInt(item.index),
        label: labelIndex.get(image.label)!,
        split: SPLIT_CODES[image.split],
        vector: vectors[i],
      });
    });
    batch = [];
  };

  manifest.images.forEach((image, index) => {
    const fullPath = resolve(manifest.baseDir, image.path);
    try {
      batch.push({ index, decoded: decodeImage(readFileSync(fullPath)) });
    } catch (err) {
      if (err instanceof UndecodableImageError) {
        warn(`skipping ${image.path}: ${err.message}`);
        rejected.push({ path: image.path, reason: err.message });
      } else {
        throw err;
      }
    }
    if (batch.length >= manifest.batch_size) flush();
  });
  flush();

  const outPath = resolve(manifest.baseDir, manifest.out);
  const table = writeEmb1({ dimension: encoder.dimension, vocabulary, records });
  writeFileSync(outPath, table);

  const manifestDigest = createHash("sha256")
    .update(JSON.stringify({ model: manifest.model, images: manifest.images }))
    .digest("hex");
  const provenance = {
    model: manifest.model,
    dimension: encoder.dimension,
    preprocessing: encoder.preprocessing,
    normalization: "none (raw encoder outputs; the index normalizes at insert)",
    vocabulary,
    image_count: manifest.images.length,
    written_count: records.length,
    rejected_count: rejected.length,
    manifest_digest: manifestDigest,
  };
  writeFileSync(`${outPath}.provenance.json`, JSON.stringify(provenance, null, 2) + "\n");
  writeFileSync(`${outPath}.rejects.json`, JSON.stringify(rejected, null, 2) + "\n");

  return { outPath, written: records.length, rejected, dimension: encoder.dimension };
}
