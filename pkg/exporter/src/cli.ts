#!/usr/bin/env node
/**
 * embshrink-export --manifest <manifest.json>
 *
 * Exit codes: 0 success (rejected images are warnings), 1 runtime failure
 * (e.g. preset weights unavailable), 2 manifest/usage validation failure.
 */

import { parseArgs } from "node:util";

import { ModelUnavailableError } from "./encoders.js";
import { exportEmbeddings } from "./exporter.js";
import { loadManifest, ManifestError } from "./manifest.js";

export function main(argv: string[]): number {
  let values;
  try {
    ({ values } = parseArgs({
      args: argv,
      options: {
        manifest: { type: "string" },
        help: { type: "boolean", default: false },
      },
    }));
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 2;
  }
  if (values.help || !values.manifest) {
    console.error("usage: embshrink-export --manifest <manifest.json>");
    return values.help ? 0 : 2;
  }
  try {
    const manifest = loadManifest(values.manifest);
    const result = exportEmbeddings(manifest);
    console.log(
      `${result.written} records (d=${result.dimension}, ${result.rejected.length} rejected) -> ${result.outPath}`
    );
    return 0;
  } catch (err) {
    if (err instanceof ManifestError) {
      console.error(`error: ${err.message}`);
      return 2;
    }
    if (err instanceof ModelUnavailableError) {
      console.error(`error: ${err.message}`);
      return 1;
    }
    console.error(`internal error: ${(err as Error).message}`);
    return 1;
  }
}

const invokedDirectly = process.argv[1] && import.meta.url.endsWith(process.argv[1].split("/").pop()!);
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
