#!/usr/bin/env node
/**
 * plots <kind> --in <csv> --manifest <json> --out <png>
 *
 * Kinds: decay, uniformity, wavefront, stft, picard. Exit 0 on success,
 * 2 on usage/schema errors (with a column diff for CSV mismatches).
 */

import * as fs from "fs";
import * as path from "path";

import { EmptyCsvError, SchemaError } from "./csv";
import { RENDERERS } from "./figures";

function usage(): string {
  return `usage: plots <${Object.keys(RENDERERS).join("|")}> --in <csv> --manifest <json> --out <png>`;
}

export function main(argv: string[]): number {
  const [kind, ...rest] = argv;
  if (!kind || !(kind in RENDERERS)) {
    console.error(usage());
    return 2;
  }
  const flags: Record<string, string> = {};
  for (let i = 0; i < rest.length; i += 2) {
    if (!rest[i].startsWith("--") || rest[i + 1] === undefined) {
      console.error(usage());
      return 2;
    }
    flags[rest[i].slice(2)] = rest[i + 1];
  }
  const input = flags["in"];
  const manifest = flags["manifest"];
  const out = flags["out"];
  if (!input || !manifest || !out) {
    console.error(usage());
    return 2;
  }
  try {
    const { png } = RENDERERS[kind](input, manifest);
    fs.mkdirSync(path.dirname(path.resolve(out)), { recursive: true });
    fs.writeFileSync(out, png);
  } catch (err) {
    if (err instanceof SchemaError || err instanceof EmptyCsvError) {
      console.error(String(err.message));
      return 2;
    }
    if (err && (err as NodeJS.ErrnoException).code === "ENOENT") {
      console.error(`missing input: ${(err as Error).message}`);
      return 2;
    }
    throw err;
  }
  console.log(out);
  return 0;
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
