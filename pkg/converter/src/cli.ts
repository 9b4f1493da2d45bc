#!/usr/bin/env node
/**
 * bmf-convert model       --src model.npz --landmarks lm.json --out model.bmf
 *                         --beta-dim N [--gender g] [--up-axis x,y,z] [--no-pose-dirs]
 * bmf-convert annotations --src frames.json|.npz --out frames.jsonl
 * bmf-convert roundtrip   --src asset.bmf --out copy.bmf
 */

import { readBmf, validateModel, writeBmf, ConvertError } from "./bmf.js";
import { convertAnnotations, convertModel } from "./convert.js";

function parseFlags(argv: string[]): Map<string, string | boolean> {
  const flags = new Map<string, string | boolean>();
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (!arg.startsWith("--")) throw new ConvertError(`unexpected argument ${arg}`);
    const key = arg.slice(2);
    if (i + 1 < argv.length && !argv[i + 1].startsWith("--")) {
      flags.set(key, argv[++i]);
    } else {
      flags.set(key, true);
    }
  }
  return flags;
}

function needFlag(flags: Map<string, string | boolean>, name: string): string {
  const value = flags.get(name);
  if (typeof value !== "string") throw new ConvertError(`missing required flag --${name}`);
  return value;
}

export function run(argv: string[]): number {
  const [command, ...rest] = argv;
  try {
    if (command === "model") {
      const flags = parseFlags(rest);
      const upAxis = flags.has("up-axis")
        ? (needFlag(flags, "up-axis").split(",").map(Number) as [number, number, number])
        : undefined;
      const manifest = convertModel(
        needFlag(flags, "src"),
        needFlag(flags, "landmarks"),
        needFlag(flags, "out"),
        parseInt(needFlag(flags, "beta-dim"), 10),
        {
          gender: flags.get("gender") as "male" | "female" | "neutral" | undefined,
          upAxis,
          includePoseDirs: !flags.get("no-pose-dirs"),
        });
      console.log(`wrote ${needFlag(flags, "out")} (beta_dim ${manifest.beta_dim}, ` +
                  `${Object.keys(manifest.detected).length} source tensors)`);
      return 0;
    }
    if (command === "annotations") {
      const flags = parseFlags(rest);
      const count = convertAnnotations(needFlag(flags, "src"), needFlag(flags, "out"));
      console.log(`wrote ${count} frames to ${needFlag(flags, "out")}`);
      return 0;
    }
    if (command === "roundtrip") {
      const flags = parseFlags(rest);
      const file = readBmf(needFlag(flags, "src"));
      validateModel(file);
      writeBmf(needFlag(flags, "out"), file);
      console.log(`validated and rewrote ${needFlag(flags, "out")}`);
      return 0;
    }
    console.error("usage: bmf-convert model|annotations|roundtrip --src ... --out ...");
    return 2;
  } catch (error) {
    if (error instanceof ConvertError) {
      console.error(`error: ${error.message}`);
      return 1;
    }
    throw error;
  }
}

const invokedDirectly = process.argv[1]?.endsWith("cli.js")
  || process.argv[1]?.endsWith("bmf-convert");
if (invokedDirectly) {
  process.exit(run(process.argv.slice(2)));
}
