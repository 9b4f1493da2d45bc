import { execFileSync } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { deflateRawSync, crc32 } from "node:zlib";

import { describe, expect, it } from "vitest";

import {
  InvariantViolation,
  LandmarkFileIncomplete,
  MissingTensor,
  SchemaUnknown,
  parseBmf,
  readBmf,
  serializeBmf,
  validateModel,
  writeBmf,
} from "./bmf.js";
import { convertAnnotations, convertModel } from "./convert.js";
import { parseNpy, readNpz } from "./npz.js";
import { fullLandmarks, npyBytes, tinyModel, zipBytes } from "./testutil.js";
import { run as runCli } from "./cli.js";

const tmp = () => mkdtempSync(join(tmpdir(), "bmfconv-"));

function pythonAvailable(): boolean {
  try {
    execFileSync("python3", ["-c", "import anthrofit"], { stdio: "ignore" });
    return true;
  } catch {
    return false;
  }
}

function sourceNpz(dir: string,
                   options: { dropWeights?: boolean; basisWidth?: number } = {}): string {
  const numV = 8;
  const numJ = 22;
  const basisWidth = options.basisWidth ?? 5;
  const verts: number[] = [];
  for (const y of [0, 1]) {
    for (const [x, z] of [[0.1, 0], [0, 0.1], [-0.1, 0], [0, -0.1]]) verts.push(x, y, z);
  }
  const faces: number[] = [];
  for (let k = 0; k < 4; k++) {
    const k1 = (k + 1) % 4;
    faces.push(k, k1, 4 + k, k1, 4 + k1, 4 + k);
  }
  const shapedirs = new Array(numV * 3 * basisWidth).fill(0);
  for (let v = 0; v < numV; v++) shapedirs[(v * 3 + 1) * basisWidth] = verts[v * 3 + 1];
  const regressor = new Array(numJ * numV).fill(1 / numV);
  const weights = new Array(numV * numJ).fill(0);
  for (let v = 0; v < numV; v++) weights[v * numJ + (verts[v * 3 + 1] > 0.5 ? 1 : 0)] = 1;
  const kintree: number[] = [];
  for (let j = 0; j < numJ; j++) kintree.push(j === 0 ? 4294967295 : j - 1);
  for (let j = 0; j < numJ; j++) kintree.push(j);
  const posedirs = new Array(numV * 3 * 9 * (numJ - 1)).fill(0.001);

  const entries = new Map<string, Buffer>([
    ["v_template.npy", npyBytes("<f8", [numV, 3], verts)],
    ["f.npy", npyBytes("<i8", [8, 3], faces)],
    ["shapedirs.npy", npyBytes("<f8", [numV, 3, basisWidth], shapedirs)],
    ["J_regressor.npy", npyBytes("<f8", [numJ, numV], regressor)],
    ["kintree_table.npy", npyBytes("<i8", [2, numJ], kintree)],
    ["posedirs.npy", npyBytes("<f4", [numV, 3, 9 * (numJ - 1)], posedirs)],
  ]);
  if (!options.dropWeights) {
    entries.set("weights.npy", npyBytes("<f8", [numV, numJ], weights));
  }
  const path = join(dir, "source.npz");
  writeFileSync(path, zipBytes(entries));
  return path;
}

describe("bmf container", () => {
  it("round-trips byte-identically", () => {
    const dir = tmp();
    const path = join(dir, "tiny.bmf");
    writeBmf(path, tinyModel());
    const original = readFileSync(path);
    const reread = readBmf(path);
    validateModel(reread);
    const copy = join(dir, "copy.bmf");
    writeBmf(copy, reread);
    expect(readFileSync(copy).equals(original)).toBe(true);
  });

  it("round-trips through the cli", () => {
    const dir = tmp();
    const src = join(dir, "tiny.bmf");
    writeBmf(src, tinyModel());
    const out = join(dir, "copy.bmf");
    expect(runCli(["roundtrip", "--src", src, "--out", out])).toBe(0);
    expect(readFileSync(out).equals(readFileSync(src))).toBe(true);
  });

  it("rejects a wrong magic", () => {
    expect(() => parseBmf(Buffer.from("NOPE\0\0\0\0"))).toThrow(/magic/);
  });

  it("validates parents topology", () => {
    const model = tinyModel();
    model.tensors.get("parents")!.data = Int32Array.from([-1, 5]);
    expect(() => validateModel(model)).toThrow(InvariantViolation);
  });

  it("validates skin-weight row sums", () => {
    const model = tinyModel();
    (model.tensors.get("skin_weights")!.data as Float32Array)[0] = 0.5;
    expect(() => validateModel(model)).toThrow(/sums to/);
  });

  it("reports missing tensors", () => {
    const model = tinyModel();
    model.tensors.delete("skin_weights");
    expect(() => validateModel(model)).toThrow(MissingTensor);
  });
});

describe("npz reader", () => {
  it("parses stored entries of each dtype", () => {
    const entries = new Map<string, Buffer>([
      ["a.npy", npyBytes("<f4", [2, 2], [1, 2, 3, 4])],
      ["b.npy", npyBytes("<f8", [3], [0.5, -0.5, 2.5])],
      ["c.npy", npyBytes("<i8", [2], [7, -9])],
    ]);
    const arrays = readNpz(zipBytes(entries));
    expect(Array.from(arrays.get("a")!.data as Float32Array)).toEqual([1, 2, 3, 4]);
    expect(Array.from(arrays.get("b")!.data as Float64Array)).toEqual([0.5, -0.5, 2.5]);
    expect(arrays.get("c")!.shape).toEqual([2]);
  });

  it("parses deflate entries", () => {
    const npy = npyBytes("<f8", [2], [1.5, 2.5]);
    const compressed = deflateRawSync(npy);
    const name = Buffer.from("x.npy");
    const local = Buffer.alloc(30);
    local.writeUInt32LE(0x04034b50, 0);
    local.writeUInt16LE(8, 8);
    local.writeUInt32LE(crc32(npy), 14);
    local.writeUInt32LE(compressed.length, 18);
    local.writeUInt32LE(npy.length, 22);
    local.writeUInt16LE(name.length, 26);
    const central = Buffer.alloc(46);
    central.writeUInt32LE(0x02014b50, 0);
    central.writeUInt16LE(8, 10);
    central.writeUInt32LE(crc32(npy), 16);
    central.writeUInt32LE(compressed.length, 20);
    central.writeUInt32LE(npy.length, 24);
    central.writeUInt16LE(name.length, 28);
    central.writeUInt32LE(0, 42);
    const eocd = Buffer.alloc(22);
    eocd.writeUInt32LE(0x06054b50, 0);
    eocd.writeUInt16LE(1, 8);
    eocd.writeUInt16LE(1, 10);
    eocd.writeUInt32LE(central.length + name.length, 12);
    eocd.writeUInt32LE(local.length + name.length + compressed.length, 16);
    const zip = Buffer.concat([local, name, compressed, central, name, eocd]);
    const arrays = readNpz(zip);
    expect(Array.from(arrays.get("x")!.data as Float64Array)).toEqual([1.5, 2.5]);
  });

  it("rejects fortran order", () => {
    const npy = npyBytes("<f8", [2], [1, 2]);
    const mangled = Buffer.from(
      npy.toString("latin1").replace("'fortran_order': False", "'fortran_order': True "),
      "latin1");
    expect(() => parseNpy(mangled)).toThrow(SchemaUnknown);
  });
});

describe("model conversion", () => {
  it("converts an archive into a loadable validated asset", () => {
    const dir = tmp();
    const src = sourceNpz(dir);
    const landmarks = join(dir, "landmarks.json");
    writeFileSync(landmarks, JSON.stringify(fullLandmarks(8)));
    const out = join(dir, "model.bmf");
    const manifest = convertModel(src, landmarks, out, 2, { gender: "neutral" });
    expect(manifest.beta_dim).toBe(2);
    expect(manifest.detected["shapedirs"]).toEqual([8, 3, 5]);

    const file = readBmf(out);
    validateModel(file);
    expect(file.tensors.get("shape_dirs")!.shape).toEqual([8, 3, 2]);
    expect(file.tensors.get("pose_dirs")).toBeDefined();
    expect((file.header.measurements as unknown[]).length).toBe(36);
    expect(JSON.parse(readFileSync(out + ".manifest.json").toString()).source_sha256)
      .toHaveLength(64);

    // a second conversion is byte-identical (deterministic output)
    const out2 = join(dir, "model2.bmf");
    convertModel(src, landmarks, out2, 2, { gender: "neutral" });
    expect(readFileSync(out2).equals(readFileSync(out))).toBe(true);
  });

  it("marks full-width gendered conversions with the strict profile", () => {
    // mechanics of the official-asset path: a neutral source with a 16-wide
    // basis converts to beta_dim 16 and passes strict profile validation
    const dir = tmp();
    const src = sourceNpz(dir, { basisWidth: 20 });
    const landmarks = join(dir, "landmarks.json");
    writeFileSync(landmarks, JSON.stringify(fullLandmarks(8)));
    const out = join(dir, "neutral16.bmf");
    convertModel(src, landmarks, out, 16, { gender: "neutral" });
    const file = readBmf(out);
    expect(file.header.profile).toBe("smplx");
    expect(file.tensors.get("shape_dirs")!.shape).toEqual([8, 3, 16]);
    validateModel(file);
  });

  it("omits pose correctives on request", () => {
    const dir = tmp();
    const src = sourceNpz(dir);
    const landmarks = join(dir, "landmarks.json");
    writeFileSync(landmarks, JSON.stringify(fullLandmarks(8)));
    const out = join(dir, "model.bmf");
    convertModel(src, landmarks, out, 2, { includePoseDirs: false });
    expect(readBmf(out).tensors.get("pose_dirs")).toBeUndefined();
  });

  it("rejects a source without skinning weights", () => {
    const dir = tmp();
    const src = sourceNpz(dir, { dropWeights: true });
    const landmarks = join(dir, "landmarks.json");
    writeFileSync(landmarks, JSON.stringify(fullLandmarks(8)));
    expect(() => convertModel(src, landmarks, join(dir, "o.bmf"), 2))
      .toThrow(MissingTensor);
  });

  it("rejects an incomplete landmark file", () => {
    const dir = tmp();
    const src = sourceNpz(dir);
    const landmarks = join(dir, "landmarks.json");
    const partial = fullLandmarks(8);
    delete (partial as Record<string, number>).cervicale;
    writeFileSync(landmarks, JSON.stringify(partial));
    expect(() => convertModel(src, landmarks, join(dir, "o.bmf"), 2))
      .toThrow(LandmarkFileIncomplete);
  });

  it("rejects beta_dim beyond the source basis", () => {
    const dir = tmp();
    const src = sourceNpz(dir);
    const landmarks = join(dir, "landmarks.json");
    writeFileSync(landmarks, JSON.stringify(fullLandmarks(8)));
    expect(() => convertModel(src, landmarks, join(dir, "o.bmf"), 99)).toThrow(/basis width/);
  });

  it.skipIf(!pythonAvailable())("emitted assets load in the python toolkit", () => {
    const dir = tmp();
    const src = sourceNpz(dir);
    const landmarks = join(dir, "landmarks.json");
    writeFileSync(landmarks, JSON.stringify(fullLandmarks(8)));
    const out = join(dir, "model.bmf");
    convertModel(src, landmarks, out, 2, { gender: "neutral" });
    execFileSync("python3", ["-c",
      `from anthrofit.model import load_model; m = load_model(${JSON.stringify(out)}); ` +
      "assert m.beta_dim == 2 and len(m.measurement_specs) == 36"]);
  });

  it.skipIf(!pythonAvailable())("round-trips toolkit-generated assets byte-identically", () => {
    const dir = tmp();
    const human = join(dir, "human.bmf");
    execFileSync("python3", ["-m", "anthrofit.cli", "gen-toy-asset", "--kind", "human",
                             "--out", human]);
    const file = readBmf(human);
    validateModel(file);
    const copy = join(dir, "copy.bmf");
    writeBmf(copy, file);
    expect(readFileSync(copy).equals(readFileSync(human))).toBe(true);
  });
});

describe("annotation conversion", () => {
  it("maps a 2-frame source", () => {
    const dir = tmp();
    const src = join(dir, "ann.json");
    writeFileSync(src, JSON.stringify([
      { beta: [0.1, 0.2], pose: [0, 0, 0, 0.5, 0, 0], translation: [1, 2, 3] },
      { beta: [0.3, 0.4], pose: [0, 0, 0.1, 0, 0, 0] },
    ]));
    const out = join(dir, "frames.jsonl");
    expect(convertAnnotations(src, out)).toBe(2);
    const lines = readFileSync(out).toString().trim().split("\n");
    expect(lines).toHaveLength(2);
    const first = JSON.parse(lines[0]);
    expect(first).toMatchObject({ frame_id: 0, present: true, translation: [1, 2, 3] });
    expect(JSON.parse(lines[1]).translation).toEqual([0, 0, 0]);
  });

  it("writes an empty file for an empty source", () => {
    const dir = tmp();
    const src = join(dir, "empty.json");
    writeFileSync(src, "[]");
    const out = join(dir, "frames.jsonl");
    expect(convertAnnotations(src, out)).toBe(0);
    expect(readFileSync(out).toString()).toBe("");
  });

  it("marks frames with missing pose as absent", () => {
    const dir = tmp();
    const src = join(dir, "ann.json");
    writeFileSync(src, JSON.stringify([
      { beta: [0.1], pose: null },
      { beta: [0.2], pose: [0, 0, 0] },
    ]));
    const out = join(dir, "frames.jsonl");
    convertAnnotations(src, out);
    const lines = readFileSync(out).toString().trim().split("\n");
    expect(JSON.parse(lines[0])).toEqual({ frame_id: 0, present: false });
    expect(JSON.parse(lines[1]).present).toBe(true);
  });

  it("converts array-layout npz annotations", () => {
    const dir = tmp();
    const entries = new Map<string, Buffer>([
      ["betas.npy", npyBytes("<f8", [2, 2], [0.1, 0.2, 0.3, 0.4])],
      ["poses.npy", npyBytes("<f8", [2, 6], Array(12).fill(0.05))],
      ["transl.npy", npyBytes("<f8", [2, 3], [1, 2, 3, 4, 5, 6])],
    ]);
    const src = join(dir, "ann.npz");
    writeFileSync(src, zipBytes(entries));
    const out = join(dir, "frames.jsonl");
    expect(convertAnnotations(src, out)).toBe(2);
    const rows = readFileSync(out).toString().trim().split("\n").map((l) => JSON.parse(l));
    expect(rows[1].translation).toEqual([4, 5, 6]);
  });

  it("rejects unknown schemas", () => {
    const dir = tmp();
    const src = join(dir, "ann.json");
    writeFileSync(src, JSON.stringify({ nothing: "here" }));
    expect(() => convertAnnotations(src, join(dir, "o.jsonl"))).toThrow(SchemaUnknown);
  });
});

describe("cli", () => {
  it("returns 2 for unknown commands and 1 for domain errors", () => {
    expect(runCli(["wat"])).toBe(2);
    const dir = tmp();
    writeFileSync(join(dir, "bad.json"), "{}");
    expect(runCli(["annotations", "--src", join(dir, "bad.json"),
                   "--out", join(dir, "o.jsonl")])).toBe(1);
  });
});
