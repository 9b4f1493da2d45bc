/** Fixture builders for the tests: a tiny valid model asset and a minimal
 * NPZ writer (stored ZIP entries only). */

import { crc32 } from "node:zlib";

import { BmfFile, Tensor } from "./bmf.js";
import { LANDMARK_NAMES } from "./convert.js";

export function npyBytes(descr: string, shape: number[], values: number[]): Buffer {
  const shapeText = shape.length === 1 ? `(${shape[0]},)` : `(${shape.join(", ")})`;
  let header = `{'descr': '${descr}', 'fortran_order': False, 'shape': ${shapeText}, }`;
  const unpadded = 10 + header.length + 1;
  header += " ".repeat((64 - (unpadded % 64)) % 64) + "\n";
  const head = Buffer.alloc(10 + header.length);
  head[0] = 0x93;
  head.write("NUMPY", 1, "latin1");
  head[6] = 1;
  head[7] = 0;
  head.writeUInt16LE(header.length, 8);
  head.write(header, 10, "latin1");

  const count = shape.reduce((a, b) => a * b, 1);
  let body: Buffer;
  if (descr === "<f4") {
    body = Buffer.from(Float32Array.from(values.slice(0, count)).buffer);
  } else if (descr === "<f8") {
    body = Buffer.from(Float64Array.from(values.slice(0, count)).buffer);
  } else if (descr === "<i4") {
    body = Buffer.from(Int32Array.from(values.slice(0, count)).buffer);
  } else if (descr === "<i8") {
    body = Buffer.from(BigInt64Array.from(values.slice(0, count).map(BigInt)).buffer);
  } else {
    throw new Error(`testutil: unsupported descr ${descr}`);
  }
  return Buffer.concat([head, body]);
}

export function zipBytes(entries: Map<string, Buffer>): Buffer {
  const locals: Buffer[] = [];
  const centrals: Buffer[] = [];
  let offset = 0;
  for (const [name, data] of entries) {
    const nameBytes = Buffer.from(name, "utf-8");
    const crc = crc32(data);
    const local = Buffer.alloc(30);
    local.writeUInt32LE(0x04034b50, 0);
    local.writeUInt16LE(20, 4);        // version needed
    local.writeUInt16LE(0, 6);         // flags
    local.writeUInt16LE(0, 8);         // stored
    local.writeUInt32LE(crc, 14);
    local.writeUInt32LE(data.length, 18);
    local.writeUInt32LE(data.length, 22);
    local.writeUInt16LE(nameBytes.length, 26);
    locals.push(local, nameBytes, data);

    const central = Buffer.alloc(46);
    central.writeUInt32LE(0x02014b50, 0);
    central.writeUInt16LE(20, 4);
    central.writeUInt16LE(20, 6);
    central.writeUInt16LE(0, 10);      // stored
    central.writeUInt32LE(crc, 16);
    central.writeUInt32LE(data.length, 20);
    central.writeUInt32LE(data.length, 24);
    central.writeUInt16LE(nameBytes.length, 28);
    central.writeUInt32LE(offset, 42);
    centrals.push(central, nameBytes);
    offset += 30 + nameBytes.length + data.length;
  }
  const centralStart = offset;
  const centralSize = centrals.reduce((a, b) => a + b.length, 0);
  const eocd = Buffer.alloc(22);
  eocd.writeUInt32LE(0x06054b50, 0);
  eocd.writeUInt16LE(entries.size, 8);
  eocd.writeUInt16LE(entries.size, 10);
  eocd.writeUInt32LE(centralSize, 12);
  eocd.writeUInt32LE(centralStart, 16);
  return Buffer.concat([...locals, ...centrals, eocd]);
}

/** Small valid 2-joint tube asset expressed directly as a BmfFile. */
export function tinyModel(): BmfFile {
  const numV = 8;
  const verts: number[] = [];
  for (const y of [0, 1]) {
    for (const [x, z] of [[0.1, 0], [0, 0.1], [-0.1, 0], [0, -0.1]]) {
      verts.push(x, y, z);
    }
  }
  const faces: number[] = [];
  for (let k = 0; k < 4; k++) {
    const k1 = (k + 1) % 4;
    faces.push(k, k1, 4 + k, k1, 4 + k1, 4 + k);
  }
  const shapeDirs = new Float32Array(numV * 3 * 2);
  for (let v = 0; v < numV; v++) shapeDirs[(v * 3 + 1) * 2 + 1] = verts[v * 3 + 1];
  const regressor = new Float32Array(2 * numV);
  const skin = new Float32Array(numV * 2);
  for (let v = 0; v < numV; v++) {
    const joint = verts[v * 3 + 1] > 0.5 ? 1 : 0;
    regressor[joint * numV + v] = 0.25;
    skin[v * 2 + joint] = 1;
  }
  const tensors = new Map<string, Tensor>([
    ["v_template", { dtype: "f32", shape: [numV, 3], data: Float32Array.from(verts) }],
    ["faces", { dtype: "i32", shape: [8, 3], data: Int32Array.from(faces) }],
    ["shape_dirs", { dtype: "f32", shape: [numV, 3, 2], data: shapeDirs }],
    ["joint_regressor", { dtype: "f32", shape: [2, numV], data: regressor }],
    ["parents", { dtype: "i32", shape: [2], data: Int32Array.from([-1, 0]) }],
    ["skin_weights", { dtype: "f32", shape: [numV, 2], data: skin }],
  ]);
  return {
    header: {
      version: 1,
      gender: "neutral",
      beta_dim: 2,
      up_axis: [0, 1, 0],
      profile: "toy",
      landmarks: { bottom: 0, top: 4 },
    },
    tensors,
    order: [...tensors.keys()],
  };
}

/** Landmark table mapping every required name to a valid vertex index. */
export function fullLandmarks(numV: number): Record<string, number> {
  const out: Record<string, number> = {};
  LANDMARK_NAMES.forEach((name, k) => {
    out[name] = k % numV;
  });
  return out;
}
