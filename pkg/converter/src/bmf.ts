/**
 * BMF body-model container: 4-byte magic, little-endian u32 header length,
 * UTF-8 JSON header, then raw little-endian row-major tensors at the offsets
 * the header declares (relative to the payload start).
 *
 * Parsing keeps the original header bytes so an unmodified asset re-emits
 * byte-identically; freshly built assets get a canonical header (recursively
 * sorted keys, compact separators).
 */

import { readFileSync, writeFileSync } from "node:fs";

export const MODEL_MAGIC = "BMF1";

export type DType = "f32" | "i32";

export interface TensorRecord {
  name: string;
  dtype: DType;
  shape: number[];
  offset: number;
  length: number;
}

export interface Tensor {
  dtype: DType;
  shape: number[];
  /** flat row-major values; Float32Array for f32, Int32Array for i32 */
  data: Float32Array | Int32Array;
}

export interface BmfFile {
  header: Record<string, unknown>;
  tensors: Map<string, Tensor>;
  /** exact header bytes as read; present only for parsed files */
  rawHeader?: Buffer;
  /** tensor order as listed in the header */
  order: string[];
}

export class ConvertError extends Error {}
export class MagicMismatch extends ConvertError {}
export class MissingTensor extends ConvertError {}
export class LandmarkFileIncomplete extends ConvertError {}
export class SchemaUnknown extends ConvertError {}
export class InvariantViolation extends ConvertError {}

const ITEM_SIZE: Record<DType, number> = { f32: 4, i32: 4 };

export function parseBmf(buffer: Buffer): BmfFile {
  if (buffer.length < 8 || buffer.toString("latin1", 0, 4) !== MODEL_MAGIC) {
    throw new MagicMismatch(`expected magic ${MODEL_MAGIC}`);
  }
  const headerLen = buffer.readUInt32LE(4);
  if (8 + headerLen > buffer.length) {
    throw new ConvertError("header length exceeds file size");
  }
  const rawHeader = buffer.subarray(8, 8 + headerLen);
  const header = JSON.parse(rawHeader.toString("utf-8")) as Record<string, unknown>;
  if (header.version !== 1) {
    throw new ConvertError(`unsupported container version ${String(header.version)}`);
  }
  const payload = buffer.subarray(8 + headerLen);
  const tensors = new Map<string, Tensor>();
  const order: string[] = [];
  for (const rec of (header.tensors as TensorRecord[]) ?? []) {
    const expect = rec.shape.reduce((a, b) => a * b, 1) * ITEM_SIZE[rec.dtype];
    if (rec.length !== expect) {
      throw new ConvertError(`tensor ${rec.name}: length ${rec.length} != shape product ${expect}`);
    }
    if (rec.offset < 0 || rec.offset + rec.length > payload.length) {
      throw new ConvertError(`tensor ${rec.name}: payload out of bounds`);
    }
    const slice = payload.subarray(rec.offset, rec.offset + rec.length);
    // copy so the typed view is aligned and detached from the file buffer
    const bytes = new Uint8Array(slice.length);
    bytes.set(slice);
    const data =
      rec.dtype === "f32" ? new Float32Array(bytes.buffer) : new Int32Array(bytes.buffer);
    tensors.set(rec.name, { dtype: rec.dtype, shape: rec.shape, data });
    order.push(rec.name);
  }
  return { header, tensors, rawHeader: Buffer.from(rawHeader), order };
}

export function readBmf(path: string): BmfFile {
  return parseBmf(readFileSync(path));
}

/** JSON.stringify with recursively sorted object keys (canonical form). */
export function canonicalJson(value: unknown): string {
  const sort = (v: unknown): unknown => {
    if (Array.isArray(v)) return v.map(sort);
    if (v !== null && typeof v === "object") {
      const out: Record<string, unknown> = {};
      for (const key of Object.keys(v as Record<string, unknown>).sort()) {
        out[key] = sort((v as Record<string, unknown>)[key]);
      }
      return out;
    }
    return v;
  };
  return JSON.stringify(sort(value));
}

export function serializeBmf(file: BmfFile): Buffer {
  const records: TensorRecord[] = [];
  const blobs: Buffer[] = [];
  let offset = 0;
  for (const name of file.order) {
    const tensor = file.tensors.get(name);
    if (!tensor) throw new MissingTensor(`tensor ${name} listed but not provided`);
    const blob = Buffer.from(tensor.data.buffer, tensor.data.byteOffset, tensor.data.byteLength);
    records.push({
      name,
      dtype: tensor.dtype,
      shape: tensor.shape,
      offset,
      length: blob.length,
    });
    blobs.push(blob);
    offset += blob.length;
  }

  let headerBytes: Buffer;
  if (file.rawHeader !== undefined) {
    headerBytes = file.rawHeader; // exact round trip of an unmodified asset
  } else {
    const header = { ...file.header, tensors: records };
    headerBytes = Buffer.from(canonicalJson(header), "utf-8");
  }
  const head = Buffer.alloc(8);
  head.write(MODEL_MAGIC, 0, "latin1");
  head.writeUInt32LE(headerBytes.length, 4);
  return Buffer.concat([head, headerBytes, ...blobs]);
}

export function writeBmf(path: string, file: BmfFile): void {
  writeFileSync(path, serializeBmf(file));
}

// ---------------------------------------------------------------------------
// full model invariant validation (mirrors what the toolkit's loader enforces)
// ---------------------------------------------------------------------------

const STRICT_BETA_DIMS: Record<string, number> = { male: 11, female: 10, neutral: 16 };

function need(file: BmfFile, name: string): Tensor {
  const tensor = file.tensors.get(name);
  if (!tensor) throw new MissingTensor(`asset missing required tensor '${name}'`);
  return tensor;
}

export function validateModel(file: BmfFile): void {
  const vTemplate = need(file, "v_template");
  const faces = need(file, "faces");
  const shapeDirs = need(file, "shape_dirs");
  const regressor = need(file, "joint_regressor");
  const parents = need(file, "parents");
  const skin = need(file, "skin_weights");

  if (vTemplate.shape.length !== 2 || vTemplate.shape[1] !== 3) {
    throw new InvariantViolation(`v_template must be (V, 3), got ${vTemplate.shape}`);
  }
  const numV = vTemplate.shape[0];
  const numJ = parents.shape[0];
  if (faces.shape.length !== 2 || faces.shape[1] !== 3) {
    throw new InvariantViolation("faces must be (F, 3)");
  }
  if (shapeDirs.shape.length !== 3 || shapeDirs.shape[0] !== numV || shapeDirs.shape[1] !== 3) {
    throw new InvariantViolation("shape_dirs must be (V, 3, B)");
  }
  const betaDim = shapeDirs.shape[2];
  if (betaDim < 1) throw new InvariantViolation("beta_dim must be >= 1");
  if (regressor.shape[0] !== numJ || regressor.shape[1] !== numV) {
    throw new InvariantViolation("joint_regressor must be (J, V)");
  }
  if (skin.shape[0] !== numV || skin.shape[1] !== numJ) {
    throw new InvariantViolation("skin_weights must be (V, J)");
  }
  const poseDirs = file.tensors.get("pose_dirs");
  if (poseDirs && (poseDirs.shape[0] !== numV || poseDirs.shape[1] !== 3 ||
                   poseDirs.shape[2] !== 9 * (numJ - 1))) {
    throw new InvariantViolation("pose_dirs must be (V, 3, 9(J-1))");
  }

  const par = parents.data;
  if (par[0] !== -1) throw new InvariantViolation("parents[0] must be -1");
  for (let j = 1; j < numJ; j++) {
    if (par[j] < 0 || par[j] >= j) {
      throw new InvariantViolation(`parents[${j}] = ${par[j]} breaks topological order`);
    }
  }

  for (let v = 0; v < numV; v++) {
    let sum = 0;
    for (let j = 0; j < numJ; j++) {
      const w = skin.data[v * numJ + j];
      if (w < -1e-9) throw new InvariantViolation(`negative skin weight at vertex ${v}`);
      sum += w;
    }
    if (Math.abs(sum - 1) > 1e-6) {
      throw new InvariantViolation(`skin-weight row ${v} sums to ${sum}`);
    }
  }
  for (let j = 0; j < numJ; j++) {
    let sum = 0;
    for (let v = 0; v < numV; v++) {
      const w = regressor.data[j * numV + v];
      if (w < -1e-6) throw new InvariantViolation(`negative regressor weight at joint ${j}`);
      sum += w;
    }
    if (Math.abs(sum - 1) > 1e-4) {
      throw new InvariantViolation(`joint_regressor row ${j} sums to ${sum}`);
    }
  }

  for (let k = 0; k < faces.data.length; k++) {
    const idx = faces.data[k];
    if (idx < 0 || idx >= numV) throw new InvariantViolation(`face index ${idx} out of range`);
  }

  const landmarks = (file.header.landmarks as Record<string, number>) ?? {};
  for (const [name, idx] of Object.entries(landmarks)) {
    if (idx < 0 || idx >= numV) {
      throw new InvariantViolation(`landmark ${name} index ${idx} out of range`);
    }
  }

  const up = file.header.up_axis as number[] | undefined;
  if (up) {
    const norm = Math.hypot(up[0], up[1], up[2]);
    if (norm < 0.9 || norm > 1.1) throw new InvariantViolation("up_axis must be a unit vector");
  }

  const gender = (file.header.gender as string) ?? "neutral";
  if (!(gender in STRICT_BETA_DIMS)) throw new InvariantViolation(`unknown gender ${gender}`);
  if (file.header.profile === "smplx" && STRICT_BETA_DIMS[gender] !== betaDim) {
    throw new InvariantViolation(
      `smplx-profile ${gender} asset must have beta_dim ${STRICT_BETA_DIMS[gender]}, got ${betaDim}`);
  }
  const declared = file.header.beta_dim as number | undefined;
  if (declared !== undefined && declared !== betaDim) {
    throw new InvariantViolation(`header beta_dim ${declared} != shape_dirs width ${betaDim}`);
  }
}
