/**
 * Minimal NPZ/NPY reader: enough of the ZIP format (stored and deflate
 * entries, located through the end-of-central-directory record) plus the NPY
 * v1/v2 header to pull numeric arrays out of archive files.
 */

import { inflateRawSync } from "node:zlib";

import { SchemaUnknown } from "./bmf.js";

export interface NpyArray {
  dtype: string;          // numpy descr, e.g. "<f4"
  shape: number[];
  data: Float32Array | Float64Array | Int32Array | BigInt64Array | Uint8Array;
}

const EOCD_SIG = 0x06054b50;
const CENTRAL_SIG = 0x02014b50;
const LOCAL_SIG = 0x04034b50;

interface ZipEntry {
  name: string;
  method: number;
  compressedSize: number;
  localOffset: number;
}

function findEocd(buf: Buffer): number {
  // EOCD is at the end, possibly followed by a comment up to 64 KiB
  const start = Math.max(0, buf.length - 65_557);
  for (let pos = buf.length - 22; pos >= start; pos--) {
    if (buf.readUInt32LE(pos) === EOCD_SIG) return pos;
  }
  throw new SchemaUnknown("not a ZIP archive (no end-of-central-directory record)");
}

export function listZipEntries(buf: Buffer): ZipEntry[] {
  const eocd = findEocd(buf);
  const count = buf.readUInt16LE(eocd + 10);
  let pos = buf.readUInt32LE(eocd + 16);
  const entries: ZipEntry[] = [];
  for (let k = 0; k < count; k++) {
    if (buf.readUInt32LE(pos) !== CENTRAL_SIG) {
      throw new SchemaUnknown("corrupt ZIP central directory");
    }
    const method = buf.readUInt16LE(pos + 10);
    const compressedSize = buf.readUInt32LE(pos + 20);
    const nameLen = buf.readUInt16LE(pos + 28);
    const extraLen = buf.readUInt16LE(pos + 30);
    const commentLen = buf.readUInt16LE(pos + 32);
    const localOffset = buf.readUInt32LE(pos + 42);
    const name = buf.toString("utf-8", pos + 46, pos + 46 + nameLen);
    entries.push({ name, method, compressedSize, localOffset });
    pos += 46 + nameLen + extraLen + commentLen;
  }
  return entries;
}

function entryData(buf: Buffer, entry: ZipEntry): Buffer {
  if (buf.readUInt32LE(entry.localOffset) !== LOCAL_SIG) {
    throw new SchemaUnknown("corrupt ZIP local header");
  }
  const nameLen = buf.readUInt16LE(entry.localOffset + 26);
  const extraLen = buf.readUInt16LE(entry.localOffset + 28);
  const start = entry.localOffset + 30 + nameLen + extraLen;
  const raw = buf.subarray(start, start + entry.compressedSize);
  if (entry.method === 0) return Buffer.from(raw);
  if (entry.method === 8) return inflateRawSync(raw);
  throw new SchemaUnknown(`unsupported ZIP compression method ${entry.method}`);
}

export function parseNpy(buf: Buffer): NpyArray {
  if (buf.length < 10 || buf[0] !== 0x93 || buf.toString("latin1", 1, 6) !== "NUMPY") {
    throw new SchemaUnknown("not an NPY array");
  }
  const major = buf[6];
  const headerLen = major === 1 ? buf.readUInt16LE(8) : buf.readUInt32LE(8);
  const headerStart = major === 1 ? 10 : 12;
  const header = buf.toString("latin1", headerStart, headerStart + headerLen);
  const descr = /'descr':\s*'([^']+)'/.exec(header)?.[1];
  const fortran = /'fortran_order':\s*(True|False)/.exec(header)?.[1];
  const shapeText = /'shape':\s*\(([^)]*)\)/.exec(header)?.[1];
  if (!descr || !fortran || shapeText === undefined) {
    throw new SchemaUnknown("malformed NPY header");
  }
  if (fortran === "True") throw new SchemaUnknown("fortran-ordered NPY arrays are unsupported");
  const shape = shapeText.split(",").map((s) => s.trim()).filter((s) => s.length > 0)
    .map((s) => parseInt(s, 10));
  const body = buf.subarray(headerStart + headerLen);
  const count = shape.reduce((a, b) => a * b, 1);
  const copy = (size: number) => {
    const bytes = new Uint8Array(count * size);
    bytes.set(body.subarray(0, count * size));
    return bytes.buffer;
  };
  let data: NpyArray["data"];
  switch (descr) {
    case "<f4": data = new Float32Array(copy(4)); break;
    case "<f8": data = new Float64Array(copy(8)); break;
    case "<i4": data = new Int32Array(copy(4)); break;
    case "<i8": data = new BigInt64Array(copy(8)); break;
    case "|u1": data = new Uint8Array(copy(1)); break;
    default: throw new SchemaUnknown(`unsupported NPY dtype ${descr}`);
  }
  return { dtype: descr, shape, data };
}

export function readNpz(buf: Buffer): Map<string, NpyArray> {
  const out = new Map<string, NpyArray>();
  for (const entry of listZipEntries(buf)) {
    if (!entry.name.endsWith(".npy")) continue;
    out.set(entry.name.slice(0, -4), parseNpy(entryData(buf, entry)));
  }
  return out;
}

export function toFloat64(arr: NpyArray): Float64Array {
  const out = new Float64Array(arr.data.length);
  if (arr.data instanceof BigInt64Array) {
    for (let i = 0; i < arr.data.length; i++) out[i] = Number(arr.data[i]);
  } else {
    for (let i = 0; i < arr.data.length; i++) out[i] = Number(arr.data[i]);
  }
  return out;
}
