/**
 * Conversion recipes: ecosystem-native body-model archives (NPZ or JSON
 * layouts) into BMF assets, and per-frame annotation files into the
 * frame-estimate JSONL the evaluation tools consume.
 */

import { createHash } from "node:crypto";
import { readFileSync, writeFileSync } from "node:fs";

import {
  BmfFile,
  ConvertError,
  LandmarkFileIncomplete,
  MissingTensor,
  SchemaUnknown,
  Tensor,
  validateModel,
  writeBmf,
} from "./bmf.js";
import { NpyArray, readNpz, toFloat64 } from "./npz.js";

// landmark names required for the standard 36-measurement table
export const LANDMARK_NAMES: string[] = [
  "acromion_l", "acromion_r", "cervicale", "suprasternale", "chin", "head_top",
  "ear_center_l", "ear_center_r", "belly_button", "back_belly_button", "pubic_bone",
  "trochanterion_l", "trochanterion_r", "knee_cap_l", "knee_cap_r", "ankle_l", "ankle_r",
  "heel_l", "heel_r", "ball_l", "ball_r", "big_toe_l", "big_toe_r", "small_toe_l",
  "small_toe_r", "elbow_l", "elbow_r", "wrist_l", "wrist_r", "stylion_l", "stylion_r",
  "finger_valley_l", "finger_valley_r", "nipple", "head_temple", "adams_apple",
  "bicep_center_l", "bicep_center_r", "forearm_widest_l", "forearm_widest_r",
  "thigh_center_l", "thigh_center_r", "calf_widest_l", "calf_widest_r",
];

// joint ids in the standard full-body skeleton the archives use
const J = {
  pelvis: 0, l_hip: 1, r_hip: 2, spine1: 3, l_knee: 4, r_knee: 5, spine2: 6,
  l_ankle: 7, r_ankle: 8, spine3: 9, neck: 12, head: 15,
  l_shoulder: 16, r_shoulder: 17, l_elbow: 18, r_elbow: 19, l_wrist: 20, r_wrist: 21,
};

function lengthSpec(index: number, name: string, a: string[] | string, b: string[] | string,
                    vertical = false) {
  return {
    index, name,
    kind: vertical ? "length_vertical" : "length_euclidean",
    endpoints: [Array.isArray(a) ? a : [a], Array.isArray(b) ? b : [b]],
  };
}

function circSpec(index: number, name: string, position: string, joints: number[],
                  normal: "up" | { from: string[]; to: string[] } = "up") {
  return {
    index, name, kind: "circumference",
    plane: { position: [position], normal },
    submesh: { joints, slab: null },
  };
}

export function standardMeasurementTable(): unknown[] {
  return [
    lengthSpec(1, "shoulder_width", "acromion_l", "acromion_r"),
    lengthSpec(2, "back_torso_height", "cervicale", "back_belly_button", true),
    lengthSpec(3, "front_torso_height", "suprasternale", "belly_button", true),
    lengthSpec(4, "head_length", "head_top", "cervicale"),
    lengthSpec(5, "midline_neck", "chin", "suprasternale"),
    lengthSpec(6, "lateral_neck", ["ear_center_l", "ear_center_r"], "cervicale"),
    lengthSpec(7, "height", "head_top", ["heel_l", "heel_r"], true),
    lengthSpec(8, "hand_r", "finger_valley_r", "stylion_r"),
    lengthSpec(9, "hand_l", "finger_valley_l", "stylion_l"),
    lengthSpec(10, "arm_r", "acromion_r", "wrist_r"),
    lengthSpec(11, "arm_l", "acromion_l", "wrist_l"),
    lengthSpec(12, "forearm_r", "elbow_r", "stylion_r"),
    lengthSpec(13, "forearm_l", "elbow_l", "stylion_l"),
    lengthSpec(14, "thigh_r", "trochanterion_r", "knee_cap_r"),
    lengthSpec(15, "thigh_l", "trochanterion_l", "knee_cap_l"),
    lengthSpec(16, "calf_r", "knee_cap_r", "ankle_r"),
    lengthSpec(17, "calf_l", "knee_cap_l", "ankle_l"),
    lengthSpec(18, "foot_width_r", "small_toe_r", "big_toe_r"),
    lengthSpec(19, "foot_width_l", "small_toe_l", "big_toe_l"),
    lengthSpec(20, "heel_to_ball_r", "heel_r", "ball_r"),
    lengthSpec(21, "heel_to_ball_l", "heel_l", "ball_l"),
    lengthSpec(22, "heel_to_toe_r", "heel_r", "big_toe_r"),
    lengthSpec(23, "heel_to_toe_l", "heel_l", "big_toe_l"),
    circSpec(24, "waist_circ", "belly_button", [J.pelvis, J.spine1, J.spine2, J.spine3]),
    circSpec(25, "chest_circ", "nipple", [J.spine1, J.spine2, J.spine3]),
    circSpec(26, "hip_circ", "pubic_bone", [J.pelvis, J.l_hip, J.r_hip]),
    circSpec(27, "head_circ", "head_temple", [J.head]),
    circSpec(28, "neck_circ", "adams_apple", [J.neck, J.head],
             { from: ["suprasternale"], to: ["chin"] }),
    circSpec(29, "upper_arm_circ_r", "bicep_center_r", [J.r_shoulder, J.r_elbow],
             { from: ["acromion_r"], to: ["elbow_r"] }),
    circSpec(30, "upper_arm_circ_l", "bicep_center_l", [J.l_shoulder, J.l_elbow],
             { from: ["acromion_l"], to: ["elbow_l"] }),
    circSpec(31, "forearm_circ_r", "forearm_widest_r", [J.r_elbow, J.r_wrist],
             { from: ["elbow_r"], to: ["wrist_r"] }),
    circSpec(32, "forearm_circ_l", "forearm_widest_l", [J.l_elbow, J.l_wrist],
             { from: ["elbow_l"], to: ["wrist_l"] }),
    circSpec(33, "thigh_circ_r", "thigh_center_r", [J.r_hip, J.r_knee]),
    circSpec(34, "thigh_circ_l", "thigh_center_l", [J.l_hip, J.l_knee]),
    circSpec(35, "calf_circ_r", "calf_widest_r", [J.r_knee, J.r_ankle]),
    circSpec(36, "calf_circ_l", "calf_widest_l", [J.l_knee, J.l_ankle]),
  ];
}

// ---------------------------------------------------------------------------
// source layouts
// ---------------------------------------------------------------------------

type SourceArrays = Map<string, NpyArray>;

function jsonToArrays(obj: Record<string, unknown>): SourceArrays {
  const out: SourceArrays = new Map();
  const flatten = (value: unknown): { shape: number[]; values: number[] } => {
    if (!Array.isArray(value)) return { shape: [], values: [Number(value)] };
    if (value.length === 0) return { shape: [0], values: [] };
    const inner = (value as unknown[]).map(flatten);
    return {
      shape: [value.length, ...inner[0].shape],
      values: inner.flatMap((x) => x.values),
    };
  };
  for (const [name, value] of Object.entries(obj)) {
    if (value === null || typeof value === "string") continue;
    const { shape, values } = flatten(value);
    out.set(name, { dtype: "<f8", shape, data: Float64Array.from(values) });
  }
  return out;
}

export function loadSourceArrays(path: string): SourceArrays {
  const buf = readFileSync(path);
  if (path.endsWith(".npz")) return readNpz(buf);
  if (path.endsWith(".json")) {
    return jsonToArrays(JSON.parse(buf.toString("utf-8")) as Record<string, unknown>);
  }
  throw new SchemaUnknown(`unrecognized source format for ${path} (expect .npz or .json)`);
}

function pick(source: SourceArrays, names: string[]): NpyArray {
  for (const name of names) {
    const arr = source.get(name);
    if (arr) return arr;
  }
  throw new MissingTensor(`source is missing tensor '${names[0]}' (aliases: ${names.join(", ")})`);
}

function asF32(arr: NpyArray): Float32Array {
  return Float32Array.from(toFloat64(arr));
}

function asI32(arr: NpyArray): Int32Array {
  const f = toFloat64(arr);
  const out = new Int32Array(f.length);
  for (let i = 0; i < f.length; i++) out[i] = f[i] >= 4_294_967_295 ? -1 : Math.trunc(f[i]);
  return out;
}

export interface ConvertModelOptions {
  gender?: "male" | "female" | "neutral";
  upAxis?: [number, number, number];
  includePoseDirs?: boolean;
  extraHeader?: Record<string, unknown>;
}

export interface ConversionManifest {
  source: string;
  source_sha256: string;
  detected: Record<string, number[]>;
  target_gender: string;
  beta_dim: number;
  landmarks_file: string;
  pose_dirs_included: boolean;
}

const STRICT_BETA_DIMS: Record<string, number> = { male: 11, female: 10, neutral: 16 };

export function convertModel(sourcePath: string, landmarksPath: string, outPath: string,
                             betaDim: number,
                             options: ConvertModelOptions = {}): ConversionManifest {
  const source = loadSourceArrays(sourcePath);
  const detected: Record<string, number[]> = {};
  for (const [name, arr] of source) detected[name] = arr.shape;

  const vTemplate = pick(source, ["v_template"]);
  const shapeDirs = pick(source, ["shapedirs", "shape_dirs"]);
  const regressor = pick(source, ["J_regressor", "joint_regressor"]);
  const skin = pick(source, ["weights", "skin_weights"]);
  const faces = pick(source, ["f", "faces"]);

  const numV = vTemplate.shape[0];
  const basisWidth = shapeDirs.shape[2];
  if (betaDim > basisWidth) {
    throw new ConvertError(
      `requested beta_dim ${betaDim} exceeds the source shape basis width ${basisWidth}`);
  }

  // parents either directly or as the first row of a kinematic-tree table
  let parents: Int32Array;
  if (source.has("parents")) {
    parents = asI32(source.get("parents")!);
  } else if (source.has("kintree_table")) {
    const table = source.get("kintree_table")!;
    const flat = asI32(table);
    parents = flat.slice(0, table.shape[1]);
  } else {
    throw new MissingTensor("source is missing tensor 'parents' (aliases: parents, kintree_table)");
  }
  parents[0] = -1;

  // truncate the shape basis to the first betaDim columns
  const shapeF64 = toFloat64(shapeDirs);
  const truncated = new Float32Array(numV * 3 * betaDim);
  for (let v = 0; v < numV; v++) {
    for (let c = 0; c < 3; c++) {
      for (let b = 0; b < betaDim; b++) {
        truncated[(v * 3 + c) * betaDim + b] = shapeF64[(v * 3 + c) * basisWidth + b];
      }
    }
  }

  const landmarksRaw = JSON.parse(readFileSync(landmarksPath).toString()) as
    Record<string, number>;
  const missing = LANDMARK_NAMES.filter((n) => !(n in landmarksRaw));
  if (missing.length > 0) {
    throw new LandmarkFileIncomplete(
      `landmark file is missing ${missing.length} names: ${missing.slice(0, 5).join(", ")}...`);
  }
  const landmarks: Record<string, number> = {};
  for (const name of Object.keys(landmarksRaw).sort()) landmarks[name] = landmarksRaw[name];

  const gender = options.gender ?? "neutral";
  const tensors = new Map<string, Tensor>();
  const order = ["v_template", "faces", "shape_dirs", "joint_regressor", "parents",
                 "skin_weights"];
  tensors.set("v_template", { dtype: "f32", shape: [numV, 3], data: asF32(vTemplate) });
  tensors.set("faces", { dtype: "i32", shape: faces.shape, data: asI32(faces) });
  tensors.set("shape_dirs", { dtype: "f32", shape: [numV, 3, betaDim], data: truncated });
  tensors.set("joint_regressor", { dtype: "f32", shape: regressor.shape, data: asF32(regressor) });
  tensors.set("parents", { dtype: "i32", shape: [parents.length], data: parents });
  tensors.set("skin_weights", { dtype: "f32", shape: skin.shape, data: asF32(skin) });
  if (options.includePoseDirs !== false && source.has("posedirs")) {
    const pd = source.get("posedirs")!;
    tensors.set("pose_dirs", { dtype: "f32", shape: pd.shape, data: asF32(pd) });
    order.push("pose_dirs");
  }

  const header: Record<string, unknown> = {
    version: 1,
    gender,
    beta_dim: betaDim,
    up_axis: options.upAxis ?? [0, 1, 0],
    profile: STRICT_BETA_DIMS[gender] === betaDim ? "smplx" : "toy",
    measurement_table: "anthro36",
    landmarks,
    measurements: standardMeasurementTable(),
    ...options.extraHeader,
  };

  const file: BmfFile = { header, tensors, order };
  validateModel(file);      // every emitted asset must pass the full checks
  writeBmf(outPath, file);

  const manifest: ConversionManifest = {
    source: sourcePath,
    source_sha256: createHash("sha256").update(readFileSync(sourcePath)).digest("hex"),
    detected,
    target_gender: gender,
    beta_dim: betaDim,
    landmarks_file: landmarksPath,
    pose_dirs_included: tensors.has("pose_dirs"),
  };
  writeFileSync(outPath + ".manifest.json", JSON.stringify(manifest, null, 2) + "\n");
  return manifest;
}

// ---------------------------------------------------------------------------
// per-frame annotations -> frame-estimate JSONL
// ---------------------------------------------------------------------------

interface AnnotationRow {
  frame_id: number;
  present: boolean;
  beta?: number[];
  pose?: number[];
  translation?: number[];
}

function rowsFromArrays(source: SourceArrays): AnnotationRow[] {
  const betas = source.get("betas") ?? source.get("beta");
  const poses = source.get("poses") ?? source.get("pose");
  const transl = source.get("transl") ?? source.get("translation");
  if (!betas || !poses) {
    throw new SchemaUnknown("annotation source lacks per-frame 'betas'/'poses' arrays");
  }
  const n = betas.shape[0] ?? 0;
  const bWidth = betas.shape[1] ?? 0;
  const pWidth = poses.shape.slice(1).reduce((a, b) => a * b, 1);
  const bData = toFloat64(betas);
  const pData = toFloat64(poses);
  const tData = transl ? toFloat64(transl) : null;
  const rows: AnnotationRow[] = [];
  for (let i = 0; i < n; i++) {
    const beta = Array.from(bData.subarray(i * bWidth, (i + 1) * bWidth));
    const pose = Array.from(pData.subarray(i * pWidth, (i + 1) * pWidth));
    const ok = beta.every(Number.isFinite) && pose.every(Number.isFinite) && pose.length > 0;
    if (!ok) {
      rows.push({ frame_id: i, present: false });
      continue;
    }
    rows.push({
      frame_id: i,
      present: true,
      beta,
      pose,
      translation: tData ? Array.from(tData.subarray(i * 3, i * 3 + 3)) : [0, 0, 0],
    });
  }
  return rows;
}

function rowsFromJson(obj: unknown): AnnotationRow[] {
  if (Array.isArray(obj)) {
    // list of per-frame records
    return obj.map((rec, i) => {
      const r = rec as Record<string, unknown>;
      const pose = r.pose as number[] | undefined | null;
      const beta = r.beta as number[] | undefined | null;
      const id = (r.frame_id as number | undefined) ?? i;
      if (!pose || !beta || !pose.every(Number.isFinite) || !beta.every(Number.isFinite)) {
        return { frame_id: id, present: false };
      }
      return {
        frame_id: id,
        present: true,
        beta,
        pose,
        translation: (r.translation as number[] | undefined) ?? [0, 0, 0],
      };
    });
  }
  if (obj !== null && typeof obj === "object") {
    return rowsFromArrays(jsonToArrays(obj as Record<string, unknown>));
  }
  throw new SchemaUnknown("unrecognized annotation JSON layout");
}

export function convertAnnotations(sourcePath: string, outPath: string): number {
  let rows: AnnotationRow[];
  if (sourcePath.endsWith(".npz")) {
    const arrays = readNpz(readFileSync(sourcePath));
    rows = arrays.size === 0 ? [] : rowsFromArrays(arrays);
  } else if (sourcePath.endsWith(".json")) {
    const text = readFileSync(sourcePath).toString("utf-8").trim();
    rows = text.length === 0 ? [] : rowsFromJson(JSON.parse(text));
  } else {
    throw new SchemaUnknown(`unrecognized annotation format for ${sourcePath}`);
  }
  const lines = rows.map((r) => JSON.stringify(r));
  writeFileSync(outPath, lines.length ? lines.join("\n") + "\n" : "");
  return rows.length;
}
