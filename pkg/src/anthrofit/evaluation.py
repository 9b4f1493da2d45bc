"""Pose/mesh accuracy metrics over frame sequences and the shape-replacement
experiment harness: original estimates vs. consistent shapes from the median
coefficients or from measurement-driven regressors.

Frames with no estimate (``present = false``) contribute to the no-result
rate and are excluded from every mean.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import a2b as a2b_mod
from .errors import (
    FrameIdMismatch,
    InvalidConfig,
    KeypointCountMismatch,
    NoPresentFrames,
    TopologyMismatch,
)
from .measure import Measurer, b2a_batch
from .model import BodyModel, PoseParams, ShapeParams, forward, regress_points

MM_PER_M = 1000.0
MEDIAN_BETA = "median_beta"
MEDIAN_MEASUREMENTS_A2B = "median_measurements_a2b"

# Named keypoint subsets applied by index list. "body37" is the standard
# main-body evaluation subset for full-body skeletons (hands/face pruned to
# finger bases, toes, heels, eyes, ears and nose).
KEYPOINT_SELECTIONS: dict[str, tuple[int, ...]] = {
    "body37": tuple(list(range(22)) + [67, 66, 72, 71, 60, 61, 62, 63, 64, 65,
                                       56, 57, 58, 59, 55]),
}


def select_keypoints(keypoints: np.ndarray, selection: str | tuple[int, ...]) -> np.ndarray:
    """Restrict a (K, 3) keypoint array to a named or explicit index subset."""
    idx = KEYPOINT_SELECTIONS[selection] if isinstance(selection, str) else tuple(selection)
    keypoints = np.asarray(keypoints)
    if max(idx) >= keypoints.shape[0]:
        raise KeypointCountMismatch(
            f"selection needs keypoint {max(idx)}, array has {keypoints.shape[0]}")
    return keypoints[list(idx)]


@dataclass
class FrameEstimate:
    frame_id: int
    present: bool
    beta: np.ndarray | None = None
    pose: np.ndarray | None = None          # global orient (3) + body pose (3(J-1))
    translation: np.ndarray | None = None
    keypoints: np.ndarray | None = None     # optional; regressed when absent
    vertices: np.ndarray | None = None

    def pose_params(self, num_joints: int) -> PoseParams:
        pose = np.asarray(self.pose, dtype=np.float64).reshape(-1)
        if pose.shape[0] != 3 * num_joints:
            raise KeypointCountMismatch(
                f"pose vector has {pose.shape[0]} values, model wants {3 * num_joints}")
        return PoseParams(pose[:3], pose[3:].reshape(num_joints - 1, 3),
                          np.asarray(self.translation, dtype=np.float64))


def read_estimates(path: str | Path) -> list[FrameEstimate]:
    out = []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        if not obj.get("present", True):
            out.append(FrameEstimate(frame_id=int(obj["frame_id"]), present=False))
            continue
        out.append(FrameEstimate(
            frame_id=int(obj["frame_id"]),
            present=True,
            beta=np.asarray(obj["beta"], dtype=np.float64),
            pose=np.asarray(obj["pose"], dtype=np.float64),
            translation=np.asarray(obj.get("translation", [0.0, 0.0, 0.0]), dtype=np.float64),
            keypoints=np.asarray(obj["keypoints"], dtype=np.float64)
            if "keypoints" in obj else None,
        ))
    return out


def write_estimates(path: str | Path, estimates: list[FrameEstimate]) -> None:
    with open(path, "w") as fh:
        for e in estimates:
            if not e.present:
                fh.write(json.dumps({"frame_id": e.frame_id, "present": False}) + "\n")
                continue
            obj = {
                "frame_id": e.frame_id,
                "present": True,
                "beta": [float(v) for v in e.beta],
                "pose": [float(v) for v in np.asarray(e.pose).reshape(-1)],
                "translation": [float(v) for v in e.translation],
            }
            if e.keypoints is not None:
                obj["keypoints"] = [[float(v) for v in row] for row in e.keypoints]
            fh.write(json.dumps(obj) + "\n")


def estimate_keypoints(model: BodyModel, est: FrameEstimate,
                       regressor: str = "joints") -> np.ndarray:
    """Keypoints of an estimate: stored ones if present, otherwise regressed
    from the posed mesh."""
    if est.keypoints is not None:
        return est.keypoints
    kreg = model.keypoint_regressors.get(regressor, model.joint_regressor)
    mesh = forward(model, ShapeParams(est.beta), est.pose_params(model.num_joints))
    return regress_points(kreg, mesh.vertices)


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def mpjpe(pred: list[FrameEstimate], gt: dict[int, np.ndarray],
          model: BodyModel | None = None, regressor: str = "joints",
          root_index: int = 0,
          selection: str | tuple[int, ...] | None = None) -> tuple[float, float]:
    """Mean per-joint position error in mm over present frames, both poses
    root-aligned at the pelvis keypoint, plus the no-result percentage. An
    optional named selection restricts both sides to a keypoint subset before
    alignment (the root index then refers to the selected array)."""
    if {e.frame_id for e in pred} != set(gt.keys()):
        raise FrameIdMismatch("prediction and ground-truth frame ids differ")
    total = len(pred)
    absent = sum(1 for e in pred if not e.present)
    errors = []
    for est in pred:
        if not est.present:
            continue
        kp = estimate_keypoints(model, est, regressor) if est.keypoints is None \
            else est.keypoints
        ref = np.asarray(gt[est.frame_id], dtype=np.float64)
        if kp.shape != ref.shape:
            raise KeypointCountMismatch(
                f"frame {est.frame_id}: prediction {kp.shape} vs GT {ref.shape}")
        if selection is not None:
            kp = select_keypoints(kp, selection)
            ref = select_keypoints(ref, selection)
        kp = kp - kp[root_index]
        ref = ref - ref[root_index]
        errors.append(np.linalg.norm(kp - ref, axis=1).mean())
    if not errors:
        raise NoPresentFrames("every frame is absent")
    return float(np.mean(errors)) * MM_PER_M, 100.0 * absent / total


def mve(pred_vertices: list[np.ndarray | None], gt_vertices: list[np.ndarray],
        pred_roots: list[np.ndarray] | None = None,
        gt_roots: list[np.ndarray] | None = None) -> float:
    """Mean per-vertex error in mm over present frames after root alignment
    (explicit pelvis positions when given, vertex centroids otherwise)."""
    errors = []
    for k, (pv, gv) in enumerate(zip(pred_vertices, gt_vertices)):
        if pv is None:
            continue
        pv = np.asarray(pv, dtype=np.float64)
        gv = np.asarray(gv, dtype=np.float64)
        if pv.shape != gv.shape:
            raise TopologyMismatch(f"frame {k}: vertex shapes {pv.shape} vs {gv.shape}")
        p_root = pred_roots[k] if pred_roots is not None else pv.mean(axis=0)
        g_root = gt_roots[k] if gt_roots is not None else gv.mean(axis=0)
        errors.append(np.linalg.norm((pv - p_root) - (gv - g_root), axis=1).mean())
    if not errors:
        raise NoPresentFrames("every frame is absent")
    return float(np.mean(errors)) * MM_PER_M


def consolidate_shape(estimates: list[FrameEstimate], strategy: str,
                      body: BodyModel | None = None,
                      a2b_model: a2b_mod.A2BModel | None = None,
                      measurer: Measurer | None = None) -> ShapeParams:
    """One consistent shape for a sequence: the coordinate-wise median of the
    per-frame coefficients, or the median of the per-frame measurements mapped
    through a measurement-to-shape regressor."""
    betas = np.stack([e.beta for e in estimates if e.present]) \
        if any(e.present for e in estimates) else None
    if betas is None:
        raise NoPresentFrames("cannot consolidate: no present frames")
    if strategy == MEDIAN_BETA:
        return ShapeParams(np.median(betas, axis=0))
    if strategy != MEDIAN_MEASUREMENTS_A2B:
        raise InvalidConfig(f"unknown consolidation strategy {strategy!r}")
    if body is None or a2b_model is None:
        raise InvalidConfig("median-measurement consolidation needs a body model and a regressor")
    measurements = b2a_batch(body, betas, measurer)
    return a2b_mod.predict(a2b_model, np.median(measurements, axis=0))


def body_height_sigma_cm(body: BodyModel, estimates: list[FrameEstimate],
                         measurer: Measurer | None = None,
                         height_name: str = "height") -> float:
    """Standard deviation (cm) of the rest-pose body height across frames;
    exactly 0 for frozen shapes (identical betas measure bit-identically)."""
    measurer = measurer or Measurer(body)
    betas = np.stack([e.beta for e in estimates if e.present])
    values = b2a_batch(body, betas, measurer)
    col = measurer.names.index(height_name)
    heights = values[:, col]
    if heights.size < 2 or heights.max() == heights.min():
        return 0.0
    return float(heights.std(ddof=1)) * 0.1


# ---------------------------------------------------------------------------
# replacement experiment
# ---------------------------------------------------------------------------

@dataclass
class ReplacementConfig:
    regressor: str = "joints"
    root_index: int = 0
    a2b_models: list[tuple[str, a2b_mod.A2BModel]] = field(default_factory=list)
    pseudo_gt_measurements: np.ndarray | None = None   # fixed 36-vector (mm)


@dataclass
class ExperimentRow:
    label: str
    mpjpe_mm: float
    no_result_percent: float
    body_height_sigma_cm: float

    def to_json(self) -> dict:
        return {"label": self.label, "mpjpe_mm": self.mpjpe_mm,
                "no_result_percent": self.no_result_percent,
                "body_height_sigma_cm": self.body_height_sigma_cm}


def _swap_betas(estimates: list[FrameEstimate], beta: np.ndarray) -> list[FrameEstimate]:
    out = []
    for e in estimates:
        if not e.present:
            out.append(e)
            continue
        out.append(FrameEstimate(frame_id=e.frame_id, present=True, beta=beta.copy(),
                                 pose=e.pose, translation=e.translation))
    return out


def run_replacement_experiment(body: BodyModel, estimates: list[FrameEstimate],
                               gt_keypoints: dict[int, np.ndarray],
                               cfg: ReplacementConfig) -> list[ExperimentRow]:
    """One row per shape source: the original per-frame shapes, the median
    coefficients, and each regressor fed with pseudo-GT or median
    measurements. Replacement keeps the pose and swaps only the shape."""
    measurer = Measurer(body)

    def row(label, ests):
        err, no_result = mpjpe(ests, gt_keypoints, model=body,
                               regressor=cfg.regressor, root_index=cfg.root_index)
        sigma = body_height_sigma_cm(body, ests, measurer)
        return ExperimentRow(label=label, mpjpe_mm=err, no_result_percent=no_result,
                             body_height_sigma_cm=sigma)

    rows = [row("original", estimates)]
    median_beta = consolidate_shape(estimates, MEDIAN_BETA)
    rows.append(row("median_beta", _swap_betas(estimates, median_beta.beta)))
    for label, model_ in cfg.a2b_models:
        if cfg.pseudo_gt_measurements is not None:
            pred = a2b_mod.predict(model_, cfg.pseudo_gt_measurements)
            rows.append(row(f"{label}_pseudo_gt", _swap_betas(estimates, pred.beta)))
        med = consolidate_shape(estimates, MEDIAN_MEASUREMENTS_A2B, body=body,
                                a2b_model=model_, measurer=measurer)
        rows.append(row(f"{label}_median_am", _swap_betas(estimates, med.beta)))
    return rows


def format_experiment_table(rows: list[ExperimentRow]) -> str:
    lines = [f"{'shape source':<22} {'MPJPE':>9} {'no r.':>7} {'height sigma':>13}"]
    lines.append("-" * len(lines[0]))
    for r in rows:
        lines.append(f"{r.label:<22} {r.mpjpe_mm:>7.2f}mm {r.no_result_percent:>6.2f}% "
                     f"{r.body_height_sigma_cm:>11.3f}cm")
    return "\n".join(lines)


def experiment_report_json(rows: list[ExperimentRow]) -> str:
    return json.dumps({"rows": [r.to_json() for r in rows]}, sort_keys=True, indent=2) + "\n"
