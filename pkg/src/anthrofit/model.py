"""Parametric body model: asset loading, shape blendshapes, forward kinematics
with axis-angle joints, and linear blend skinning.

All geometry is float64 and in meters; millimeters appear only at the
measuring/metric boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bmf
from .errors import (
    DimensionMismatch,
    InvariantViolation,
    NonFiniteInput,
    TensorShapeMismatch,
)

ROOT_SENTINEL = -1

# Expected shape-basis width per gender for full-scale model assets
# (header profile "smplx"); toy assets may use any B >= 1.
STRICT_BETA_DIMS = {"male": 11, "female": 10, "neutral": 16}


@dataclass(frozen=True)
class ShapeParams:
    """Shape-space coefficients (dimensionless PCA weights)."""

    beta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "beta", np.asarray(self.beta, dtype=np.float64).reshape(-1))

    def __len__(self) -> int:
        return self.beta.shape[0]


@dataclass
class PoseParams:
    """Per-joint axis-angle rotations (radians) plus a global rigid transform."""

    global_orient: np.ndarray
    body_pose: np.ndarray  # (J-1, 3)
    translation: np.ndarray

    def __post_init__(self):
        self.global_orient = np.asarray(self.global_orient, dtype=np.float64).reshape(3)
        self.body_pose = np.asarray(self.body_pose, dtype=np.float64).reshape(-1, 3)
        self.translation = np.asarray(self.translation, dtype=np.float64).reshape(3)

    @classmethod
    def identity(cls, num_joints: int) -> "PoseParams":
        return cls(np.zeros(3), np.zeros((num_joints - 1, 3)), np.zeros(3))

    def canonicalized(self) -> "PoseParams":
        return PoseParams(
            canonicalize_axis_angle(self.global_orient),
            np.stack([canonicalize_axis_angle(aa) for aa in self.body_pose]) if len(self.body_pose) else self.body_pose,
            self.translation,
        )


@dataclass
class PosedMesh:
    vertices: np.ndarray  # (V, 3)
    joints: np.ndarray    # (J, 3)


@dataclass
class BodyModel:
    """Immutable model asset; safe to share across threads after loading."""

    gender: str
    beta_dim: int
    vertex_template: np.ndarray        # (V, 3)
    faces: np.ndarray                  # (F, 3) int
    shape_dirs: np.ndarray             # (V, 3, B)
    joint_regressor: np.ndarray        # (J, V)
    parents: np.ndarray                # (J,) int, parents[0] == ROOT_SENTINEL
    skin_weights: np.ndarray           # (V, J)
    landmarks: dict[str, int]
    up_axis: np.ndarray                # unit (3,)
    pose_dirs: np.ndarray | None = None          # (V, 3, 9*(J-1))
    keypoint_regressors: dict[str, np.ndarray] = field(default_factory=dict)
    measurement_specs: list = field(default_factory=list)
    profile: str = "toy"

    @property
    def num_vertices(self) -> int:
        return self.vertex_template.shape[0]

    @property
    def num_joints(self) -> int:
        return self.parents.shape[0]


def canonicalize_axis_angle(aa: np.ndarray) -> np.ndarray:
    """Reduce the rotation angle into (-pi, pi]; the result always has norm < 2*pi."""
    aa = np.asarray(aa, dtype=np.float64)
    theta = np.linalg.norm(aa)
    if theta < 1e-12:
        return aa.copy()
    wrapped = np.mod(theta, 2.0 * np.pi)
    if wrapped > np.pi:
        wrapped -= 2.0 * np.pi
    return aa * (wrapped / theta)


def rodrigues(aa: np.ndarray) -> np.ndarray:
    """Axis-angle (3,) to rotation matrix. Uses the series expansion below
    1e-8 radians where the sin/cos form would divide by ~0."""
    aa = np.asarray(aa, dtype=np.float64)
    theta = np.linalg.norm(aa)
    K = np.array([
        [0.0, -aa[2], aa[1]],
        [aa[2], 0.0, -aa[0]],
        [-aa[1], aa[0], 0.0],
    ])
    if theta < 1e-8:
        return np.eye(3) + K + 0.5 * (K @ K)
    K /= theta
    return np.eye(3) + np.sin(theta) * K + (1.0 - np.cos(theta)) * (K @ K)


def pose_rotations(pose: PoseParams) -> np.ndarray:
    """Stack of local rotation matrices, root first: (J, 3, 3)."""
    rots = [rodrigues(pose.global_orient)]
    rots.extend(rodrigues(aa) for aa in pose.body_pose)
    return np.stack(rots)


def load_model(path: str | Path) -> BodyModel:
    """Load and fully validate a BMF asset. Any invariant violation is an
    error, never a warning."""
    header, tensors = bmf.read_container(path, bmf.MODEL_MAGIC)

    for rec in header["tensors"]:
        if rec["dtype"] not in bmf.ASSET_DTYPES:
            raise TensorShapeMismatch(f"asset tensor {rec['name']!r} uses dtype {rec['dtype']!r}")

    def need(name: str) -> np.ndarray:
        if name not in tensors:
            raise TensorShapeMismatch(f"asset missing required tensor {name!r}")
        return tensors[name]

    v_template = np.asarray(need("v_template"), dtype=np.float64)
    faces = np.asarray(need("faces"), dtype=np.int64)
    shape_dirs = np.asarray(need("shape_dirs"), dtype=np.float64)
    joint_regressor = np.asarray(need("joint_regressor"), dtype=np.float64)
    parents = np.asarray(need("parents"), dtype=np.int64).reshape(-1)
    skin_weights = np.asarray(need("skin_weights"), dtype=np.float64)

    if v_template.ndim != 2 or v_template.shape[1] != 3:
        raise TensorShapeMismatch(f"v_template must be (V, 3), got {v_template.shape}")
    num_v = v_template.shape[0]
    if faces.ndim != 2 or faces.shape[1] != 3:
        raise TensorShapeMismatch(f"faces must be (F, 3), got {faces.shape}")
    if shape_dirs.ndim != 3 or shape_dirs.shape[:2] != (num_v, 3):
        raise TensorShapeMismatch(f"shape_dirs must be (V, 3, B), got {shape_dirs.shape}")
    beta_dim = shape_dirs.shape[2]
    num_j = parents.shape[0]
    if joint_regressor.shape != (num_j, num_v):
        raise TensorShapeMismatch(
            f"joint_regressor must be (J, V) = {(num_j, num_v)}, got {joint_regressor.shape}")
    if skin_weights.shape != (num_v, num_j):
        raise TensorShapeMismatch(
            f"skin_weights must be (V, J) = {(num_v, num_j)}, got {skin_weights.shape}")

    pose_dirs = None
    if "pose_dirs" in tensors:
        pose_dirs = np.asarray(tensors["pose_dirs"], dtype=np.float64)
        if pose_dirs.shape != (num_v, 3, 9 * (num_j - 1)):
            raise TensorShapeMismatch(
                f"pose_dirs must be (V, 3, {9 * (num_j - 1)}), got {pose_dirs.shape}")

    kpr = {}
    for name, arr in tensors.items():
        if name.startswith("kpr_"):
            reg = np.asarray(arr, dtype=np.float64)
            if reg.ndim != 2 or reg.shape[1] != num_v:
                raise TensorShapeMismatch(f"{name} must be (K, V), got {reg.shape}")
            kpr[name[len("kpr_"):]] = reg

    gender = header.get("gender", "neutral")
    if gender not in ("male", "female", "neutral"):
        raise InvariantViolation(f"unknown gender {gender!r}")
    declared_b = header.get("beta_dim")
    if declared_b is not None and declared_b != beta_dim:
        raise TensorShapeMismatch(
            f"header beta_dim {declared_b} != shape_dirs width {beta_dim}")
    profile = header.get("profile", "toy")
    if profile == "smplx" and beta_dim != STRICT_BETA_DIMS[gender]:
        raise InvariantViolation(
            f"{gender} smplx-profile asset must have beta_dim {STRICT_BETA_DIMS[gender]}, got {beta_dim}")
    if beta_dim < 1:
        raise InvariantViolation("beta_dim must be >= 1")

    # kinematic tree: topologically ordered, rooted at joint 0
    if parents[0] != ROOT_SENTINEL:
        raise InvariantViolation(f"parents[0] must be the root sentinel {ROOT_SENTINEL}")
    for j in range(1, num_j):
        if not 0 <= parents[j] < j:
            raise InvariantViolation(
                f"parents[{j}] = {parents[j]} breaks topological order (need 0 <= p < {j})")

    if np.any(skin_weights < -1e-9):
        raise InvariantViolation("skin weights must be non-negative")
    row_sums = skin_weights.sum(axis=1)
    bad = np.abs(row_sums - 1.0) > 1e-6
    if np.any(bad):
        v = int(np.argmax(bad))
        raise InvariantViolation(f"skin-weight row {v} sums to {row_sums[v]:.8f}, expected 1")
    # f32 storage leaves row sums ~1e-7 off; renormalize so the identity-pose
    # skinning fixed point holds to f64 precision
    skin_weights = skin_weights / row_sums[:, None]

    reg_sums = joint_regressor.sum(axis=1)
    if np.any(np.abs(reg_sums - 1.0) > 1e-4) or np.any(joint_regressor < -1e-6):
        raise InvariantViolation("joint_regressor rows must be convex combinations of vertices")
    joint_regressor = joint_regressor / reg_sums[:, None]

    if faces.size and (faces.min() < 0 or faces.max() >= num_v):
        raise InvariantViolation("face vertex index out of range")

    landmarks = {str(k): int(v) for k, v in header.get("landmarks", {}).items()}
    for name, idx in landmarks.items():
        if not 0 <= idx < num_v:
            raise InvariantViolation(f"landmark {name!r} index {idx} out of range")

    up_axis = np.asarray(header.get("up_axis", [0.0, 1.0, 0.0]), dtype=np.float64).reshape(3)
    norm = np.linalg.norm(up_axis)
    if not 0.9 < norm < 1.1:
        raise InvariantViolation(f"up_axis must be a unit vector, |u| = {norm:.4f}")
    up_axis = up_axis / norm

    from .measure import parse_measurement_specs  # late import (measure depends on this module)

    specs = parse_measurement_specs(header.get("measurements", []), landmarks)
    if header.get("measurement_table", "custom") == "anthro36":
        from .measure import validate_full_table

        validate_full_table(specs)

    model = BodyModel(
        gender=gender,
        beta_dim=beta_dim,
        vertex_template=v_template,
        faces=faces,
        shape_dirs=shape_dirs,
        joint_regressor=joint_regressor,
        parents=parents,
        skin_weights=skin_weights,
        landmarks=landmarks,
        up_axis=up_axis,
        pose_dirs=pose_dirs,
        keypoint_regressors=kpr,
        measurement_specs=specs,
        profile=profile,
    )
    return model


def _check_beta(model: BodyModel, shape: ShapeParams) -> np.ndarray:
    beta = shape.beta
    if beta.shape[0] != model.beta_dim:
        raise DimensionMismatch(
            f"beta has length {beta.shape[0]}, model expects {model.beta_dim}")
    if not np.all(np.isfinite(beta)):
        raise NonFiniteInput("beta contains non-finite values")
    return beta


def shaped_template(model: BodyModel, shape: ShapeParams) -> PosedMesh:
    """Rest mesh for the given shape coefficients: template plus the linear
    shape blendshapes, joints regressed from the result. This is the T-pose;
    no pose correctives, identity pose."""
    beta = _check_beta(model, shape)
    vertices = model.vertex_template + model.shape_dirs @ beta
    joints = model.joint_regressor @ vertices
    return PosedMesh(vertices=vertices, joints=joints)


def shaped_vertices_batch(model: BodyModel, betas: np.ndarray) -> np.ndarray:
    """Vectorized rest vertices for a batch of shapes: (N, B) -> (N, V, 3)."""
    betas = np.asarray(betas, dtype=np.float64)
    if betas.ndim != 2 or betas.shape[1] != model.beta_dim:
        raise DimensionMismatch(f"betas must be (N, {model.beta_dim}), got {betas.shape}")
    if not np.all(np.isfinite(betas)):
        raise NonFiniteInput("betas contain non-finite values")
    return model.vertex_template[None] + np.einsum("vib,nb->nvi", model.shape_dirs, betas)


def forward_kinematics(parents: np.ndarray, rest_joints: np.ndarray,
                       rots: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Compose local rotations along the tree.

    Returns (G, t): per-joint world rotations (J, 3, 3) and world joint
    positions (J, 3) before translation.
    """
    num_j = parents.shape[0]
    G = np.empty((num_j, 3, 3))
    t = np.empty((num_j, 3))
    G[0] = rots[0]
    t[0] = rest_joints[0]
    for j in range(1, num_j):
        p = parents[j]
        G[j] = G[p] @ rots[j]
        t[j] = t[p] + G[p] @ (rest_joints[j] - rest_joints[p])
    return G, t


def _forward_arrays(model: BodyModel, beta: np.ndarray, rots: np.ndarray,
                    translation: np.ndarray) -> dict:
    """Full pipeline with all intermediates exposed (the IK gradients reuse
    them): shape blendshapes, optional pose correctives, rest joints from the
    shaped template, FK, LBS, translation."""
    v_shaped = model.vertex_template + model.shape_dirs @ beta
    rest_joints = model.joint_regressor @ v_shaped

    pose_feat = None
    v_posedirs = v_shaped
    if model.pose_dirs is not None and model.num_joints > 1:
        pose_feat = (rots[1:] - np.eye(3)).reshape(-1)
        v_posedirs = v_shaped + model.pose_dirs @ pose_feat

    G, t = forward_kinematics(model.parents, rest_joints, rots)

    # blended transform: x_v = (sum_j w_vj G_j) v + sum_j w_vj (t_j - G_j Jr_j)
    A = np.einsum("vj,jab->vab", model.skin_weights, G)
    shift = model.skin_weights @ (t - np.einsum("jab,jb->ja", G, rest_joints))
    vertices = np.einsum("vab,vb->va", A, v_posedirs) + shift + translation
    joints = t + translation
    return {
        "v_shaped": v_shaped,
        "v_posedirs": v_posedirs,
        "pose_feat": pose_feat,
        "rest_joints": rest_joints,
        "G": G,
        "t": t,
        "blend": A,
        "vertices": vertices,
        "joints": joints,
    }


def forward(model: BodyModel, shape: ShapeParams, pose: PoseParams) -> PosedMesh:
    """Pose the shaped mesh: pose blendshapes (when the asset carries them),
    forward kinematics along the parent tree, linear blend skinning, and the
    global translation. Returned joints are the posed joints."""
    beta = _check_beta(model, shape)
    if pose.body_pose.shape != (model.num_joints - 1, 3):
        raise DimensionMismatch(
            f"body_pose must be ({model.num_joints - 1}, 3), got {pose.body_pose.shape}")
    packed = np.concatenate([pose.global_orient, pose.body_pose.reshape(-1), pose.translation])
    if not np.all(np.isfinite(packed)):
        raise NonFiniteInput("pose contains non-finite values")
    rots = pose_rotations(pose)
    out = _forward_arrays(model, beta, rots, pose.translation)
    return PosedMesh(vertices=out["vertices"], joints=out["joints"])


def regress_points(matrix: np.ndarray, vertices: np.ndarray) -> np.ndarray:
    """Linear point regressor: (K, V) @ (V, 3) -> (K, 3). Used both for model
    joints and for dataset-specific keypoint definitions."""
    matrix = np.asarray(matrix, dtype=np.float64)
    vertices = np.asarray(vertices, dtype=np.float64)
    if matrix.ndim != 2 or vertices.ndim != 2 or vertices.shape[1] != 3:
        raise DimensionMismatch(
            f"need (K, V) regressor and (V, 3) vertices, got {matrix.shape} and {vertices.shape}")
    if matrix.shape[1] != vertices.shape[0]:
        raise DimensionMismatch(
            f"regressor has {matrix.shape[1]} columns, mesh has {vertices.shape[0]} vertices")
    return matrix @ vertices
