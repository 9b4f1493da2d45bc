"""Deterministic toy model assets for tests and demos. No external or
licensed files are needed anywhere in the test suite; everything is generated
here, bit-identically on every run.

Three assets:

* ``cylinder16`` - a 16-gon tube, 2 joints, 2 shape dims (radial, axial).
* ``arm2``       - a 2-joint arm tube for hinge/FK checks, optional pose
                   correctives.
* ``human``      - a bilaterally symmetric tube-person with the full
                   43-landmark table and all 36 measurements (23 lengths,
                   13 circumferences). Shape dims: stature, girth,
                   limb length, torso girth.

Ring segment counts are multiples of 4 so the front (+z), back, top and
lateral vertices fall exactly on the sample grid; measuring planes then pass
exactly through mesh rings and the expected circumferences have closed forms.
"""

from __future__ import annotations

import numpy as np

from . import bmf

UP = (0.0, 1.0, 0.0)


class _MeshBuilder:
    def __init__(self, num_joints: int, beta_dim: int):
        self.num_joints = num_joints
        self.beta_dim = beta_dim
        self.verts: list[np.ndarray] = []
        self.faces: list[tuple[int, int, int]] = []
        self.skin: list[np.ndarray] = []
        self.dirs: list[np.ndarray] = []   # per-vertex (3, B) shape offsets
        self.landmarks: dict[str, int] = {}

    def add_vertex(self, pos, weights: dict[int, float], dirs: np.ndarray) -> int:
        w = np.zeros(self.num_joints)
        for j, val in weights.items():
            w[j] = val
        self.verts.append(np.asarray(pos, dtype=np.float64))
        self.skin.append(w)
        self.dirs.append(np.asarray(dirs, dtype=np.float64))
        return len(self.verts) - 1

    def add_ring(self, center, half_x: float, half_z: float, segments: int,
                 weights: dict[int, float], dir_fn) -> list[int]:
        """Horizontal elliptical ring around ``center``; dir_fn(pos) -> (3, B)."""
        cx, cy, cz = center
        idx = []
        for k in range(segments):
            phi = 2.0 * np.pi * k / segments
            pos = np.array([cx + half_x * np.cos(phi), cy, cz + half_z * np.sin(phi)])
            idx.append(self.add_vertex(pos, weights, dir_fn(pos)))
        return idx

    def add_ring_x(self, center, radius: float, segments: int,
                   weights: dict[int, float], dir_fn) -> list[int]:
        """Ring in the y-z plane (tube running along x); index 0 is the top."""
        cx, cy, cz = center
        idx = []
        for k in range(segments):
            phi = 2.0 * np.pi * k / segments
            pos = np.array([cx, cy + radius * np.cos(phi), cz + radius * np.sin(phi)])
            idx.append(self.add_vertex(pos, weights, dir_fn(pos)))
        return idx

    def join_rings(self, a: list[int], b: list[int]) -> None:
        n = len(a)
        for k in range(n):
            k1 = (k + 1) % n
            self.faces.append((a[k], a[k1], b[k]))
            self.faces.append((a[k1], b[k1], b[k]))

    def fan(self, apex: int, ring: list[int], flip: bool = False) -> None:
        n = len(ring)
        for k in range(n):
            k1 = (k + 1) % n
            tri = (apex, ring[k1], ring[k]) if flip else (apex, ring[k], ring[k1])
            self.faces.append(tri)

    def tensors(self, joint_rings: list[list[int]], parents: list[int]) -> dict[str, np.ndarray]:
        verts = np.stack(self.verts)
        regressor = np.zeros((self.num_joints, verts.shape[0]))
        for j, ring in enumerate(joint_rings):
            regressor[j, ring] = 1.0 / len(ring)
        return {
            "v_template": verts.astype(np.float32),
            "faces": np.asarray(self.faces, dtype=np.int32),
            "shape_dirs": np.stack(self.dirs).astype(np.float32),
            "joint_regressor": regressor.astype(np.float32),
            "parents": np.asarray(parents, dtype=np.int32),
            "skin_weights": np.stack(self.skin).astype(np.float32),
        }


def _spec_length(index: int, name: str, a, b, vertical: bool = False) -> dict:
    kind = "length_vertical" if vertical else "length_euclidean"
    return {"index": index, "name": name, "kind": kind,
            "endpoints": [a if isinstance(a, list) else [a],
                          b if isinstance(b, list) else [b]]}


def _spec_circ(index: int, name: str, position, joints: list[int],
               normal="up", slab=None) -> dict:
    return {"index": index, "name": name, "kind": "circumference",
            "plane": {"position": position if isinstance(position, list) else [position],
                      "normal": normal},
            "submesh": {"joints": joints, "slab": slab}}


# ---------------------------------------------------------------------------
# cylinder16: V = 34 (2 rings of 16 + 2 cap centers), J = 2, B = 2
# ---------------------------------------------------------------------------

CYLINDER_RADIUS = 0.1
CYLINDER_HEIGHT = 1.0
CYLINDER_SEGMENTS = 16


def build_cylinder() -> tuple[dict, dict[str, np.ndarray]]:
    b = _MeshBuilder(num_joints=2, beta_dim=2)

    def dirs(pos):
        # dim 0: unit radial in the horizontal plane; dim 1: axial stretch
        r = np.hypot(pos[0], pos[2])
        radial = np.array([pos[0] / r, 0.0, pos[2] / r]) if r > 1e-12 else np.zeros(3)
        axial = np.array([0.0, pos[1] / CYLINDER_HEIGHT, 0.0])
        return np.column_stack([radial, axial])

    ring0 = b.add_ring((0, 0.0, 0), CYLINDER_RADIUS, CYLINDER_RADIUS, CYLINDER_SEGMENTS,
                       {0: 1.0}, dirs)
    ring1 = b.add_ring((0, CYLINDER_HEIGHT, 0), CYLINDER_RADIUS, CYLINDER_RADIUS,
                       CYLINDER_SEGMENTS, {1: 1.0}, dirs)
    b.join_rings(ring0, ring1)
    bottom = b.add_vertex((0, 0.0, 0), {0: 1.0}, dirs(np.array([0, 0.0, 0])))
    top = b.add_vertex((0, CYLINDER_HEIGHT, 0), {1: 1.0}, dirs(np.array([0, CYLINDER_HEIGHT, 0])))
    b.fan(bottom, ring0, flip=True)
    b.fan(top, ring1)
    b.landmarks["bottom_center"] = bottom
    b.landmarks["top_center"] = top

    header = {
        "version": 1,
        "gender": "neutral",
        "beta_dim": 2,
        "up_axis": list(UP),
        "profile": "toy",
        "measurement_table": "custom",
        "landmarks": b.landmarks,
        "measurements": [
            _spec_length(1, "height", "top_center", "bottom_center", vertical=True),
            _spec_circ(2, "waist_circ", ["top_center", "bottom_center"], [0, 1]),
        ],
    }
    return header, b.tensors([[bottom], [top]], [-1, 0])


# ---------------------------------------------------------------------------
# arm2: straight tube along +x with a hinge joint at the middle
# ---------------------------------------------------------------------------

ARM2_LENGTH = 0.6
ARM2_RADIUS = 0.05
ARM2_SEGMENTS = 8
ARM2_RING_XS = (0.0, 0.15, 0.3, 0.45, 0.6)


def build_arm(with_pose_dirs: bool = False) -> tuple[dict, dict[str, np.ndarray]]:
    b = _MeshBuilder(num_joints=2, beta_dim=2)

    def dirs(pos):
        r = np.hypot(pos[1], pos[2])
        radial = np.array([0.0, pos[1] / r, pos[2] / r]) if r > 1e-12 else np.zeros(3)
        axial = np.array([pos[0] / ARM2_LENGTH, 0.0, 0.0])
        return np.column_stack([radial, axial])

    rings = []
    for x in ARM2_RING_XS:
        w = {0: 1.0} if x < 0.3 else {1: 1.0}  # rigid halves for closed-form hinge checks
        rings.append(b.add_ring_x((x, 0, 0), ARM2_RADIUS, ARM2_SEGMENTS, w, dirs))
    for a, c in zip(rings[:-1], rings[1:]):
        b.join_rings(a, c)
    base = b.add_vertex((0.0, 0, 0), {0: 1.0}, dirs(np.array([0.0, 0, 0])))
    tip = b.add_vertex((ARM2_LENGTH, 0, 0), {1: 1.0}, dirs(np.array([ARM2_LENGTH, 0, 0])))
    b.fan(base, rings[0], flip=True)
    b.fan(tip, rings[-1])
    b.landmarks["base_center"] = base
    b.landmarks["tip_center"] = tip
    b.landmarks["mid_top"] = rings[1][0]   # top vertex of the ring at x = 0.15

    tensors = b.tensors([rings[0], rings[2]], [-1, 0])
    if with_pose_dirs:
        # small deterministic correctives; magnitude keeps the mesh sane
        num_v = tensors["v_template"].shape[0]
        grid = np.arange(num_v * 3 * 9, dtype=np.float64).reshape(num_v, 3, 9)
        tensors["pose_dirs"] = (0.002 * np.sin(grid)).astype(np.float32)

    header = {
        "version": 1,
        "gender": "neutral",
        "beta_dim": 2,
        "up_axis": list(UP),
        "profile": "toy",
        "measurement_table": "custom",
        "landmarks": b.landmarks,
        "measurements": [
            _spec_length(1, "arm_length", "base_center", "tip_center"),
            _spec_circ(2, "upper_circ", "mid_top", [0, 1],
                       normal={"from": ["base_center"], "to": ["tip_center"]}),
        ],
    }
    return header, tensors


# ---------------------------------------------------------------------------
# toy human
# ---------------------------------------------------------------------------

# joint ids
PELVIS, SPINE, NECK, HEAD = 0, 1, 2, 3
L_HIP, R_HIP, L_KNEE, R_KNEE, L_ANKLE, R_ANKLE = 4, 5, 6, 7, 8, 9
L_SHOULDER, R_SHOULDER, L_ELBOW, R_ELBOW, L_WRIST, R_WRIST = 10, 11, 12, 13, 14, 15
HUMAN_PARENTS = [-1, 0, 1, 2, 0, 0, 4, 5, 6, 7, 1, 1, 10, 11, 12, 13]
HUMAN_JOINT_NAMES = (
    "pelvis", "spine", "neck", "head",
    "l_hip", "r_hip", "l_knee", "r_knee", "l_ankle", "r_ankle",
    "l_shoulder", "r_shoulder", "l_elbow", "r_elbow", "l_wrist", "r_wrist",
)

# (y, half_x, half_z) torso rings, pubic level to neck base
TORSO_RINGS = [
    (0.84, 0.155, 0.105),
    (0.92, 0.160, 0.110),
    (1.02, 0.135, 0.095),
    (1.13, 0.140, 0.100),
    (1.24, 0.150, 0.105),
    (1.40, 0.130, 0.095),
    (1.42, 0.125, 0.085),
]
# (y, radius) neck + head rings
HEAD_RINGS = [(1.42, 0.060), (1.47, 0.058), (1.52, 0.068),
              (1.60, 0.085), (1.64, 0.082), (1.70, 0.060)]
HEAD_TOP_Y = 1.74
# (y, radius) leg rings, hip to ankle
LEG_RINGS = [(0.92, 0.085), (0.72, 0.080), (0.48, 0.060), (0.30, 0.065), (0.08, 0.045)]
LEG_X = 0.09
# (x, radius) arm rings, shoulder to wrist (left side; the right is mirrored)
ARM_RINGS = [(0.17, 0.055), (0.25, 0.050), (0.35, 0.045),
             (0.45, 0.042), (0.55, 0.035), (0.62, 0.030)]
ARM_Y = 1.44
HAND_RINGS = [(0.66, 0.028), (0.73, 0.025)]
HAND_TIP_X = 0.80
FOOT_SECTIONS = (-0.05, 0.02, 0.10, 0.15)   # z stations: heel .. toe
FOOT_HALF_W = 0.045
FOOT_HEIGHT = 0.06

SEG = 12            # segments for round parts; front (+z) = 3, back = 9
HAND_SEG = 8
FRONT = SEG // 4
BACK = 3 * SEG // 4

STATURE_GAIN = 0.05
GIRTH_GAIN = 0.008
LIMB_GAIN = 0.04
TORSO_GAIN = 0.008


def _human_dirs(pos: np.ndarray, part: str, side: float, scale: float) -> np.ndarray:
    """Per-vertex shape offsets (3, 4): stature, girth, limb length, torso girth."""
    x, y, z = pos
    stature = STATURE_GAIN * pos

    def radial_xz(cx):
        r = np.hypot(x - cx, z)
        return np.array([(x - cx) / r, 0.0, z / r]) if r > 1e-12 else np.zeros(3)

    if part in ("torso", "headneck"):
        girth = GIRTH_GAIN * radial_xz(0.0)
    elif part == "leg":
        girth = GIRTH_GAIN * radial_xz(side * LEG_X * scale)
    elif part in ("arm", "hand"):
        r = np.hypot(y - ARM_Y * scale, z)
        girth = (GIRTH_GAIN * np.array([0.0, (y - ARM_Y * scale) / r, z / r])
                 if r > 1e-12 else np.zeros(3))
    else:
        girth = np.zeros(3)

    if part in ("arm", "hand"):
        limb = np.array([np.sign(x) * LIMB_GAIN * max(abs(x) - ARM_RINGS[0][0] * scale, 0.0),
                         0.0, 0.0])
    elif part in ("leg", "foot"):
        limb = np.array([0.0, -LIMB_GAIN * (LEG_RINGS[0][0] * scale - y), 0.0])
    else:
        limb = np.zeros(3)

    torso = TORSO_GAIN * radial_xz(0.0) if part == "torso" else np.zeros(3)
    return np.column_stack([stature, girth, limb, torso])


def build_human(gender: str = "neutral") -> tuple[dict, dict[str, np.ndarray]]:
    # the female variant shares topology but is scaled down with a wider pelvis
    scale = {"neutral": 1.0, "male": 1.0, "female": 0.94}[gender]
    hip_extra = 1.06 if gender == "female" else 1.0

    b = _MeshBuilder(num_joints=16, beta_dim=4)

    def torso_weights(y):
        if y <= 0.92 * scale:
            return {PELVIS: 1.0}
        if y <= 1.24 * scale:
            t = (y - 0.92 * scale) / (0.32 * scale)
            return {PELVIS: 1.0 - t, SPINE: t}
        t = min((y - 1.24 * scale) / (0.18 * scale), 1.0)
        return {SPINE: 1.0 - 0.45 * t, NECK: 0.45 * t}   # capped: torso stays spine-dominant

    def headneck_weights(y):
        t = min(max((y - 1.42 * scale) / (0.18 * scale), 0.0), 1.0)
        return {NECK: 1.0 - t, HEAD: t}

    def leg_weights(y, hip, knee, ankle):
        if y >= 0.48 * scale:
            t = min((0.92 * scale - y) / (0.44 * scale), 1.0)
            return {hip: 1.0 - t, knee: t}
        t = min((0.48 * scale - y) / (0.40 * scale), 1.0)
        return {knee: 1.0 - t, ankle: t}

    def arm_weights(ax, shoulder, elbow, wrist):
        if ax <= 0.35 * scale:
            t = max((ax - 0.17 * scale) / (0.18 * scale), 0.0)
            return {shoulder: 1.0 - t, elbow: t}
        t = min((ax - 0.35 * scale) / (0.27 * scale), 1.0)
        return {elbow: 1.0 - t, wrist: t}

    # --- torso ---
    torso_rings = []
    for y, hx, hz in TORSO_RINGS:
        hx = hx * scale * (hip_extra if y <= 0.93 else 1.0)
        ring = b.add_ring((0, y * scale, 0), hx, hz * scale, SEG,
                          torso_weights(y * scale),
                          lambda p: _human_dirs(p, "torso", 0.0, scale))
        torso_rings.append(ring)
    for a, c in zip(torso_rings[:-1], torso_rings[1:]):
        b.join_rings(a, c)

    b.landmarks["pubic_bone"] = torso_rings[0][FRONT]
    b.landmarks["trochanterion_l"] = torso_rings[1][0]
    b.landmarks["trochanterion_r"] = torso_rings[1][SEG // 2]
    b.landmarks["belly_button"] = torso_rings[2][FRONT]
    b.landmarks["back_belly_button"] = torso_rings[2][BACK]
    b.landmarks["nipple"] = torso_rings[4][FRONT]
    b.landmarks["suprasternale"] = torso_rings[5][FRONT]
    b.landmarks["cervicale"] = torso_rings[6][BACK]

    # --- neck + head ---
    head_rings = []
    for y, r in HEAD_RINGS:
        ring = b.add_ring((0, y * scale, 0), r * scale, r * scale, SEG,
                          headneck_weights(y * scale),
                          lambda p: _human_dirs(p, "headneck", 0.0, scale))
        head_rings.append(ring)
    for a, c in zip(head_rings[:-1], head_rings[1:]):
        b.join_rings(a, c)
    head_top = b.add_vertex((0, HEAD_TOP_Y * scale, 0), {HEAD: 1.0},
                            _human_dirs(np.array([0, HEAD_TOP_Y * scale, 0]),
                                        "headneck", 0.0, scale))
    b.fan(head_top, head_rings[-1])
    b.landmarks["adams_apple"] = head_rings[1][FRONT]
    b.landmarks["chin"] = head_rings[2][FRONT]
    b.landmarks["ear_center_l"] = head_rings[3][0]
    b.landmarks["ear_center_r"] = head_rings[3][SEG // 2]
    b.landmarks["head_temple"] = head_rings[4][0]
    b.landmarks["head_top"] = head_top

    # --- legs ---
    leg_rings: dict[str, list[list[int]]] = {}
    for side, name, hip, knee, ankle in ((1.0, "l", L_HIP, L_KNEE, L_ANKLE),
                                         (-1.0, "r", R_HIP, R_KNEE, R_ANKLE)):
        rings = []
        for y, r in LEG_RINGS:
            ring = b.add_ring((side * LEG_X * scale, y * scale, 0), r * scale, r * scale,
                              SEG, leg_weights(y * scale, hip, knee, ankle),
                              lambda p, s=side: _human_dirs(p, "leg", s, scale))
            rings.append(ring)
        for a, c in zip(rings[:-1], rings[1:]):
            b.join_rings(a, c)
        leg_rings[name] = rings
        b.landmarks[f"thigh_center_{name}"] = rings[1][FRONT]
        b.landmarks[f"knee_cap_{name}"] = rings[2][FRONT]
        b.landmarks[f"calf_widest_{name}"] = rings[3][FRONT]
        b.landmarks[f"ankle_{name}"] = rings[4][FRONT]

    # --- feet ---
    for side, name, ankle in ((1.0, "l", L_ANKLE), (-1.0, "r", R_ANKLE)):
        cx = side * LEG_X * scale
        sections = []
        for z in FOOT_SECTIONS:
            quad = []
            for dx, dy in ((-FOOT_HALF_W, 0.0), (FOOT_HALF_W, 0.0),
                           (FOOT_HALF_W, FOOT_HEIGHT), (-FOOT_HALF_W, FOOT_HEIGHT)):
                pos = np.array([cx + dx * scale, dy * scale, z * scale])
                quad.append(b.add_vertex(pos, {ankle: 1.0},
                                         _human_dirs(pos, "foot", side, scale)))
            sections.append(quad)
        for a, c in zip(sections[:-1], sections[1:]):
            b.join_rings(a, c)
        inner = 0 if side > 0 else 1   # bottom corner closest to the body midline
        outer = 1 - inner
        b.landmarks[f"heel_{name}"] = sections[0][inner]
        b.landmarks[f"ball_{name}"] = sections[2][inner]
        b.landmarks[f"big_toe_{name}"] = sections[3][inner]
        b.landmarks[f"small_toe_{name}"] = sections[3][outer]

    # --- arms + hands (hand tube is a separate open part) ---
    arm_rings: dict[str, list[list[int]]] = {}
    for side, name, shoulder, elbow, wrist in ((1.0, "l", L_SHOULDER, L_ELBOW, L_WRIST),
                                               (-1.0, "r", R_SHOULDER, R_ELBOW, R_WRIST)):
        rings = []
        for x, r in ARM_RINGS:
            ring = b.add_ring_x((side * x * scale, ARM_Y * scale, 0), r * scale, SEG,
                                arm_weights(x * scale, shoulder, elbow, wrist),
                                lambda p, s=side: _human_dirs(p, "arm", s, scale))
            rings.append(ring)
        for a, c in zip(rings[:-1], rings[1:]):
            b.join_rings(a, c)
        hand = []
        for x, r in HAND_RINGS:
            ring = b.add_ring_x((side * x * scale, ARM_Y * scale, 0), r * scale, HAND_SEG,
                                {wrist: 1.0},
                                lambda p, s=side: _human_dirs(p, "hand", s, scale))
            hand.append(ring)
        for a, c in zip(hand[:-1], hand[1:]):
            b.join_rings(a, c)
        tip_pos = np.array([side * HAND_TIP_X * scale, ARM_Y * scale, 0])
        tip = b.add_vertex(tip_pos, {wrist: 1.0}, _human_dirs(tip_pos, "hand", side, scale))
        b.fan(tip, hand[-1])
        arm_rings[name] = rings
        b.landmarks[f"acromion_{name}"] = rings[0][0]            # top vertex
        b.landmarks[f"bicep_center_{name}"] = rings[1][FRONT]
        b.landmarks[f"elbow_{name}"] = rings[2][FRONT]
        b.landmarks[f"forearm_widest_{name}"] = rings[3][FRONT]
        b.landmarks[f"wrist_{name}"] = rings[4][0]
        b.landmarks[f"stylion_{name}"] = rings[5][SEG // 2]      # bottom of the wrist

        b.landmarks[f"finger_valley_{name}"] = tip

    joint_rings = [
        torso_rings[1],                 # pelvis
        torso_rings[4],                 # spine
        torso_rings[6],                 # neck
        head_rings[3],                  # head
        leg_rings["l"][0], leg_rings["r"][0],
        leg_rings["l"][2], leg_rings["r"][2],
        leg_rings["l"][4], leg_rings["r"][4],
        arm_rings["l"][0], arm_rings["r"][0],
        arm_rings["l"][2], arm_rings["r"][2],
        arm_rings["l"][4], arm_rings["r"][4],
    ]
    tensors = b.tensors(joint_rings, HUMAN_PARENTS)
    tensors["kpr_joints"] = tensors["joint_regressor"].copy()

    measurements = [
        _spec_length(1, "shoulder_width", "acromion_l", "acromion_r"),
        _spec_length(2, "back_torso_height", "cervicale", "back_belly_button", vertical=True),
        _spec_length(3, "front_torso_height", "suprasternale", "belly_button", vertical=True),
        _spec_length(4, "head_length", "head_top", "cervicale"),
        _spec_length(5, "midline_neck", "chin", "suprasternale"),
        _spec_length(6, "lateral_neck", ["ear_center_l", "ear_center_r"], "cervicale"),
        _spec_length(7, "height", "head_top", ["heel_l", "heel_r"], vertical=True),
        _spec_length(8, "hand_r", "finger_valley_r", "stylion_r"),
        _spec_length(9, "hand_l", "finger_valley_l", "stylion_l"),
        _spec_length(10, "arm_r", "acromion_r", "wrist_r"),
        _spec_length(11, "arm_l", "acromion_l", "wrist_l"),
        _spec_length(12, "forearm_r", "elbow_r", "stylion_r"),
        _spec_length(13, "forearm_l", "elbow_l", "stylion_l"),
        _spec_length(14, "thigh_r", "trochanterion_r", "knee_cap_r"),
        _spec_length(15, "thigh_l", "trochanterion_l", "knee_cap_l"),
        _spec_length(16, "calf_r", "knee_cap_r", "ankle_r"),
        _spec_length(17, "calf_l", "knee_cap_l", "ankle_l"),
        _spec_length(18, "foot_width_r", "small_toe_r", "big_toe_r"),
        _spec_length(19, "foot_width_l", "small_toe_l", "big_toe_l"),
        _spec_length(20, "heel_to_ball_r", "heel_r", "ball_r"),
        _spec_length(21, "heel_to_ball_l", "heel_l", "ball_l"),
        _spec_length(22, "heel_to_toe_r", "heel_r", "big_toe_r"),
        _spec_length(23, "heel_to_toe_l", "heel_l", "big_toe_l"),
        _spec_circ(24, "waist_circ", "belly_button", [PELVIS, SPINE]),
        _spec_circ(25, "chest_circ", "nipple", [PELVIS, SPINE]),
        _spec_circ(26, "hip_circ", "pubic_bone", [PELVIS]),
        _spec_circ(27, "head_circ", "head_temple", [HEAD]),
        _spec_circ(28, "neck_circ", "adams_apple", [NECK, HEAD],
                   normal={"from": ["suprasternale"], "to": ["chin"]}),
        _spec_circ(29, "upper_arm_circ_r", "bicep_center_r", [R_SHOULDER, R_ELBOW],
                   normal={"from": ["acromion_r"], "to": ["elbow_r"]}),
        _spec_circ(30, "upper_arm_circ_l", "bicep_center_l", [L_SHOULDER, L_ELBOW],
                   normal={"from": ["acromion_l"], "to": ["elbow_l"]}),
        _spec_circ(31, "forearm_circ_r", "forearm_widest_r", [R_ELBOW, R_WRIST],
                   normal={"from": ["elbow_r"], "to": ["wrist_r"]}),
        _spec_circ(32, "forearm_circ_l", "forearm_widest_l", [L_ELBOW, L_WRIST],
                   normal={"from": ["elbow_l"], "to": ["wrist_l"]}),
        _spec_circ(33, "thigh_circ_r", "thigh_center_r", [R_HIP, R_KNEE]),
        _spec_circ(34, "thigh_circ_l", "thigh_center_l", [L_HIP, L_KNEE]),
        _spec_circ(35, "calf_circ_r", "calf_widest_r", [R_KNEE, R_ANKLE]),
        _spec_circ(36, "calf_circ_l", "calf_widest_l", [L_KNEE, L_ANKLE]),
    ]

    header = {
        "version": 1,
        "gender": gender,
        "beta_dim": 4,
        "up_axis": list(UP),
        "profile": "toy",
        "measurement_table": "anthro36",
        "landmarks": b.landmarks,
        "measurements": measurements,
        "joint_names": list(HUMAN_JOINT_NAMES),
        "keypoint_meta": {"joints": {"pelvis": 0, "neck": 2, "l_hip": 4, "r_hip": 5}},
    }
    return header, tensors


_BUILDERS = {
    "cylinder": build_cylinder,
    "arm": build_arm,
    "human": build_human,
}


def write_toy_asset(kind: str, path, **kwargs) -> None:
    if kind not in _BUILDERS:
        raise ValueError(f"unknown toy asset kind {kind!r}; choose from {sorted(_BUILDERS)}")
    header, tensors = _BUILDERS[kind](**kwargs)
    bmf.write_container(path, bmf.MODEL_MAGIC, header, tensors)
