import numpy as np
import pytest

from anthrofit import bmf, fixtures, model
from anthrofit.errors import DimensionMismatch, InvariantViolation, NonFiniteInput
from conftest import random_pose


def _aa_from_matrix(R):
    # inverse Rodrigues for test use only (angle < pi)
    angle = np.arccos(np.clip((np.trace(R) - 1.0) / 2.0, -1.0, 1.0))
    if angle < 1e-12:
        return np.zeros(3)
    axis = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    return axis / np.linalg.norm(axis) * angle * 0.5 / np.sin(angle) * 2.0


# ---- loading & validation --------------------------------------------------

def test_load_toy_assets(cylinder_model, arm_model, human_model):
    assert cylinder_model.num_vertices == 34
    assert cylinder_model.num_joints == 2
    assert cylinder_model.beta_dim == 2
    assert human_model.beta_dim == 4
    assert len(human_model.measurement_specs) == 36


def test_skin_weight_row_sum_violation(tmp_path):
    header, tensors = fixtures.build_cylinder()
    tensors["skin_weights"] = tensors["skin_weights"].copy()
    tensors["skin_weights"][5] *= 0.8
    path = tmp_path / "bad.bmf"
    bmf.write_container(path, bmf.MODEL_MAGIC, header, tensors)
    with pytest.raises(InvariantViolation, match="skin-weight"):
        model.load_model(path)


def test_parent_order_violation(tmp_path):
    header, tensors = fixtures.build_cylinder()
    tensors["parents"] = np.array([-1, 5], dtype=np.int32)
    path = tmp_path / "bad.bmf"
    bmf.write_container(path, bmf.MODEL_MAGIC, header, tensors)
    with pytest.raises(InvariantViolation, match="topological"):
        model.load_model(path)


def test_face_index_violation(tmp_path):
    header, tensors = fixtures.build_cylinder()
    faces = tensors["faces"].copy()
    faces[0, 0] = 999
    tensors["faces"] = faces
    path = tmp_path / "bad.bmf"
    bmf.write_container(path, bmf.MODEL_MAGIC, header, tensors)
    with pytest.raises(InvariantViolation, match="face"):
        model.load_model(path)


def test_landmark_index_violation(tmp_path):
    header, tensors = fixtures.build_cylinder()
    header = dict(header)
    header["landmarks"] = dict(header["landmarks"], top_center=4000)
    path = tmp_path / "bad.bmf"
    bmf.write_container(path, bmf.MODEL_MAGIC, header, tensors)
    with pytest.raises(InvariantViolation, match="landmark"):
        model.load_model(path)


# ---- shaped template -------------------------------------------------------

def test_zero_beta_is_template(cylinder_model):
    mesh = model.shaped_template(cylinder_model, model.ShapeParams(np.zeros(2)))
    np.testing.assert_array_equal(mesh.vertices, cylinder_model.vertex_template)


def test_radial_shape_dir_moves_rings_outward(cylinder_model):
    mesh0 = model.shaped_template(cylinder_model, model.ShapeParams(np.zeros(2)))
    mesh1 = model.shaped_template(cylinder_model, model.ShapeParams([0.1, 0.0]))
    moved = mesh1.vertices - mesh0.vertices
    # ring vertices move 0.1 m radially outward; cap centers stay put
    for v in range(32):
        radial = mesh0.vertices[v] * np.array([1.0, 0.0, 1.0])
        radial /= np.linalg.norm(radial)
        np.testing.assert_allclose(moved[v], 0.1 * radial, atol=1e-7)
    np.testing.assert_allclose(moved[32:], 0.0, atol=1e-12)


def test_wrong_beta_length(cylinder_model):
    with pytest.raises(DimensionMismatch):
        model.shaped_template(cylinder_model, model.ShapeParams([0.0, 0.0, 0.0]))


def test_nan_beta_rejected(cylinder_model):
    with pytest.raises(NonFiniteInput):
        model.shaped_template(cylinder_model, model.ShapeParams([np.nan, 0.0]))


# ---- forward ---------------------------------------------------------------

def test_identity_pose_matches_template(human_model):
    rng = np.random.default_rng(3)
    beta = rng.uniform(-1, 1, 4)
    rest = model.shaped_template(human_model, model.ShapeParams(beta))
    posed = model.forward(human_model, model.ShapeParams(beta),
                          model.PoseParams.identity(human_model.num_joints))
    np.testing.assert_allclose(posed.vertices, rest.vertices, rtol=0, atol=1e-12)
    np.testing.assert_allclose(posed.joints, rest.joints, rtol=0, atol=1e-12)


def test_identity_pose_matches_template_with_pose_dirs(arm_pd_model):
    rest = model.shaped_template(arm_pd_model, model.ShapeParams([0.02, -0.05]))
    posed = model.forward(arm_pd_model, model.ShapeParams([0.02, -0.05]),
                          model.PoseParams.identity(2))
    np.testing.assert_allclose(posed.vertices, rest.vertices, rtol=0, atol=1e-12)


def test_pose_dirs_change_bent_pose(arm_model, arm_pd_model):
    pose = model.PoseParams(np.zeros(3), np.array([[0.0, 0.0, 0.4]]), np.zeros(3))
    plain = model.forward(arm_model, model.ShapeParams(np.zeros(2)), pose)
    with_pd = model.forward(arm_pd_model, model.ShapeParams(np.zeros(2)), pose)
    assert np.abs(plain.vertices - with_pd.vertices).max() > 1e-5


def test_hinge_rotation_closed_form(arm_model):
    """Rotating the distal joint by pi/2 rigidly swings the distal half about
    the rest elbow."""
    beta = model.ShapeParams(np.zeros(2))
    rest = model.shaped_template(arm_model, beta)
    elbow = rest.joints[1]
    aa = np.array([0.0, 0.0, np.pi / 2])
    posed = model.forward(arm_model, beta,
                          model.PoseParams(np.zeros(3), aa[None, :], np.zeros(3)))
    R = model.rodrigues(aa)
    distal = arm_model.skin_weights[:, 1] == 1.0
    expected = (rest.vertices[distal] - elbow) @ R.T + elbow
    np.testing.assert_allclose(posed.vertices[distal], expected, atol=1e-12)
    proximal = ~distal
    np.testing.assert_allclose(posed.vertices[proximal], rest.vertices[proximal], atol=1e-12)


def test_translation_is_exact(human_model):
    rng = np.random.default_rng(7)
    pose = random_pose(human_model, rng)
    base = model.forward(human_model, model.ShapeParams(np.zeros(4)),
                         model.PoseParams(pose.global_orient, pose.body_pose, np.zeros(3)))
    t = np.array([1.0, 2.0, 3.0])
    moved = model.forward(human_model, model.ShapeParams(np.zeros(4)),
                          model.PoseParams(pose.global_orient, pose.body_pose, t))
    np.testing.assert_array_equal(moved.vertices, base.vertices + t)
    np.testing.assert_array_equal(moved.joints, base.joints + t)


def test_global_rotation_equivariance(human_model):
    rng = np.random.default_rng(11)
    beta = model.ShapeParams(rng.uniform(-0.5, 0.5, 4))
    body = rng.uniform(-0.3, 0.3, (15, 3))
    base = model.forward(human_model, beta, model.PoseParams(np.zeros(3), body, np.zeros(3)))
    aa = np.array([0.3, -0.5, 0.7])
    R = model.rodrigues(aa)
    rotated = model.forward(human_model, beta, model.PoseParams(aa, body, np.zeros(3)))
    root = base.joints[0]
    np.testing.assert_allclose(rotated.vertices, (base.vertices - root) @ R.T + root, atol=1e-9)
    np.testing.assert_allclose(rotated.joints, (base.joints - root) @ R.T + root, atol=1e-9)


def test_lbs_convexity_decomposition(human_model):
    """Skinned vertices are exactly the convex combination of per-joint rigid
    transforms of the rest vertices."""
    rng = np.random.default_rng(13)
    beta = model.ShapeParams(rng.uniform(-0.5, 0.5, 4))
    pose = random_pose(human_model, rng)
    rest = model.shaped_template(human_model, beta)
    posed = model.forward(human_model, beta, pose)
    rots = model.pose_rotations(pose)
    G, t = model.forward_kinematics(human_model.parents, rest.joints, rots)
    per_joint = np.einsum("jab,vb->jva", G, rest.vertices) \
        - np.einsum("jab,jb->ja", G, rest.joints)[:, None, :] + t[:, None, :]
    blended = np.einsum("vj,jva->va", human_model.skin_weights, per_joint) + pose.translation
    np.testing.assert_allclose(posed.vertices, blended, atol=1e-12)


def test_rodrigues_orthonormal():
    rng = np.random.default_rng(17)
    for _ in range(50):
        aa = rng.normal(scale=2.0, size=3)
        R = model.rodrigues(aa)
        np.testing.assert_allclose(R @ R.T, np.eye(3), atol=1e-9)
        assert abs(np.linalg.det(R) - 1.0) < 1e-9
    tiny = model.rodrigues(np.array([1e-12, -1e-12, 1e-12]))
    np.testing.assert_allclose(tiny @ tiny.T, np.eye(3), atol=1e-12)


def test_canonicalize_axis_angle():
    aa = np.array([0.0, 0.0, 3.5 * np.pi])
    canon = model.canonicalize_axis_angle(aa)
    assert np.linalg.norm(canon) < 2 * np.pi
    np.testing.assert_allclose(model.rodrigues(canon), model.rodrigues(aa), atol=1e-12)


# ---- regress_points --------------------------------------------------------

def test_regress_selector_row():
    verts = np.arange(30, dtype=np.float64).reshape(10, 3)
    mat = np.zeros((1, 10))
    mat[0, 7] = 1.0
    np.testing.assert_array_equal(model.regress_points(mat, verts)[0], verts[7])


def test_regress_midpoint():
    verts = np.array([[0.0, 0, 0], [2.0, 0, 0]])
    mat = np.array([[0.5, 0.5]])
    np.testing.assert_array_equal(model.regress_points(mat, verts), [[1.0, 0.0, 0.0]])


def test_regress_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        model.regress_points(np.ones((2, 5)), np.ones((4, 3)))
