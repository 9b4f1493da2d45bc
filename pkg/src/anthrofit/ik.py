"""Inverse kinematics: gradient-based fitting of shape and pose to 3D
keypoint targets, with warm starting across frames and a fixed-shape refit
mode that guarantees zero shape dispersion over a sequence.

The loss is a weighted sum of the squared keypoint error, a squared pose
prior, and a squared shape penalty; gradients come from a hand-written
reverse-mode pass through shape blendshapes, forward kinematics, skinning and
the keypoint regressor (validated against finite differences in the tests).

Optimization runs on a delta parameterization: the root rotation is
``R_init @ rodrigues(delta)`` and the translation ``R_init @ u + k_anchor``
with the anchor derived from the targets. Because the anchor and init
rotation transform with the targets, rigidly moving the targets reproduces
the exact same optimization trajectory in the moved frame.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    InvalidConfig,
    NonFiniteLoss,
    TooFewKeypoints,
    UnknownRegressor,
)
from .model import BodyModel, PoseParams, ShapeParams, rodrigues

GAUSSIAN_POSE, NO_PRIOR, EXTERNAL = "gaussian_pose", "none", "external"
REFIT, SWAP = "refit", "swap"

MM_PER_M = 1000.0


@dataclass
class IKConfig:
    lambda_joint: float = 10.0
    lambda_prior: float = 0.0007
    lambda_beta: float = 0.01
    max_iters: int = 300
    tol: float = 1e-12              # |delta loss| between accepted steps
    step_size: float = 0.1          # Adam step, halved whenever a step increases the loss
    prior: str = GAUSSIAN_POSE
    external_prior: object = None   # callable body_pose -> (value, grad)
    regressor: str = "joints"
    mode: str = REFIT               # fixed-shape refit: re-optimize pose or swap only
    align_keys: dict | None = None  # {"pelvis","neck","l_hip","r_hip"} -> keypoint index

    def __post_init__(self):
        if min(self.lambda_joint, self.lambda_prior, self.lambda_beta) < 0:
            raise InvalidConfig("loss weights must be >= 0")
        if self.max_iters < 1:
            raise InvalidConfig("max_iters must be >= 1")
        if self.prior not in (GAUSSIAN_POSE, NO_PRIOR, EXTERNAL):
            raise InvalidConfig(f"unknown prior {self.prior!r}")
        if self.prior == EXTERNAL and self.external_prior is None:
            raise InvalidConfig("external prior selected but no callable given")
        if self.mode not in (REFIT, SWAP):
            raise InvalidConfig(f"unknown refit mode {self.mode!r}")


@dataclass
class FrameTargets:
    frame_id: int
    keypoints: np.ndarray          # (K, 3) meters
    mask: np.ndarray               # (K,) bool
    regressor_name: str = "joints"

    def __post_init__(self):
        self.keypoints = np.asarray(self.keypoints, dtype=np.float64).reshape(-1, 3)
        self.mask = np.asarray(self.mask, dtype=bool).reshape(-1)
        if self.mask.shape[0] != self.keypoints.shape[0]:
            raise InvalidConfig("keypoint/mask length mismatch")
        if not np.all(np.isfinite(self.keypoints[self.mask])):
            raise NonFiniteLoss(f"frame {self.frame_id}: non-finite masked-in keypoints")


@dataclass
class IKResult:
    shape: ShapeParams | None
    pose: PoseParams | None
    final_loss: float
    joint_rmse_mm: float
    iterations_used: int
    converged: bool
    frame_id: int = 0
    error: str | None = None


def _get_regressor(model: BodyModel, name: str) -> np.ndarray:
    if name == "joints" and name not in model.keypoint_regressors:
        return model.joint_regressor
    if name not in model.keypoint_regressors:
        raise UnknownRegressor(f"model asset has no keypoint regressor {name!r}")
    return model.keypoint_regressors[name]


def _rodrigues_backward(aa: np.ndarray, R: np.ndarray, dR: np.ndarray) -> np.ndarray:
    """d<loss>/d(axis-angle) given the adjoint of the rotation matrix."""
    theta2 = float(aa @ aa)
    grad = np.empty(3)
    if theta2 < 1e-16:
        # dR/daa_i -> generator [e_i]_x at the identity
        grad[0] = dR[2, 1] - dR[1, 2]
        grad[1] = dR[0, 2] - dR[2, 0]
        grad[2] = dR[1, 0] - dR[0, 1]
        return grad
    eye_m_R = np.eye(3) - R
    for i in range(3):
        v = aa * aa[i]
        w = np.cross(aa, eye_m_R[:, i])
        Kv = np.array([
            [0.0, -(v[2] + w[2]), v[1] + w[1]],
            [v[2] + w[2], 0.0, -(v[0] + w[0])],
            [-(v[1] + w[1]), v[0] + w[0], 0.0],
        ])
        # dR/daa_i = ((aa_i [aa]_x + [aa x (I-R)e_i]_x) / theta^2) R
        grad[i] = np.sum(dR * ((Kv / theta2) @ R))
    return grad


def _prior_value_grad(cfg: IKConfig, body_pose: np.ndarray) -> tuple[float, np.ndarray]:
    if cfg.prior == GAUSSIAN_POSE:
        return float(np.sum(body_pose * body_pose)), 2.0 * body_pose
    if cfg.prior == EXTERNAL:
        value, grad = cfg.external_prior(body_pose)
        return float(value), np.asarray(grad, dtype=np.float64).reshape(body_pose.shape)
    return 0.0, np.zeros_like(body_pose)


def _forward_pass(model: BodyModel, kreg: np.ndarray, beta: np.ndarray,
                  delta: np.ndarray, body_pose: np.ndarray, u: np.ndarray,
                  R_init: np.ndarray, k_anchor: np.ndarray,
                  targets: FrameTargets, cfg: IKConfig,
                  root_at_rest_joint: bool = False,
                  trans: np.ndarray | None = None) -> dict:
    """Run the pipeline and keep every intermediate the backward pass needs.

    Two translation conventions share the code: the optimizer uses the
    anchored form (root pivot at the origin, translation R_init u + anchor);
    the public loss uses the standard forward (root pivot at the rest root
    joint, free translation ``trans``).
    """
    num_j = model.num_joints
    parents = model.parents

    v_s1 = model.vertex_template + model.shape_dirs @ beta
    rest = model.joint_regressor @ v_s1

    rots = np.empty((num_j, 3, 3))
    rod_delta = rodrigues(delta)
    rots[0] = R_init @ rod_delta
    for j in range(1, num_j):
        rots[j] = rodrigues(body_pose[j - 1])

    pose_feat = None
    v_used = v_s1
    if model.pose_dirs is not None and num_j > 1:
        pose_feat = (rots[1:] - np.eye(3)).reshape(-1)
        v_used = v_s1 + model.pose_dirs @ pose_feat

    G = np.empty((num_j, 3, 3))
    t = np.empty((num_j, 3))
    G[0] = rots[0]
    t[0] = rest[0] if root_at_rest_joint else np.zeros(3)
    for j in range(1, num_j):
        p = parents[j]
        G[j] = G[p] @ rots[j]
        t[j] = t[p] + G[p] @ (rest[j] - rest[p])

    T = trans if root_at_rest_joint else R_init @ u + k_anchor
    blend = np.einsum("vj,jab->vab", model.skin_weights, G)
    shift = model.skin_weights @ (t - np.einsum("jab,jb->ja", G, rest))
    x = np.einsum("vab,vb->va", blend, v_used) + shift + T

    khat = kreg @ x
    mask = targets.mask
    resid = khat[mask] - targets.keypoints[mask]
    prior_term, prior_grad = _prior_value_grad(cfg, body_pose)
    loss = cfg.lambda_joint * float(np.sum(resid * resid)) \
        + cfg.lambda_prior * prior_term + cfg.lambda_beta * float(beta @ beta)
    if not np.isfinite(loss):
        raise NonFiniteLoss("IK loss is not finite")
    return {
        "beta": beta, "delta": delta, "body_pose": body_pose,
        "rod_delta": rod_delta, "rots": rots, "G": G, "rest": rest,
        "v_used": v_used, "blend": blend, "khat": khat, "resid": resid,
        "loss": loss, "prior_grad": prior_grad,
        "root_at_rest_joint": root_at_rest_joint, "R_init": R_init,
    }


def _backward_pass(model: BodyModel, kreg: np.ndarray, cache: dict,
                   dkhat: np.ndarray, cfg: IKConfig,
                   with_regularizers: bool) -> dict:
    """Reverse-mode pass seeded with d<objective>/d(keypoints).

    With ``with_regularizers`` the prior and shape penalties are added,
    giving the loss gradient; without them the result is a row of the
    keypoint Jacobian.
    """
    num_j = model.num_joints
    parents = model.parents
    G, rest, rots = cache["G"], cache["rest"], cache["rots"]

    dx = kreg.T @ dkhat

    dT = dx.sum(axis=0)
    dv_used = np.einsum("vba,vb->va", cache["blend"], dx)
    wdx = model.skin_weights.T @ dx                    # (J, 3): per-joint dt from LBS
    dG = np.einsum("vj,va,vb->jab", model.skin_weights, dx, cache["v_used"])
    dG -= wdx[:, :, None] * rest[:, None, :]
    dt = wdx.copy()
    drest = -np.einsum("jba,jb->ja", G, wdx)

    for j in range(num_j - 1, 0, -1):
        p = parents[j]
        d = rest[j] - rest[p]
        dG[p] += dG[j] @ rots[j].T + np.outer(dt[j], d)
        dt[p] += dt[j]
        dd = G[p].T @ dt[j]
        drest[j] += dd
        drest[p] -= dd
    dR_local = np.empty((num_j, 3, 3))
    dR_local[0] = cache["R_init"].T @ dG[0]
    for j in range(1, num_j):
        dR_local[j] = G[parents[j]].T @ dG[j]
    if cache["root_at_rest_joint"]:
        drest[0] += dt[0]

    if model.pose_dirs is not None and num_j > 1:
        dq = np.einsum("vik,vi->k", model.pose_dirs, dv_used).reshape(num_j - 1, 3, 3)
        dR_local[1:] += dq

    ddelta = _rodrigues_backward(cache["delta"], cache["rod_delta"], dR_local[0])
    dbody = np.empty_like(cache["body_pose"])
    for j in range(1, num_j):
        dbody[j - 1] = _rodrigues_backward(cache["body_pose"][j - 1], rots[j], dR_local[j])

    dv_s1 = dv_used + model.joint_regressor.T @ drest
    dbeta = np.einsum("vib,vi->b", model.shape_dirs, dv_s1)

    if with_regularizers:
        dbody = dbody + cfg.lambda_prior * cache["prior_grad"]
        dbeta = dbeta + 2.0 * cfg.lambda_beta * cache["beta"]

    if cache["root_at_rest_joint"]:
        return {"beta": dbeta, "delta": ddelta, "body_pose": dbody, "u": None, "trans": dT}
    return {"beta": dbeta, "delta": ddelta, "body_pose": dbody,
            "u": cache["R_init"].T @ dT, "trans": None}


def _loss_and_grad(model: BodyModel, kreg: np.ndarray, beta: np.ndarray,
                   delta: np.ndarray, body_pose: np.ndarray, u: np.ndarray,
                   R_init: np.ndarray, k_anchor: np.ndarray,
                   targets: FrameTargets, cfg: IKConfig,
                   root_at_rest_joint: bool = False, trans: np.ndarray | None = None):
    cache = _forward_pass(model, kreg, beta, delta, body_pose, u, R_init, k_anchor,
                          targets, cfg, root_at_rest_joint, trans)
    dkhat = np.zeros_like(cache["khat"])
    dkhat[targets.mask] = 2.0 * cfg.lambda_joint * cache["resid"]
    grads = _backward_pass(model, kreg, cache, dkhat, cfg, with_regularizers=True)
    aux = {"keypoints": cache["khat"], "residual": cache["resid"]}
    return cache["loss"], grads, aux


def ik_loss(model: BodyModel, shape: ShapeParams, pose: PoseParams,
            targets: FrameTargets, cfg: IKConfig):
    """Loss and analytic gradients at the given parameters.

    Returns (scalar, {"beta", "global_orient", "body_pose", "translation"}).
    """
    kreg = _get_regressor(model, cfg.regressor)
    if kreg.shape[0] != targets.keypoints.shape[0]:
        raise InvalidConfig(
            f"regressor yields {kreg.shape[0]} keypoints, targets have {targets.keypoints.shape[0]}")
    loss, grads, _ = _loss_and_grad(
        model, kreg, shape.beta, pose.global_orient, pose.body_pose,
        u=np.zeros(3), R_init=np.eye(3), k_anchor=np.zeros(3),
        targets=targets, cfg=cfg, root_at_rest_joint=True, trans=pose.translation)
    return loss, {"beta": grads["beta"], "global_orient": grads["delta"],
                  "body_pose": grads["body_pose"], "translation": grads["trans"]}


def _alignment_rotation(model: BodyModel, kreg: np.ndarray,
                        targets: FrameTargets, cfg: IKConfig) -> np.ndarray:
    """Closed-form global-orientation init: align the rest pelvis-to-neck and
    hip-to-hip axes with the target ones. Deterministic; identity when the
    needed keypoints are unavailable."""
    keys = cfg.align_keys
    if not keys:
        return np.eye(3)
    needed = ("pelvis", "neck", "l_hip", "r_hip")
    if any(k not in keys for k in needed) or not all(targets.mask[keys[k]] for k in needed):
        return np.eye(3)
    rest_k = kreg @ model.vertex_template

    def frame(pts):
        up = pts["neck"] - pts["pelvis"]
        across = pts["l_hip"] - pts["r_hip"]
        e1 = up / max(np.linalg.norm(up), 1e-12)
        across = across - (across @ e1) * e1
        n = np.linalg.norm(across)
        if n < 1e-9:
            return None
        e2 = across / n
        return np.column_stack([e1, e2, np.cross(e1, e2)])

    f_rest = frame({k: rest_k[keys[k]] for k in needed})
    f_target = frame({k: targets.keypoints[keys[k]] for k in needed})
    if f_rest is None or f_target is None:
        return np.eye(3)
    return f_target @ f_rest.T


def fit_frame(model: BodyModel, targets: FrameTargets,
              init: tuple[ShapeParams, PoseParams] | None = None,
              cfg: IKConfig | None = None,
              beta_fixed: np.ndarray | None = None) -> IKResult:
    """First-order fit of one frame: Adam on the delta parameterization, step
    size halved whenever a step would increase the loss (accepted steps are
    monotone non-increasing)."""
    cfg = cfg or IKConfig()
    kreg = _get_regressor(model, cfg.regressor)
    if kreg.shape[0] != targets.keypoints.shape[0]:
        raise InvalidConfig(
            f"regressor yields {kreg.shape[0]} keypoints, targets have {targets.keypoints.shape[0]}")
    if int(targets.mask.sum()) < 4:
        raise TooFewKeypoints(
            f"frame {targets.frame_id}: {int(targets.mask.sum())} masked-in keypoints, need >= 4")

    num_j = model.num_joints
    optimize_beta = beta_fixed is None

    if init is not None:
        init_shape, init_pose = init
        beta = (beta_fixed if beta_fixed is not None else init_shape.beta).astype(np.float64).copy()
        body_pose = init_pose.body_pose.copy()
        R_init = rodrigues(init_pose.global_orient)
        # anchor reproduces the previous frame's placement at delta = u = 0
        rest0 = (model.joint_regressor @ (model.vertex_template + model.shape_dirs @ beta))[0]
        k_anchor = init_pose.translation + rest0
    else:
        beta = np.zeros(model.beta_dim) if beta_fixed is None else beta_fixed.astype(np.float64).copy()
        body_pose = np.zeros((num_j - 1, 3))
        R_init = _alignment_rotation(model, kreg, targets, cfg)
        probe, _, aux = _loss_and_grad(model, kreg, beta, np.zeros(3), body_pose,
                                       u=np.zeros(3), R_init=R_init,
                                       k_anchor=np.zeros(3), targets=targets, cfg=cfg)
        mask = targets.mask
        k_anchor = (targets.keypoints[mask].mean(axis=0)
                    - (aux["keypoints"][mask]).mean(axis=0))

    delta = np.zeros(3)
    u = np.zeros(3)

    def pack():
        parts = [delta, body_pose.reshape(-1), u]
        if optimize_beta:
            parts.insert(0, beta)
        return np.concatenate(parts)

    def unpack(vec):
        nonlocal beta, delta, body_pose, u
        k = 0
        if optimize_beta:
            beta = vec[:model.beta_dim].copy()
            k = model.beta_dim
        delta = vec[k:k + 3].copy()
        body_pose = vec[k + 3:k + 3 + 3 * (num_j - 1)].reshape(num_j - 1, 3).copy()
        u = vec[k + 3 + 3 * (num_j - 1):].copy()

    def eval_at(vec):
        unpack(vec)
        cache = _forward_pass(model, kreg, beta, delta, body_pose, u,
                              R_init, k_anchor, targets, cfg)
        dkhat = np.zeros_like(cache["khat"])
        dkhat[targets.mask] = 2.0 * cfg.lambda_joint * cache["resid"]
        grads = _backward_pass(model, kreg, cache, dkhat, cfg, with_regularizers=True)
        parts = [grads["delta"], grads["body_pose"].reshape(-1), grads["u"]]
        if optimize_beta:
            parts.insert(0, grads["beta"])
        return cache["loss"], np.concatenate(parts), cache

    def jacobian_at(cache):
        mask_idx = np.where(targets.mask)[0]
        n_params = (model.beta_dim if optimize_beta else 0) + 3 * (num_j - 1) + 6
        jac = np.empty((3 * mask_idx.size, n_params))
        dkhat = np.zeros_like(cache["khat"])
        row = 0
        for kp in mask_idx:
            for c in range(3):
                dkhat[kp, c] = 1.0
                g = _backward_pass(model, kreg, cache, dkhat, cfg, with_regularizers=False)
                dkhat[kp, c] = 0.0
                parts = [g["delta"], g["body_pose"].reshape(-1), g["u"]]
                if optimize_beta:
                    parts.insert(0, g["beta"])
                jac[row] = np.concatenate(parts)
                row += 1
        return jac

    params = pack()
    loss, grad, cache = eval_at(params)
    lr_base = cfg.step_size
    m = np.zeros_like(params)
    v = np.zeros_like(params)
    b1, b2, eps = 0.9, 0.999, 1e-8
    step_count = 0
    iterations = 0
    converged = np.abs(grad).max() < 1e-13    # already at a stationary point
    stall = 0
    polish_budget = min(60, max(10, cfg.max_iters // 5))
    adam_budget = 0 if converged else max(cfg.max_iters - polish_budget, 0)

    # phase 1: Adam with in-iteration backtracking (monotone accepted steps)
    while iterations < adam_budget:
        iterations += 1
        m_new = b1 * m + (1 - b1) * grad
        v_new = b2 * v + (1 - b2) * grad * grad
        step_count += 1
        mhat = m_new / (1 - b1 ** step_count)
        vhat = v_new / (1 - b2 ** step_count)
        direction = mhat / (np.sqrt(vhat) + eps)
        # the momentum direction can point uphill right after an accepted
        # step, so fall back to the preconditioned gradient (always descent)
        accepted = False
        for attempt, cand in enumerate((direction, grad / (np.sqrt(vhat) + eps))):
            lr = lr_base
            for _ in range(30):
                trial = params - lr * cand
                trial_loss, trial_grad, trial_cache = eval_at(trial)
                if trial_loss <= loss:
                    accepted = True
                    break
                lr *= 0.5
            if accepted:
                if attempt == 1:
                    m_new = grad.copy()   # momentum restart alongside the fallback
                break
        if not accepted:
            unpack(params)
            step_count -= 1
            stall += 1
            if stall >= 5:
                break
            continue
        m, v = m_new, v_new
        improved = loss - trial_loss
        params, loss, grad, cache = trial, trial_loss, trial_grad, trial_cache
        lr_base = min(lr * 2.0, cfg.step_size)
        # hand over to the quadratic phase once first-order progress flattens
        stall = stall + 1 if improved < max(cfg.tol, 1e-8 * loss) else 0
        if stall >= 5:
            break

    # phase 2: damped Gauss-Newton polish on the same objective; the first
    # -order phase alone cannot reach millimeter accuracy in the iteration
    # budget, the quadratic model converges locally in a handful of steps
    reg_diag = np.zeros(params.size)
    offset = 0
    if optimize_beta:
        reg_diag[:model.beta_dim] = 2.0 * cfg.lambda_beta
        offset = model.beta_dim
    if cfg.prior == GAUSSIAN_POSE:
        reg_diag[offset + 3:offset + 3 + 3 * (num_j - 1)] = 2.0 * cfg.lambda_prior
    mu = 1e-4
    jac = None
    while not converged and iterations < cfg.max_iters:
        iterations += 1
        if jac is None:
            jac = jacobian_at(cache)
            hess = 2.0 * cfg.lambda_joint * (jac.T @ jac)
            hess[np.diag_indices_from(hess)] += reg_diag
        try:
            step = np.linalg.solve(hess + mu * np.eye(params.size), -grad)
        except np.linalg.LinAlgError:
            mu *= 10.0
            continue
        trial = params + step
        trial_loss, trial_grad, trial_cache = eval_at(trial)
        if trial_loss <= loss:
            improved = loss - trial_loss
            params, loss, grad, cache = trial, trial_loss, trial_grad, trial_cache
            jac = None
            mu = max(mu / 3.0, 1e-12)
            if improved < cfg.tol:
                converged = True
                break
        else:
            unpack(params)
            mu *= 6.0
            if mu > 1e10:
                converged = True   # damped to a stationary point
                break

    unpack(params)
    rmse = float(np.sqrt(np.mean(np.sum(cache["resid"] ** 2, axis=1)))) * MM_PER_M

    final_R = R_init @ rodrigues(delta)
    angle = np.arccos(np.clip((np.trace(final_R) - 1.0) / 2.0, -1.0, 1.0))
    if angle < 1e-12:
        go = np.zeros(3)
    else:
        axis = np.array([final_R[2, 1] - final_R[1, 2],
                         final_R[0, 2] - final_R[2, 0],
                         final_R[1, 0] - final_R[0, 1]])
        norm = np.linalg.norm(axis)
        if norm < 1e-12:
            # angle pi: extract axis from the symmetric part
            sym = 0.5 * (final_R + np.eye(3))
            axis = np.sqrt(np.maximum(np.diag(sym), 0.0))
            signs = np.sign(np.array([final_R[2, 1] - final_R[1, 2],
                                      final_R[0, 2] - final_R[2, 0],
                                      final_R[1, 0] - final_R[0, 1]]))
            axis = np.where(signs == 0, axis, axis * signs)
            norm = np.linalg.norm(axis)
        go = axis / norm * angle
    rest0 = (model.joint_regressor @ (model.vertex_template + model.shape_dirs @ beta))[0]
    translation = R_init @ u + k_anchor - rest0

    return IKResult(
        shape=ShapeParams(beta),
        pose=PoseParams(go, body_pose, translation),
        final_loss=float(loss),
        joint_rmse_mm=rmse,
        iterations_used=iterations,
        converged=converged,
        frame_id=targets.frame_id,
    )


def fit_sequence(model: BodyModel, frames: list[FrameTargets],
                 cfg: IKConfig | None = None,
                 beta_fixed: np.ndarray | None = None,
                 warm_starts: list[IKResult] | None = None) -> list[IKResult]:
    """Fit frames in order, warm-starting each from the previous successful
    result. A failing frame is recorded as not-converged and the sequence
    continues."""
    cfg = cfg or IKConfig()
    results: list[IKResult] = []
    prev: IKResult | None = None
    for k, frame in enumerate(frames):
        init = None
        if warm_starts is not None and warm_starts[k].shape is not None:
            init = (warm_starts[k].shape, warm_starts[k].pose)
        elif prev is not None and prev.shape is not None:
            init = (prev.shape, prev.pose)
        try:
            result = fit_frame(model, frame, init=init, cfg=cfg, beta_fixed=beta_fixed)
        except Exception as exc:  # per-frame isolation: record, never fabricate
            if not isinstance(exc, (TooFewKeypoints, NonFiniteLoss, InvalidConfig)):
                raise
            result = IKResult(shape=None, pose=None, final_loss=float("nan"),
                              joint_rmse_mm=float("nan"), iterations_used=0,
                              converged=False, frame_id=frame.frame_id, error=str(exc))
        results.append(result)
        if result.shape is not None:
            prev = result
    return results


def refit_with_fixed_shape(model: BodyModel, frames: list[FrameTargets],
                           beta_fixed: ShapeParams, cfg: IKConfig | None = None,
                           prior_results: list[IKResult] | None = None) -> list[IKResult]:
    """Freeze the shape at ``beta_fixed`` for every frame.

    Refit mode re-optimizes pose and global transform per frame (warm-started
    from ``prior_results`` when given). Swap mode keeps the prior poses and
    only replaces the shape, recomputing the losses; it requires
    ``prior_results``.
    """
    cfg = cfg or IKConfig()
    beta = np.asarray(beta_fixed.beta, dtype=np.float64)
    if beta.shape[0] != model.beta_dim:
        raise InvalidConfig(f"beta_fixed has length {beta.shape[0]}, model wants {model.beta_dim}")

    if cfg.mode == SWAP:
        if prior_results is None:
            raise InvalidConfig("swap mode needs prior per-frame results")
        kreg = _get_regressor(model, cfg.regressor)
        out = []
        for frame, prior in zip(frames, prior_results):
            if prior.shape is None:
                out.append(IKResult(shape=None, pose=None, final_loss=float("nan"),
                                    joint_rmse_mm=float("nan"), iterations_used=0,
                                    converged=False, frame_id=frame.frame_id,
                                    error=prior.error))
                continue
            loss, _, aux = _loss_and_grad(
                model, kreg, beta, prior.pose.global_orient, prior.pose.body_pose,
                u=np.zeros(3), R_init=np.eye(3), k_anchor=np.zeros(3),
                targets=frame, cfg=cfg, root_at_rest_joint=True,
                trans=prior.pose.translation)
            rmse = float(np.sqrt(np.mean(np.sum(aux["residual"] ** 2, axis=1)))) * MM_PER_M
            out.append(IKResult(shape=ShapeParams(beta.copy()), pose=prior.pose,
                                final_loss=float(loss), joint_rmse_mm=rmse,
                                iterations_used=0, converged=prior.converged,
                                frame_id=frame.frame_id))
        return out

    return fit_sequence(model, frames, cfg=cfg, beta_fixed=beta,
                        warm_starts=prior_results)


# ---------------------------------------------------------------------------
# JSON-lines IO
# ---------------------------------------------------------------------------

def read_frames(path: str | Path) -> list[FrameTargets]:
    frames = []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        kp = np.asarray(obj["keypoints"], dtype=np.float64)
        mask = np.asarray(obj.get("mask", [True] * kp.shape[0]), dtype=bool)
        frames.append(FrameTargets(frame_id=int(obj["frame_id"]), keypoints=kp, mask=mask,
                                   regressor_name=obj.get("regressor", "joints")))
    return frames


def write_frames(path: str | Path, frames: list[FrameTargets]) -> None:
    with open(path, "w") as fh:
        for f in frames:
            fh.write(json.dumps({
                "frame_id": f.frame_id,
                "keypoints": [[float(v) for v in row] for row in f.keypoints],
                "mask": [bool(b) for b in f.mask],
            }) + "\n")


def read_results(path: str | Path) -> list[IKResult]:
    """Inverse of write_results (loss/iteration metadata is not persisted)."""
    results = []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        if not obj.get("present", True):
            results.append(IKResult(shape=None, pose=None, final_loss=float("nan"),
                                    joint_rmse_mm=float("nan"), iterations_used=0,
                                    converged=False, frame_id=int(obj["frame_id"]),
                                    error=obj.get("error")))
            continue
        pose = np.asarray(obj["pose"], dtype=np.float64)
        results.append(IKResult(
            shape=ShapeParams(np.asarray(obj["beta"], dtype=np.float64)),
            pose=PoseParams(pose[:3], pose[3:].reshape(-1, 3),
                            np.asarray(obj["translation"], dtype=np.float64)),
            final_loss=float("nan"),
            joint_rmse_mm=float(obj.get("joint_rmse_mm", float("nan"))),
            iterations_used=0,
            converged=bool(obj.get("converged", False)),
            frame_id=int(obj["frame_id"])))
    return results


def write_results(path: str | Path, results: list[IKResult]) -> None:
    """One JSON object per frame: pose serialized as global orientation (3)
    followed by the flattened per-joint rotations."""
    with open(path, "w") as fh:
        for r in results:
            if r.shape is None:
                obj = {"frame_id": r.frame_id, "present": False, "converged": False,
                       "error": r.error}
            else:
                obj = {
                    "frame_id": r.frame_id,
                    "present": True,
                    "beta": [float(v) for v in r.shape.beta],
                    "pose": [float(v) for v in
                             np.concatenate([r.pose.global_orient,
                                             r.pose.body_pose.reshape(-1)])],
                    "translation": [float(v) for v in r.pose.translation],
                    "converged": bool(r.converged),
                    "joint_rmse_mm": float(r.joint_rmse_mm),
                }
            fh.write(json.dumps(obj) + "\n")
