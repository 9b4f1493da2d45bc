"""Independent reference implementations used to generate frozen expected
values and to cross-check the package's geometry. Everything here is written
naively on purpose (per-face loops, O(n^2) gift-wrap hull, its own asset
parser) so agreement with the package is meaningful.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np


# ---------------------------------------------------------------------------
# minimal stand-alone BMF reader
# ---------------------------------------------------------------------------

_DT = {"f32": "<f4", "f64": "<f8", "i32": "<i4"}


def read_bmf(path) -> tuple[dict, dict[str, np.ndarray]]:
    data = Path(path).read_bytes()
    assert data[:4] == b"BMF1"
    hlen = int.from_bytes(data[4:8], "little")
    header = json.loads(data[8:8 + hlen].decode("utf-8"))
    payload = data[8 + hlen:]
    tensors = {}
    for rec in header["tensors"]:
        raw = payload[rec["offset"]:rec["offset"] + rec["length"]]
        tensors[rec["name"]] = np.frombuffer(raw, dtype=_DT[rec["dtype"]]).reshape(rec["shape"])
    return header, tensors


# ---------------------------------------------------------------------------
# O(n^2) gift-wrapping hull (interior collinear points skipped)
# ---------------------------------------------------------------------------

def _cross2(u: np.ndarray, v: np.ndarray) -> float:
    return float(u[0] * v[1] - u[1] * v[0])


def gift_wrap_hull(points: np.ndarray) -> list[int]:
    """Jarvis march; expects pairwise-distinct points (callers dedupe)."""
    n = points.shape[0]
    if n < 3:
        return list(range(n))
    start = min(range(n), key=lambda i: (points[i, 0], points[i, 1]))
    hull = []
    p = start
    while True:
        hull.append(p)
        q = None
        for r in range(n):
            if r == p:
                continue
            if q is None:
                q = r
                continue
            cr = _cross2(points[q] - points[p], points[r] - points[p])
            if cr < 0.0 or (cr == 0.0 and
                            np.linalg.norm(points[r] - points[p]) >
                            np.linalg.norm(points[q] - points[p])):
                q = r
        p = q
        if p == start or len(hull) > n:
            break
    return hull


def hull_perimeter(points: np.ndarray, hull: list[int]) -> float:
    per = 0.0
    for a, b in zip(hull, hull[1:] + hull[:1]):
        per += float(np.linalg.norm(points[b] - points[a]))
    return per


# ---------------------------------------------------------------------------
# naive per-face plane sectioning
# ---------------------------------------------------------------------------

def section_points(vertices, faces, origin, normal, eps=1e-10) -> np.ndarray:
    pts = []
    for tri in faces:
        d = [float(np.dot(vertices[i] - origin, normal)) for i in tri]
        sides = [0 if abs(x) <= eps else (1 if x > 0 else -1) for x in d]
        has_pos = 1 in sides
        has_neg = -1 in sides
        zeros = sides.count(0)
        if has_pos and has_neg:
            for a, bidx in ((0, 1), (1, 2), (2, 0)):
                if sides[a] * sides[bidx] == -1:
                    t = d[a] / (d[a] - d[bidx])
                    pts.append(vertices[tri[a]] + t * (vertices[tri[bidx]] - vertices[tri[a]]))
            for k in range(3):
                if sides[k] == 0:
                    pts.append(vertices[tri[k]].copy())
        elif zeros == 2 and (has_pos or has_neg):
            for k in range(3):
                if sides[k] == 0:
                    pts.append(vertices[tri[k]].copy())
    if not pts:
        return np.empty((0, 3))
    return np.unique(np.asarray(pts), axis=0)


def plane_basis(normal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    seed = np.zeros(3)
    seed[int(np.argmin(np.abs(normal)))] = 1.0
    e1 = np.cross(normal, seed)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(normal, e1)


def naive_circumference_mm(vertices, faces, origin, normal) -> float:
    pts = section_points(vertices, faces, origin, normal)
    assert pts.shape[0] >= 3
    e1, e2 = plane_basis(normal)
    flat = np.column_stack([(pts - origin) @ e1, (pts - origin) @ e2])
    # collapse near-duplicates (the same edge crossed from two adjacent faces
    # rounds differently at ~1e-17) so the wrap sees distinct points
    flat = np.unique(np.round(flat, 12), axis=0)
    hull = gift_wrap_hull(flat)
    return hull_perimeter(flat, hull) * 1000.0


# ---------------------------------------------------------------------------
# naive full measure of a BMF asset at given betas (independent of the package)
# ---------------------------------------------------------------------------

def naive_measure(path, beta: np.ndarray) -> dict[str, float]:
    header, tensors = read_bmf(path)
    v = tensors["v_template"].astype(np.float64) + \
        tensors["shape_dirs"].astype(np.float64) @ np.asarray(beta, dtype=np.float64)
    faces = tensors["faces"].astype(np.int64)
    skin = tensors["skin_weights"].astype(np.float64)
    landmarks = header["landmarks"]
    up = np.asarray(header["up_axis"], dtype=np.float64)
    up /= np.linalg.norm(up)
    dominant = np.argmax(skin, axis=1)

    def lm(names):
        return np.mean([v[landmarks[n]] for n in names], axis=0)

    out = {}
    for spec in header["measurements"]:
        if spec["kind"] in ("length_euclidean", "length_vertical"):
            pa, pb = lm(spec["endpoints"][0]), lm(spec["endpoints"][1])
            if spec["kind"] == "length_vertical":
                out[spec["name"]] = abs(float((pa - pb) @ up)) * 1000.0
            else:
                out[spec["name"]] = float(np.linalg.norm(pa - pb)) * 1000.0
            continue
        origin = lm(spec["plane"]["position"])
        if spec["plane"]["normal"] == "up":
            normal = up
        else:
            normal = lm(spec["plane"]["normal"]["to"]) - lm(spec["plane"]["normal"]["from"])
            normal = normal / np.linalg.norm(normal)
        joint_set = set(spec["submesh"]["joints"])
        keep = [f for f in faces if all(dominant[i] in joint_set for i in f)]
        if spec["submesh"].get("slab"):
            lo = float(lm(spec["submesh"]["slab"][0]) @ up)
            hi = float(lm(spec["submesh"]["slab"][1]) @ up)
            lo, hi = min(lo, hi), max(hi, lo)
            keep = [f for f in keep
                    if all(lo - 1e-10 <= float(v[i] @ up) <= hi + 1e-10 for i in f)]
        out[spec["name"]] = naive_circumference_mm(v, np.asarray(keep), origin, normal)
    return out


# ---------------------------------------------------------------------------
# dense projected-gradient QP reference for the epsilon-SVR dual
# ---------------------------------------------------------------------------

def _project_box_equality(zp_t, zm_t, C):
    """Euclidean projection onto {0 <= z <= C, sum(zp) - sum(zm) = 0}.

    With multiplier l the projection is zp = clip(zp_t - l, 0, C),
    zm = clip(zm_t + l, 0, C); the constraint residual g(l) is piecewise
    linear and non-increasing, so the root is found exactly from the clip
    breakpoints.
    """
    bps = np.unique(np.concatenate([zp_t, zp_t - C, -zm_t, C - zm_t]))
    vals = (np.clip(zp_t[None, :] - bps[:, None], 0, C).sum(axis=1)
            - np.clip(zm_t[None, :] + bps[:, None], 0, C).sum(axis=1))
    if vals[0] <= 0.0:
        root = bps[0]
    elif vals[-1] >= 0.0:
        root = bps[-1]
    else:
        k = int(np.argmax(vals <= 0.0))
        l0, l1 = bps[k - 1], bps[k]
        g0, g1 = vals[k - 1], vals[k]
        root = l0 if g0 == g1 else l0 + (l1 - l0) * g0 / (g0 - g1)
    return np.clip(zp_t - root, 0, C), np.clip(zm_t + root, 0, C)


def qp_oracle_svr(K, y, C, eps, iters=150_000):
    """Projected-gradient solve of the 2n-variable box/equality QP (Nesterov
    momentum with adaptive restart on top of the projected step). Returns
    (dual coefficients, bias)."""
    n = y.shape[0]
    L = 2.0 * float(np.linalg.eigvalsh(K).max()) + 1e-9
    step = 1.0 / L

    def objective(zp, zm):
        c = zp - zm
        return 0.5 * c @ K @ c + eps * (zp.sum() + zm.sum()) - y @ c

    zp = np.zeros(n)
    zm = np.zeros(n)
    yp, ym = zp.copy(), zm.copy()
    t_mom = 1.0
    best = objective(zp, zm)
    stall = 0
    for _ in range(iters):
        u = K @ (yp - ym)
        zp_new, zm_new = _project_box_equality(yp - step * (u + eps - y),
                                               ym - step * (-u + eps + y), C)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_mom * t_mom))
        beta = (t_mom - 1.0) / t_new
        yp = zp_new + beta * (zp_new - zp)
        ym = zm_new + beta * (zm_new - zm)
        zp, zm, t_mom = zp_new, zm_new, t_new
        cur = objective(zp, zm)
        if cur < best - 1e-14 * (1.0 + abs(best)):
            best = cur
            stall = 0
        else:
            stall += 1
            if stall % 400 == 0:     # adaptive restart when momentum overshoots
                yp, ym, t_mom = zp.copy(), zm.copy(), 1.0
            if stall > 12_000:
                break
    coef = zp - zm
    r = y - K @ coef
    up = np.concatenate([np.where(zp < C, r - eps, -np.inf),
                         np.where(zm > 0, r + eps, -np.inf)])
    low = np.concatenate([np.where(zp > 0, r - eps, np.inf),
                          np.where(zm < C, r + eps, np.inf)])
    bias = 0.5 * (up.max() + low.min())
    return coef, float(bias)


def ring_polygon_perimeter_mm(half_x: float, half_z: float, segments: int) -> float:
    """Closed form for a horizontal elliptical ring sampled at regular angles."""
    phi = 2.0 * np.pi * np.arange(segments) / segments
    pts = np.column_stack([half_x * np.cos(phi), half_z * np.sin(phi)])
    return float(np.linalg.norm(np.diff(np.vstack([pts, pts[:1]]), axis=0), axis=1).sum()) * 1000.0
