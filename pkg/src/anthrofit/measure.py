"""Deterministic mesh measuring: 23 landmark-to-landmark lengths and 13
planar-section circumferences, evaluated on a T-pose mesh.

Circumferences follow the plane-section recipe: restrict the mesh to the body
part, intersect the triangles with the measuring plane exactly, project the
intersection points into the plane, and take the perimeter of their 2D convex
hull. Results are millimeters; meshes are meters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegeneratePlane,
    EmptyIntersection,
    InvariantViolation,
    NonFiniteInput,
    UnknownLandmark,
)
from .model import BodyModel, PosedMesh, ShapeParams, shaped_template

LENGTH_EUCLIDEAN = "length_euclidean"
LENGTH_VERTICAL = "length_vertical"
CIRCUMFERENCE = "circumference"

MM_PER_M = 1000.0

# on-plane tolerance for triangle/plane sign classification, meters
_ON_PLANE = 1e-10


@dataclass(frozen=True)
class PlaneSpec:
    """Measuring plane: origin at a landmark (or landmark midpoint), normal
    either the asset up axis or the direction between two landmarks."""

    position: tuple[str, ...]
    normal_from: tuple[str, ...] = ()
    normal_to: tuple[str, ...] = ()

    @property
    def uses_up(self) -> bool:
        return not self.normal_from


@dataclass(frozen=True)
class SubmeshSpec:
    """Restriction of the mesh to one body part: vertices whose dominant skin
    weight is in ``joints``, optionally clipped to the up-axis slab spanned by
    two landmark heights."""

    joints: tuple[int, ...]
    slab: tuple[tuple[str, ...], tuple[str, ...]] | None = None


@dataclass(frozen=True)
class MeasurementSpec:
    index: int
    name: str
    kind: str
    endpoints: tuple[tuple[str, ...], tuple[str, ...]] | None = None
    plane: PlaneSpec | None = None
    submesh: SubmeshSpec | None = None


@dataclass
class AnthroVector:
    """Ordered measurement values in millimeters, one per table spec."""

    names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if len(self.names) != self.values.shape[0]:
            raise InvariantViolation("measurement names/values length mismatch")

    def as_dict(self) -> dict[str, float]:
        return {n: float(v) for n, v in zip(self.names, self.values)}

    @classmethod
    def from_dict(cls, data: dict[str, float], names: tuple[str, ...]) -> "AnthroVector":
        missing = [n for n in names if n not in data]
        if missing:
            raise UnknownLandmark(f"measurement values missing for {missing}")
        return cls(names=tuple(names), values=np.array([data[n] for n in names], dtype=np.float64))


def _names(raw) -> tuple[str, ...]:
    if isinstance(raw, str):
        return (raw,)
    return tuple(str(n) for n in raw)


def parse_measurement_specs(raw_specs: list[dict], landmarks: dict[str, int]) -> list[MeasurementSpec]:
    """Decode the header's measurement table and check every referenced
    landmark name against the asset's landmark map."""
    specs = []
    referenced: set[str] = set()
    for raw in raw_specs:
        kind = raw["kind"]
        if kind in (LENGTH_EUCLIDEAN, LENGTH_VERTICAL):
            a, b = raw["endpoints"]
            spec = MeasurementSpec(
                index=int(raw["index"]), name=str(raw["name"]), kind=kind,
                endpoints=(_names(a), _names(b)))
            referenced.update(spec.endpoints[0])
            referenced.update(spec.endpoints[1])
        elif kind == CIRCUMFERENCE:
            plane_raw = raw["plane"]
            normal = plane_raw.get("normal", "up")
            if normal == "up":
                plane = PlaneSpec(position=_names(plane_raw["position"]))
            else:
                plane = PlaneSpec(
                    position=_names(plane_raw["position"]),
                    normal_from=_names(normal["from"]),
                    normal_to=_names(normal["to"]))
            sub_raw = raw["submesh"]
            slab = None
            if sub_raw.get("slab") is not None:
                lo, hi = sub_raw["slab"]
                slab = (_names(lo), _names(hi))
                referenced.update(slab[0])
                referenced.update(slab[1])
            submesh = SubmeshSpec(joints=tuple(int(j) for j in sub_raw["joints"]), slab=slab)
            spec = MeasurementSpec(
                index=int(raw["index"]), name=str(raw["name"]), kind=kind,
                plane=plane, submesh=submesh)
            referenced.update(plane.position)
            referenced.update(plane.normal_from)
            referenced.update(plane.normal_to)
        else:
            raise InvariantViolation(f"unknown measurement kind {kind!r}")
        specs.append(spec)
    missing = sorted(referenced - set(landmarks))
    if missing:
        raise InvariantViolation(f"landmark table missing names required by specs: {missing}")
    return sorted(specs, key=lambda s: s.index)


def serialize_measurement_specs(specs: list[MeasurementSpec]) -> list[dict]:
    out = []
    for s in specs:
        if s.kind == CIRCUMFERENCE:
            normal = "up" if s.plane.uses_up else {
                "from": list(s.plane.normal_from), "to": list(s.plane.normal_to)}
            out.append({
                "index": s.index, "name": s.name, "kind": s.kind,
                "plane": {"position": list(s.plane.position), "normal": normal},
                "submesh": {
                    "joints": list(s.submesh.joints),
                    "slab": None if s.submesh.slab is None else
                    [list(s.submesh.slab[0]), list(s.submesh.slab[1])],
                },
            })
        else:
            out.append({
                "index": s.index, "name": s.name, "kind": s.kind,
                "endpoints": [list(s.endpoints[0]), list(s.endpoints[1])],
            })
    return out


def mirror_name(name: str) -> str | None:
    if name.endswith("_r"):
        return name[:-2] + "_l"
    if name.endswith("_l"):
        return name[:-2] + "_r"
    return None


def validate_full_table(specs: list[MeasurementSpec]) -> None:
    """A full anthro table has exactly 23 lengths and 13 circumferences and
    every right-side measurement mirrors a left-side one of the same kind."""
    lengths = [s for s in specs if s.kind in (LENGTH_EUCLIDEAN, LENGTH_VERTICAL)]
    circs = [s for s in specs if s.kind == CIRCUMFERENCE]
    if len(lengths) != 23 or len(circs) != 13:
        raise InvariantViolation(
            f"full table needs 23 lengths + 13 circumferences, got {len(lengths)} + {len(circs)}")
    by_name = {s.name: s for s in specs}
    for s in specs:
        twin = mirror_name(s.name)
        if twin is None:
            continue
        if twin not in by_name or by_name[twin].kind != s.kind:
            raise InvariantViolation(f"measurement {s.name!r} has no mirrored twin {twin!r}")


def landmark_position(vertices: np.ndarray, landmarks: dict[str, int],
                      names: tuple[str, ...]) -> np.ndarray:
    """Position of a landmark group: the mean of the named vertices (a single
    name is just that vertex)."""
    try:
        idx = [landmarks[n] for n in names]
    except KeyError as exc:
        raise UnknownLandmark(f"landmark {exc.args[0]!r} not in table") from exc
    return vertices[idx].mean(axis=0)


def measure_length(mesh: PosedMesh, spec: MeasurementSpec, model: BodyModel) -> float:
    """Euclidean distance between the two endpoint landmarks, or the absolute
    difference of their components along the up axis for the vertical kind.
    Millimeters."""
    if spec.kind not in (LENGTH_EUCLIDEAN, LENGTH_VERTICAL):
        raise InvariantViolation(f"{spec.name!r} is not a length spec")
    pa = landmark_position(mesh.vertices, model.landmarks, spec.endpoints[0])
    pb = landmark_position(mesh.vertices, model.landmarks, spec.endpoints[1])
    if spec.kind == LENGTH_VERTICAL:
        return float(abs((pa - pb) @ model.up_axis)) * MM_PER_M
    return float(np.linalg.norm(pa - pb)) * MM_PER_M


def convex_hull_2d(points: np.ndarray) -> np.ndarray:
    """Monotone-chain hull of (N, 2) points, counter-clockwise, collinear
    points dropped. Returns indices into ``points``."""
    n = points.shape[0]
    if n < 3:
        return np.arange(n)
    pts = sorted(zip(points[:, 0].tolist(), points[:, 1].tolist(), range(n)))

    def chain(seq):
        out = []
        for x, y, i in seq:
            while len(out) >= 2:
                ox, oy, _ = out[-2]
                ax, ay, _ = out[-1]
                if (ax - ox) * (y - oy) - (ay - oy) * (x - ox) <= 0.0:
                    out.pop()
                else:
                    break
            out.append((x, y, i))
        return out

    lower = chain(pts)
    upper = chain(pts[::-1])
    return np.array([i for _, _, i in lower[:-1] + upper[:-1]], dtype=np.int64)


def polygon_perimeter(points: np.ndarray) -> float:
    """Closed perimeter of an ordered 2D polygon."""
    if points.shape[0] < 2:
        return 0.0
    return float(np.linalg.norm(np.diff(np.vstack([points, points[:1]]), axis=0), axis=1).sum())


def _cross3(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.array([a[1] * b[2] - a[2] * b[1],
                     a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]])


def _plane_frame(normal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic orthonormal in-plane basis for a unit normal."""
    seed = np.zeros(3)
    seed[int(np.argmin(np.abs(normal)))] = 1.0
    e1 = _cross3(normal, seed)
    e1 /= np.linalg.norm(e1)
    e2 = _cross3(normal, e1)
    return e1, e2


def plane_section_points(vertices: np.ndarray, faces: np.ndarray,
                         origin: np.ndarray, normal: np.ndarray) -> np.ndarray:
    """Exact triangle/plane intersection points over the given faces.

    Covers the crossing case (one vertex on one side, two on the other), the
    on-vertex case, and edges lying exactly in the plane. Tangent-only contact
    does not count as an intersection.
    """
    if faces.shape[0] == 0:
        return np.empty((0, 3))
    d = (vertices - origin) @ normal
    fd = d[faces]                      # (F, 3)
    pos = fd > _ON_PLANE
    neg = fd < -_ON_PLANE
    zero = ~pos & ~neg
    crossing = pos.any(axis=1) & neg.any(axis=1)
    edge_on = (zero.sum(axis=1) == 2) & ~crossing & (pos.any(axis=1) | neg.any(axis=1))

    # duplicates (shared edges seen from both faces) are fine: the hull step
    # tolerates repeated points, so no dedup pass is needed here
    pieces = []
    if crossing.any():
        tri = vertices[faces[crossing]]        # (Fc, 3, 3)
        td = fd[crossing]
        for i, j in ((0, 1), (1, 2), (2, 0)):
            di, dj = td[:, i], td[:, j]
            through = (di > _ON_PLANE) & (dj < -_ON_PLANE) | (di < -_ON_PLANE) & (dj > _ON_PLANE)
            if through.any():
                frac = di[through] / (di[through] - dj[through])
                a, b = tri[through, i], tri[through, j]
                pieces.append(a + frac[:, None] * (b - a))
        on_vertex = zero[crossing]
        if on_vertex.any():
            pieces.append(tri[on_vertex])
    if edge_on.any():
        tri = vertices[faces[edge_on]]
        pieces.append(tri[zero[edge_on]])
    if not pieces:
        return np.empty((0, 3))
    return np.concatenate(pieces, axis=0)


class Measurer:
    """Binds a model's landmark table and measurement specs. Precomputes the
    shape-independent pieces: per-spec dominant-skin-weight face candidates
    and landmark selector rows (so composite landmarks and all 23 lengths
    evaluate as plain matrix products)."""

    def __init__(self, model: BodyModel):
        if not model.measurement_specs:
            raise InvariantViolation("model asset carries no measurement table")
        self.model = model
        self.specs = model.measurement_specs
        self.names = tuple(s.name for s in self.specs)
        dominant = np.argmax(model.skin_weights, axis=1)
        num_v = model.num_vertices

        def selector(names: tuple[str, ...]) -> np.ndarray:
            row = np.zeros(num_v)
            try:
                idx = [model.landmarks[n] for n in names]
            except KeyError as exc:
                raise UnknownLandmark(f"landmark {exc.args[0]!r} not in table") from exc
            row[idx] = 1.0 / len(idx)
            return row

        length_rows_a, length_rows_b, vertical, slots = [], [], [], []
        self._circs: dict[int, dict] = {}
        for k, spec in enumerate(self.specs):
            if spec.kind != CIRCUMFERENCE:
                length_rows_a.append(selector(spec.endpoints[0]))
                length_rows_b.append(selector(spec.endpoints[1]))
                vertical.append(spec.kind == LENGTH_VERTICAL)
                slots.append(k)
                continue
            in_set = np.isin(dominant, np.asarray(spec.submesh.joints, dtype=np.int64))
            keep = in_set[model.faces].all(axis=1)
            entry = {
                "slot": k,
                "spec": spec,
                "faces": model.faces[keep],
                "origin": selector(spec.plane.position),
                "normal": None if spec.plane.uses_up else
                (selector(spec.plane.normal_from), selector(spec.plane.normal_to)),
                "slab": None if spec.submesh.slab is None else
                (selector(spec.submesh.slab[0]), selector(spec.submesh.slab[1])),
            }
            self._circs[spec.index] = entry
        self._len_a = np.stack(length_rows_a) if length_rows_a else np.zeros((0, num_v))
        self._len_b = np.stack(length_rows_b) if length_rows_b else np.zeros((0, num_v))
        self._len_vertical = np.asarray(vertical, dtype=bool)
        self._len_slots = np.asarray(slots, dtype=np.int64)

    def _circumference_entry(self, verts: np.ndarray, entry: dict) -> float:
        model = self.model
        spec = entry["spec"]
        origin = entry["origin"] @ verts
        if entry["normal"] is None:
            normal = model.up_axis
        else:
            normal = entry["normal"][1] @ verts - entry["normal"][0] @ verts
            norm = np.linalg.norm(normal)
            if norm < 1e-9:
                raise DegeneratePlane(f"{spec.name}: coincident normal landmarks")
            normal = normal / norm

        faces = entry["faces"]
        if entry["slab"] is not None:
            lo = float(entry["slab"][0] @ verts @ model.up_axis)
            hi = float(entry["slab"][1] @ verts @ model.up_axis)
            lo, hi = min(lo, hi), max(lo, hi)
            h = verts @ model.up_axis
            inside = (h >= lo - _ON_PLANE) & (h <= hi + _ON_PLANE)
            faces = faces[inside[faces].all(axis=1)]

        points = plane_section_points(verts, faces, origin, normal)
        if points.shape[0] < 3:
            raise EmptyIntersection(f"{spec.name}: measuring plane misses the submesh")
        e1, e2 = _plane_frame(normal)
        rel = points - origin
        flat = np.column_stack([rel @ e1, rel @ e2])
        hull = convex_hull_2d(flat)
        return polygon_perimeter(flat[hull]) * MM_PER_M

    def circumference(self, mesh: PosedMesh, spec: MeasurementSpec) -> float:
        return self._circumference_entry(mesh.vertices, self._circs[spec.index])

    def measure(self, mesh: PosedMesh) -> AnthroVector:
        verts = mesh.vertices
        values = np.empty(len(self.specs))
        if self._len_slots.size:
            pa = self._len_a @ verts
            pb = self._len_b @ verts
            euclid = np.linalg.norm(pa - pb, axis=1)
            upward = np.abs((pa - pb) @ self.model.up_axis)
            values[self._len_slots] = np.where(self._len_vertical, upward, euclid) * MM_PER_M
        for entry in self._circs.values():
            values[entry["slot"]] = self._circumference_entry(verts, entry)
        return AnthroVector(names=self.names, values=values)


def measure_circumference(mesh: PosedMesh, spec: MeasurementSpec, model: BodyModel,
                          measurer: Measurer | None = None) -> float:
    """Planar-section circumference in millimeters; see module docstring for
    the pipeline."""
    if spec.kind != CIRCUMFERENCE:
        raise InvariantViolation(f"{spec.name!r} is not a circumference spec")
    return (measurer or Measurer(model)).circumference(mesh, spec)


def b2a(model: BodyModel, shape: ShapeParams, measurer: Measurer | None = None) -> AnthroVector:
    """Measure the T-pose mesh generated from the given shape coefficients:
    rest mesh, then every table spec in index order. Deterministic."""
    if not np.all(np.isfinite(shape.beta)):
        raise NonFiniteInput("beta contains non-finite values")
    mesh = shaped_template(model, shape)
    return (measurer or Measurer(model)).measure(mesh)


def b2a_batch(model: BodyModel, betas: np.ndarray, measurer: Measurer | None = None) -> np.ndarray:
    """Measurements for a batch of shapes, (N, B) -> (N, M). Matches b2a
    row by row."""
    from .model import shaped_vertices_batch

    measurer = measurer or Measurer(model)
    verts = shaped_vertices_batch(model, betas)
    out = np.empty((verts.shape[0], len(measurer.specs)))
    joints = None
    for n in range(verts.shape[0]):
        mesh = PosedMesh(vertices=verts[n], joints=joints)
        out[n] = measurer.measure(mesh).values
    return out
