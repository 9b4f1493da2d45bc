"""Per-person dispersion statistics over sequences: standard deviation,
relative standard deviation and relative range of measurements (or shape
coefficients), averaged between left/right body parts and across persons.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import IndexOutOfRange, TooFewSamples
from .measure import mirror_name

CM_PER_MM = 0.1


@dataclass
class MeasureStats:
    sigma_cm: float
    rel_sigma_percent: float
    rel_range_percent: float


@dataclass
class StatsReport:
    per_measurement: dict[str, MeasureStats]
    beta_sigma_mean: float | None
    persons_covered: int
    frames_covered: int

    def to_json(self) -> dict:
        return {
            "per_measurement": {
                name: {"sigma_cm": s.sigma_cm,
                       "rel_sigma_percent": s.rel_sigma_percent,
                       "rel_range_percent": s.rel_range_percent}
                for name, s in self.per_measurement.items()},
            "beta_sigma_mean": self.beta_sigma_mean,
            "persons_covered": self.persons_covered,
            "frames_covered": self.frames_covered,
        }

    def format_table(self) -> str:
        lines = [f"{'Measure':<24} {'sigma':>9} {'r. sigma':>10} {'r. range':>10}"]
        lines.append("-" * len(lines[0]))
        for name, s in self.per_measurement.items():
            lines.append(f"{name:<24} {s.sigma_cm:>9.2f} "
                         f"{s.rel_sigma_percent:>9.2f}% {s.rel_range_percent:>9.2f}%")
        if self.beta_sigma_mean is not None:
            lines.append(f"{'beta param.':<24} {self.beta_sigma_mean:>9.2f}")
        return "\n".join(lines)


def _person_stats(values: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(sigma, rel sigma, rel range) per column for one person's samples.

    Columns whose samples are bit-identical get exactly 0 (the mean of n
    identical floats rounds, which would otherwise leave ~1e-16 residue)."""
    vmax = values.max(axis=0)
    vmin = values.min(axis=0)
    sigma = np.where(vmax == vmin, 0.0, values.std(axis=0, ddof=1))
    avg = values.mean(axis=0)
    safe = np.where(np.abs(avg) > 1e-12, avg, 1.0)
    rel_sigma = sigma / np.abs(safe)
    rel_range = (vmax - vmin) / np.abs(safe)
    return sigma, rel_sigma, rel_range


def consistency_stats(samples: dict[str, np.ndarray],
                      names: tuple[str, ...] | None = None,
                      kind: str = "measurements") -> StatsReport:
    """Dispersion report over ``{person_id: (frames, columns) array}``.

    Measurements come in millimeters and are reported in centimeters with
    relative statistics in percent; left/right column pairs are averaged into
    one row. Shape-coefficient input (kind="betas") reports a single mean
    standard deviation over all dimensions.
    """
    if not samples:
        raise TooFewSamples("no persons given")
    frames_total = 0
    sig_rows, rel_rows, rng_rows = [], [], []
    for person, values in samples.items():
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] < 2:
            raise TooFewSamples(f"person {person!r} has fewer than 2 samples")
        frames_total += values.shape[0]
        sigma, rel_sigma, rel_range = _person_stats(values)
        sig_rows.append(sigma)
        rel_rows.append(rel_sigma)
        rng_rows.append(rel_range)
    sigma = np.mean(sig_rows, axis=0)
    rel_sigma = np.mean(rel_rows, axis=0)
    rel_range = np.mean(rng_rows, axis=0)

    if kind == "betas":
        return StatsReport(per_measurement={}, beta_sigma_mean=float(sigma.mean()),
                           persons_covered=len(samples), frames_covered=frames_total)

    if names is None:
        names = tuple(f"m{i}" for i in range(sigma.shape[0]))
    index = {n: i for i, n in enumerate(names)}
    per: dict[str, MeasureStats] = {}
    done = set()
    for name in names:
        if name in done:
            continue
        twin = mirror_name(name)
        cols = [index[name]]
        label = name
        if twin and twin in index:
            cols.append(index[twin])
            done.add(twin)
            label = name[:-2]      # strip the _r/_l suffix for the paired row
        done.add(name)
        per[label] = MeasureStats(
            sigma_cm=float(np.mean(sigma[cols])) * CM_PER_MM,
            rel_sigma_percent=float(np.mean(rel_sigma[cols])) * 100.0,
            rel_range_percent=float(np.mean(rel_range[cols])) * 100.0,
        )
    return StatsReport(per_measurement=per, beta_sigma_mean=None,
                       persons_covered=len(samples), frames_covered=frames_total)


def bone_lengths(keypoints: np.ndarray, skeleton: list[tuple[int, int]],
                 names: list[str] | None = None) -> dict[str, float]:
    """Euclidean distances in centimeters for the given joint-index pairs.
    Zero-length bones are allowed (coincident joints)."""
    keypoints = np.asarray(keypoints, dtype=np.float64)
    out = {}
    for k, (a, b) in enumerate(skeleton):
        if not (0 <= a < keypoints.shape[0] and 0 <= b < keypoints.shape[0]):
            raise IndexOutOfRange(f"bone ({a}, {b}) exceeds {keypoints.shape[0]} keypoints")
        name = names[k] if names else f"bone_{a}_{b}"
        out[name] = float(np.linalg.norm(keypoints[a] - keypoints[b])) * 100.0
    return out


# ---------------------------------------------------------------------------
# file ingestion: CSV or JSONL with a person id per row
# ---------------------------------------------------------------------------

def load_samples_csv(path: str | Path) -> tuple[dict[str, np.ndarray], tuple[str, ...]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    if header[0] != "person_id":
        raise TooFewSamples("first CSV column must be person_id")
    names = tuple(header[1:])
    buckets: dict[str, list[list[float]]] = {}
    for row in rows[1:]:
        buckets.setdefault(row[0], []).append([float(x) for x in row[1:]])
    return {p: np.asarray(v) for p, v in buckets.items()}, names


def load_samples_jsonl(path: str | Path) -> tuple[dict[str, np.ndarray], tuple[str, ...]]:
    """Rows carry either a named-value dict (``values``) or a plain vector
    (``values``/``beta``). Rows without one (e.g. ``present: false`` fit
    frames) are skipped."""
    buckets: dict[str, list] = {}
    names: tuple[str, ...] | None = None
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        person = str(obj.get("person_id", "0"))
        if "values" in obj and isinstance(obj["values"], dict):
            if names is None:
                names = tuple(obj["values"].keys())
            buckets.setdefault(person, []).append([float(obj["values"][n]) for n in names])
        else:
            row = obj.get("values", obj.get("beta"))
            if row is None:
                continue
            buckets.setdefault(person, []).append([float(x) for x in row])
    if names is None:
        width = len(next(iter(buckets.values()))[0]) if buckets else 0
        names = tuple(f"m{i}" for i in range(width))
    return {p: np.asarray(v) for p, v in buckets.items()}, names
