"""Shape-coefficient distributions fitted from a corpus, synthetic shape
sampling, and measurement/shape training-pair generation.

Randomness runs on a Philox counter-based generator so datasets reproduce
bit-identically for a given 64-bit seed, on any platform.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidConfig, TooFewSamples
from .measure import AnthroVector, Measurer, b2a_batch
from .model import BodyModel, ShapeParams

CORPUS, NORMAL, UNIFORM = "corpus", "normal", "uniform"

TRAIN_FRACTION, TEST_FRACTION = 0.80, 0.15   # the remaining 5% is validation


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


@dataclass
class ShapeDistribution:
    """Per-dimension marginals of a shape corpus (no covariance modeling)."""

    mean: np.ndarray
    std: np.ndarray
    min: np.ndarray
    max: np.ndarray
    source_count: int
    source: np.ndarray | None = field(default=None, repr=False)

    @property
    def beta_dim(self) -> int:
        return self.mean.shape[0]

    def to_json(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
            "min": self.min.tolist(),
            "max": self.max.tolist(),
            "source_count": self.source_count,
        }

    @classmethod
    def from_json(cls, data: dict) -> "ShapeDistribution":
        return cls(
            mean=np.asarray(data["mean"], dtype=np.float64),
            std=np.asarray(data["std"], dtype=np.float64),
            min=np.asarray(data["min"], dtype=np.float64),
            max=np.asarray(data["max"], dtype=np.float64),
            source_count=int(data["source_count"]),
        )


@dataclass
class SampleConfig:
    kind: str
    count: int
    seed: int = 0
    alpha: float = 1.0

    def __post_init__(self):
        if self.kind not in (CORPUS, NORMAL, UNIFORM):
            raise InvalidConfig(f"unknown sampling kind {self.kind!r}")
        if self.count < 1:
            raise InvalidConfig("count must be >= 1")
        if self.alpha < 1.0:
            raise InvalidConfig("interval/sigma stretch alpha must be >= 1")


def fit_distribution(betas: np.ndarray, keep_source: bool = True) -> ShapeDistribution:
    """Per-dimension sample mean, unbiased std, min and max of an (N, B)
    corpus."""
    betas = np.asarray(betas, dtype=np.float64)
    if betas.ndim != 2 or betas.shape[0] < 2:
        raise TooFewSamples("need at least 2 corpus rows to fit a distribution")
    return ShapeDistribution(
        mean=betas.mean(axis=0),
        std=betas.std(axis=0, ddof=1),
        min=betas.min(axis=0),
        max=betas.max(axis=0),
        source_count=betas.shape[0],
        source=betas.copy() if keep_source else None,
    )


def sample_shapes(dist: ShapeDistribution, cfg: SampleConfig,
                  rng: np.random.Generator | None = None) -> np.ndarray:
    """Draw (count, B) shape rows. Normal: per-dim N(mean, (alpha*std)^2).
    Uniform: per-dim over [min, max] stretched about the interval midpoint by
    alpha. Corpus: rows resampled from the fitted corpus."""
    rng = rng_for(cfg.seed) if rng is None else rng
    if cfg.kind == NORMAL:
        return rng.normal(dist.mean, cfg.alpha * dist.std, size=(cfg.count, dist.beta_dim))
    if cfg.kind == UNIFORM:
        mid = 0.5 * (dist.min + dist.max)
        half = 0.5 * (dist.max - dist.min) * cfg.alpha
        return rng.uniform(mid - half, mid + half, size=(cfg.count, dist.beta_dim))
    if dist.source is None:
        raise InvalidConfig("corpus sampling needs a distribution fitted with keep_source=True")
    rows = rng.integers(0, dist.source.shape[0], size=cfg.count)
    return dist.source[rows].copy()


def split_corpus(betas: np.ndarray, seed: int) -> dict[str, np.ndarray]:
    """Seeded-shuffle 80/15/5 train/test/val split."""
    betas = np.asarray(betas, dtype=np.float64)
    order = rng_for(seed).permutation(betas.shape[0])
    n_train = int(round(TRAIN_FRACTION * betas.shape[0]))
    n_test = int(round(TEST_FRACTION * betas.shape[0]))
    return {
        "train": betas[order[:n_train]],
        "test": betas[order[n_train:n_train + n_test]],
        "val": betas[order[n_train + n_test:]],
    }


def generate_dataset(body: BodyModel, dist: ShapeDistribution, cfg: SampleConfig,
                     measurer: Measurer | None = None):
    """Lazily yield (AnthroVector, ShapeParams) pairs for sampled shapes;
    consuming the stream equals generating it eagerly for the same seed."""
    measurer = measurer or Measurer(body)
    betas = sample_shapes(dist, cfg)
    for n in range(betas.shape[0]):
        values = b2a_batch(body, betas[n:n + 1], measurer)[0]
        yield AnthroVector(names=measurer.names, values=values), ShapeParams(betas[n])


def generate_dataset_arrays(body: BodyModel, dist: ShapeDistribution, cfg: SampleConfig,
                            measurer: Measurer | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Eager variant: (A (N, M) in mm, betas (N, B))."""
    measurer = measurer or Measurer(body)
    betas = sample_shapes(dist, cfg)
    return b2a_batch(body, betas, measurer), betas


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def save_distribution(path, dist: ShapeDistribution) -> None:
    Path(path).write_text(json.dumps(dist.to_json(), sort_keys=True) + "\n")


def load_distribution(path) -> ShapeDistribution:
    return ShapeDistribution.from_json(json.loads(Path(path).read_text()))


def save_dataset_csv(path, names: tuple[str, ...], measurements: np.ndarray,
                     betas: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(names) + [f"beta_{i}" for i in range(betas.shape[1])])
        for a_row, b_row in zip(measurements, betas):
            writer.writerow([repr(float(x)) for x in a_row] + [repr(float(x)) for x in b_row])


def load_dataset_csv(path) -> tuple[tuple[str, ...], np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    n_beta = sum(1 for h in header if h.startswith("beta_"))
    names = tuple(header[:len(header) - n_beta])
    data = np.asarray(rows[1:], dtype=np.float64)
    return names, data[:, :len(names)], data[:, len(names):]


def save_beta_csv(path, betas: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"beta_{i}" for i in range(betas.shape[1])])
        for row in betas:
            writer.writerow([repr(float(x)) for x in row])


def load_beta_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return np.asarray(rows[1:], dtype=np.float64)
