"""Measurement-to-shape regressors: train, persist, apply, and evaluate the
cycle consistency of the learned map against the deterministic mesh measurer.

Two regressor kinds exist: a small tanh network and per-output-dimension
epsilon-SVR with an RBF kernel. Both consume standardized measurement vectors
(millimeters in, shape coefficients out) and are gender-specific.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bmf, mlp, sampling, svr
from .errors import GenderMismatch, InvalidConfig, NonFiniteInput, TensorShapeMismatch
from .measure import AnthroVector, Measurer, b2a_batch
from .model import BodyModel, ShapeParams

NN, SVR = "nn", "svr"


@dataclass
class InputScaler:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, x: np.ndarray) -> "InputScaler":
        x = np.asarray(x, dtype=np.float64)
        std = x.std(axis=0)
        if np.any(std <= 0):
            raise InvalidConfig("input features with zero variance cannot be standardized")
        return cls(mean=x.mean(axis=0), std=std)

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.std

    def inverse(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=np.float64) * self.std + self.mean


@dataclass
class NNTrainConfig:
    sample_kind: str = sampling.UNIFORM
    alpha: float = 1.0
    seed: int = 0
    warmup: int = 1024                 # scaler-fitting sample
    width: int = 330
    depth: int = 4
    learning_rate: float = 1e-3
    batch_size: int = 256
    iterations: int = 50_000

    def mlp_config(self) -> mlp.MLPConfig:
        return mlp.MLPConfig(width=self.width, depth=self.depth,
                             learning_rate=self.learning_rate,
                             batch_size=self.batch_size, iterations=self.iterations,
                             seed=self.seed)


@dataclass
class SVRTrainConfig:
    C: float = svr.DEFAULT_C
    epsilon: float = svr.DEFAULT_EPSILON
    gamma: float | None = None
    tol: float = 1e-3
    max_iter: int | None = None

    def svr_config(self) -> svr.SVRConfig:
        return svr.SVRConfig(C=self.C, epsilon=self.epsilon, gamma=self.gamma,
                             tol=self.tol, max_iter=self.max_iter)


@dataclass
class A2BModel:
    kind: str
    gender: str
    scaler: InputScaler
    beta_dim: int
    measurement_names: tuple[str, ...]
    net: mlp.MLP | None = None
    svr_fits: list[svr.SVRFit] = field(default_factory=list)
    train_config: dict = field(default_factory=dict)

    def predict_batch(self, a: np.ndarray) -> np.ndarray:
        a = np.atleast_2d(np.asarray(a, dtype=np.float64))
        if not np.all(np.isfinite(a)):
            raise NonFiniteInput("measurement vector contains non-finite values")
        if a.shape[1] != self.scaler.mean.shape[0]:
            raise TensorShapeMismatch(
                f"expected {self.scaler.mean.shape[0]} measurements, got {a.shape[1]}")
        z = self.scaler.transform(a)
        if self.kind == NN:
            return self.net.forward(z)
        out = np.empty((a.shape[0], self.beta_dim))
        for d, fit in enumerate(self.svr_fits):
            out[:, d] = fit.predict(z)
        return out


def predict(model: A2BModel, a: AnthroVector | np.ndarray) -> ShapeParams:
    """Map one measurement vector to shape coefficients. Deterministic."""
    values = a.values if isinstance(a, AnthroVector) else np.asarray(a, dtype=np.float64)
    return ShapeParams(model.predict_batch(values.reshape(1, -1))[0])


def train_nn(body: BodyModel, dist: sampling.ShapeDistribution,
             cfg: NNTrainConfig) -> A2BModel:
    """Fit the network on freshly sampled (measurements, shape) pairs drawn
    every iteration; the input scaler is fitted once on a warm-up sample."""
    measurer = Measurer(body)
    rng = sampling.rng_for(cfg.seed)
    warm_cfg = sampling.SampleConfig(kind=cfg.sample_kind, count=cfg.warmup,
                                     seed=cfg.seed, alpha=cfg.alpha)
    warm_betas = sampling.sample_shapes(dist, warm_cfg, rng=rng)
    scaler = InputScaler.fit(b2a_batch(body, warm_betas, measurer))

    net = mlp.MLP.init_glorot(cfg.mlp_config().layer_sizes(len(measurer.names), body.beta_dim),
                              rng)

    def batch(_k: int, size: int):
        draw = sampling.SampleConfig(kind=cfg.sample_kind, count=size,
                                     seed=cfg.seed, alpha=cfg.alpha)
        betas = sampling.sample_shapes(dist, draw, rng=rng)
        return scaler.transform(b2a_batch(body, betas, measurer)), betas

    mlp.train(net, batch, cfg.mlp_config())
    return A2BModel(kind=NN, gender=body.gender, scaler=scaler, beta_dim=body.beta_dim,
                    measurement_names=measurer.names, net=net,
                    train_config={"kind": NN, "sample_kind": cfg.sample_kind,
                                  "alpha": cfg.alpha, "seed": cfg.seed,
                                  "iterations": cfg.iterations,
                                  "batch_size": cfg.batch_size,
                                  "learning_rate": cfg.learning_rate,
                                  "width": cfg.width, "depth": cfg.depth})


def train_svr(dataset, cfg: SVRTrainConfig, gender: str = "neutral",
              measurement_names: tuple[str, ...] = ()) -> A2BModel:
    """Fit one epsilon-SVR per shape dimension on a fixed dataset. ``dataset``
    is (measurements (N, M), betas (N, B)) or a list of (AnthroVector,
    ShapeParams) pairs."""
    if isinstance(dataset, tuple):
        a, betas = dataset
    else:
        pairs = list(dataset)
        if not pairs:
            raise InvalidConfig("empty training dataset")
        a = np.stack([p[0].values for p in pairs])
        betas = np.stack([p[1].beta for p in pairs])
        if not measurement_names:
            measurement_names = pairs[0][0].names
    a = np.asarray(a, dtype=np.float64)
    betas = np.asarray(betas, dtype=np.float64)
    if a.shape[0] == 0:
        raise InvalidConfig("empty training dataset")
    scaler = InputScaler.fit(a)
    fits = svr.fit_multi_output(scaler.transform(a), betas, cfg.svr_config())
    return A2BModel(kind=SVR, gender=gender, scaler=scaler, beta_dim=betas.shape[1],
                    measurement_names=tuple(measurement_names) or tuple(
                        f"m{i}" for i in range(a.shape[1])),
                    svr_fits=fits,
                    train_config={"kind": SVR, "C": cfg.C, "epsilon": cfg.epsilon,
                                  "gamma": cfg.gamma, "tol": cfg.tol})


@dataclass
class A2BEvalReport:
    """Cycle-consistency errors: shape-coefficient MSE (the headline number
    is scaled by 1e3) and the mean absolute measurement error in mm after
    mapping predictions back through the mesh measurer."""

    beta_mse: float            # in units of 1e-3 (value = raw MSE * 1e3)
    beta_mse_raw: float
    anthro_mae_mm: float
    per_measurement_mae_mm: dict[str, float]
    samples: int

    def to_json(self) -> dict:
        return {
            "beta_mse_e3": self.beta_mse,
            "beta_mse_raw": self.beta_mse_raw,
            "anthro_mae_mm": self.anthro_mae_mm,
            "per_measurement_mae_mm": self.per_measurement_mae_mm,
            "samples": self.samples,
        }


def evaluate(a2b_model: A2BModel, body: BodyModel, test_betas: np.ndarray,
             measurer: Measurer | None = None) -> A2BEvalReport:
    """Cycle evaluation: measure each test shape, predict coefficients from
    the measurements, and compare both the coefficients and the re-measured
    meshes."""
    test_betas = np.atleast_2d(np.asarray(test_betas, dtype=np.float64))
    if test_betas.shape[0] == 0:
        raise InvalidConfig("empty test set")
    measurer = measurer or Measurer(body)
    a_true = b2a_batch(body, test_betas, measurer)
    pred = a2b_model.predict_batch(a_true)
    beta_mse_raw = float(np.mean((pred - test_betas) ** 2))
    a_pred = b2a_batch(body, pred, measurer)
    abs_err = np.abs(a_pred - a_true)
    return A2BEvalReport(
        beta_mse=beta_mse_raw * 1e3,
        beta_mse_raw=beta_mse_raw,
        anthro_mae_mm=float(abs_err.mean()),
        per_measurement_mae_mm={n: float(abs_err[:, k].mean())
                                for k, n in enumerate(measurer.names)},
        samples=test_betas.shape[0],
    )


def convert_gender(beta_src: ShapeParams, body_src: BodyModel, body_tgt: BodyModel,
                   a2b_tgt: A2BModel) -> ShapeParams:
    """Transport a shape across genders through its measurements: measure the
    source mesh, then apply the target gender's regressor."""
    if a2b_tgt.gender != body_tgt.gender:
        raise GenderMismatch(
            f"regressor is for {a2b_tgt.gender!r}, target body is {body_tgt.gender!r}")
    a = b2a_batch(body_src, beta_src.beta.reshape(1, -1))[0]
    return predict(a2b_tgt, a)


# ---------------------------------------------------------------------------
# persistence (A2B1 container)
# ---------------------------------------------------------------------------

def save_model(path: str | Path, model: A2BModel) -> None:
    header = {
        "version": 1,
        "kind": model.kind,
        "gender": model.gender,
        "beta_dim": model.beta_dim,
        "measurement_names": list(model.measurement_names),
        "config": model.train_config,
    }
    tensors: dict[str, np.ndarray] = {
        "scaler_mean": model.scaler.mean,
        "scaler_std": model.scaler.std,
    }
    if model.kind == NN:
        for k, (w, b) in enumerate(zip(model.net.weights, model.net.biases)):
            tensors[f"nn_w{k}"] = w
            tensors[f"nn_b{k}"] = b
        header["nn_layers"] = len(model.net.weights)
    else:
        header["svr_bias"] = [fit.bias for fit in model.svr_fits]
        header["svr_gamma"] = [fit.gamma for fit in model.svr_fits]
        for d, fit in enumerate(model.svr_fits):
            tensors[f"svr_support_{d}"] = fit.support_x
            tensors[f"svr_coef_{d}"] = fit.support_coef
    bmf.write_container(path, bmf.A2B_MAGIC, header, tensors)


def load_model(path: str | Path) -> A2BModel:
    header, tensors = bmf.read_container(path, bmf.A2B_MAGIC)
    scaler = InputScaler(mean=np.asarray(tensors["scaler_mean"], dtype=np.float64),
                         std=np.asarray(tensors["scaler_std"], dtype=np.float64))
    kind = header["kind"]
    beta_dim = int(header["beta_dim"])
    names = tuple(header.get("measurement_names", []))
    if kind == NN:
        weights, biases = [], []
        for k in range(int(header["nn_layers"])):
            weights.append(np.asarray(tensors[f"nn_w{k}"], dtype=np.float64))
            biases.append(np.asarray(tensors[f"nn_b{k}"], dtype=np.float64))
        net = mlp.MLP(weights, biases)
        return A2BModel(kind=NN, gender=header["gender"], scaler=scaler,
                        beta_dim=beta_dim, measurement_names=names, net=net,
                        train_config=header.get("config", {}))
    if kind != SVR:
        raise TensorShapeMismatch(f"unknown regressor kind {kind!r}")
    fits = []
    for d in range(beta_dim):
        fits.append(svr.SVRFit(
            support_x=np.asarray(tensors[f"svr_support_{d}"], dtype=np.float64),
            support_coef=np.asarray(tensors[f"svr_coef_{d}"], dtype=np.float64),
            bias=float(header["svr_bias"][d]),
            gamma=float(header["svr_gamma"][d])))
    return A2BModel(kind=SVR, gender=header["gender"], scaler=scaler,
                    beta_dim=beta_dim, measurement_names=names, svr_fits=fits,
                    train_config=header.get("config", {}))
