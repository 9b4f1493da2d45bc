import json
from pathlib import Path

import numpy as np
import pytest

from anthrofit import a2b, fixtures, measure, model, sampling

DATA = Path(__file__).parent / "data"


def toy_distribution(beta_dim: int = 4) -> sampling.ShapeDistribution:
    corpus = sampling.rng_for(7).uniform(-1.0, 1.0, size=(600, beta_dim))
    return sampling.fit_distribution(corpus)


def train_toy_svr(body, count=800, seed=11):
    measurer = measure.Measurer(body)
    dist = toy_distribution(body.beta_dim)
    data = sampling.generate_dataset_arrays(
        body, dist, sampling.SampleConfig(kind="uniform", count=count, seed=seed), measurer)
    return a2b.train_svr(data, a2b.SVRTrainConfig(), gender=body.gender,
                         measurement_names=measurer.names)


@pytest.fixture(scope="session")
def asset_dir(tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("assets")
    fixtures.write_toy_asset("cylinder", out / "cylinder16.bmf")
    fixtures.write_toy_asset("arm", out / "arm2.bmf")
    fixtures.write_toy_asset("arm", out / "arm2_pd.bmf", with_pose_dirs=True)
    fixtures.write_toy_asset("human", out / "human.bmf")
    fixtures.write_toy_asset("human", out / "human_female.bmf", gender="female")
    return out


@pytest.fixture(scope="session")
def cylinder_model(asset_dir):
    return model.load_model(asset_dir / "cylinder16.bmf")


@pytest.fixture(scope="session")
def arm_model(asset_dir):
    return model.load_model(asset_dir / "arm2.bmf")


@pytest.fixture(scope="session")
def arm_pd_model(asset_dir):
    return model.load_model(asset_dir / "arm2_pd.bmf")


@pytest.fixture(scope="session")
def human_model(asset_dir):
    return model.load_model(asset_dir / "human.bmf")


@pytest.fixture(scope="session")
def human_female_model(asset_dir):
    return model.load_model(asset_dir / "human_female.bmf")


@pytest.fixture(scope="session")
def human_measurer(human_model):
    return measure.Measurer(human_model)


@pytest.fixture(scope="session")
def golden():
    return json.loads((DATA / "golden_measurements.json").read_text())


@pytest.fixture(scope="session")
def toy_svr(human_model):
    return train_toy_svr(human_model)


@pytest.fixture(scope="session")
def toy_svr_female(human_female_model):
    return train_toy_svr(human_female_model)


def random_pose(m: model.BodyModel, rng: np.random.Generator,
                magnitude: float = 0.3) -> model.PoseParams:
    return model.PoseParams(
        global_orient=rng.uniform(-magnitude, magnitude, 3),
        body_pose=rng.uniform(-magnitude, magnitude, (m.num_joints - 1, 3)),
        translation=rng.uniform(-0.5, 0.5, 3),
    )
