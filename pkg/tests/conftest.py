"""Shared fixtures: a synthetic dataset on disk, its loaded form, and a
small trained model bundle reused across test modules."""

from __future__ import annotations

import numpy as np
import pandas as pd
import pytest

from spindesign.bundle import ModelBundle
from spindesign.chemistry import bundled_feasibility
from spindesign.dataset import OUTCOME_COLUMN, SpinDataset, load_dataset
from spindesign.learners import train
from spindesign.pipeline import apply_recipe, fit_recipe
from spindesign.synthetic import generate_frame


@pytest.fixture(scope="session")
def synthetic_frame() -> pd.DataFrame:
    return generate_frame(400, seed=7)


@pytest.fixture(scope="session")
def dataset_path(tmp_path_factory, synthetic_frame) -> str:
    path = tmp_path_factory.mktemp("data") / "spin.csv"
    synthetic_frame.to_csv(path, index=False)
    return str(path)


@pytest.fixture(scope="session")
def dataset(dataset_path) -> SpinDataset:
    return load_dataset(dataset_path)


@pytest.fixture(scope="session")
def tables():
    return bundled_feasibility()


@pytest.fixture(scope="session")
def knn_bundle(dataset) -> ModelBundle:
    """Memorizing predictor: k=1 nearest neighbour over the full dataset."""
    frame = dataset.frame
    recipe = fit_recipe(frame)
    X = apply_recipe(recipe, frame)
    y = frame[OUTCOME_COLUMN].to_numpy(dtype=float)
    learner = train("knn", {"k": 1}, X, y, seed=0)
    return ModelBundle(recipe=recipe, learner=learner, metadata={"kind": "knn"})


@pytest.fixture(scope="session")
def forest_bundle(dataset) -> ModelBundle:
    frame = dataset.frame
    recipe = fit_recipe(frame)
    X = apply_recipe(recipe, frame)
    y = frame[OUTCOME_COLUMN].to_numpy(dtype=float)
    learner = train("random_forest", {"n_trees": 30, "mtry": 6}, X, y, seed=3)
    return ModelBundle(recipe=recipe, learner=learner, metadata={"kind": "random_forest"})


def small_frame() -> pd.DataFrame:
    """Tiny hand-written dataset for exact-value tests."""
    rows = [
        # doi, polymer, s1, s2, s3, r1, r2, r3, conc, needle, collector,
        # rotation, voltage, flow, distance, temp, humidity, diameter
        ("10.1/a", "PAN", "DMF", "", "", 100.0, 0.0, 0.0, 12.0, 0.6, "drum",
         300.0, 15.0, 1.0, 15.0, 25.0, 40.0, 250.0),
        ("10.1/b", "PAN", "DMF", "", "", 100.0, 0.0, 0.0, 10.0, 0.6, "plate",
         0.0, 18.0, 0.8, 12.0, 22.0, 45.0, 180.0),
        ("10.1/c", "PVA", "Water", "", "", 100.0, 0.0, 0.0, 8.0, 0.5, "drum",
         500.0, 20.0, 0.5, 10.0, 25.0, 50.0, 320.0),
        ("10.1/d", "PVA", "Water", "Ethanol", "", 80.0, 20.0, 0.0, 9.0, 0.5,
         "drum", 500.0, 22.0, 0.5, 10.0, 27.0, 55.0, 410.0),
        ("10.1/e", "PCL", "Chloroform", "Methanol", "", 75.0, 25.0, 0.0, 14.0,
         0.8, "plate", 0.0, 12.0, 2.0, 18.0, 24.0, 35.0, 900.0),
        ("10.1/f", "PCL", "Chloroform", "Methanol", "", 70.0, 30.0, 0.0, 16.0,
         0.8, "plate", 0.0, 14.0, 2.5, 20.0, 26.0, 30.0, 1100.0),
    ]
    columns = [
        "doi", "polymer", "solvent_1", "solvent_2", "solvent_3",
        "solvent1_ratio", "solvent2_ratio", "solvent3_ratio",
        "solution_concentration", "needle_diameter", "collector_type",
        "rotation_speed", "voltage", "flow_rate", "distance",
        "temperature", "humidity", "fiber_diameter",
    ]
    return pd.DataFrame(rows, columns=columns)


@pytest.fixture()
def tiny_frame() -> pd.DataFrame:
    return small_frame()


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
