"""Synthetic fixture generator used by examples and the test suite itself."""

from __future__ import annotations

import io

import numpy as np
import pytest

from spindesign.dataset import ALL_COLUMNS, load_dataset
from spindesign.synthetic import generate_frame, true_diameter, write_fixture


def test_columns_match_schema():
    frame = generate_frame(50, seed=0)
    assert list(frame.columns) == list(ALL_COLUMNS)
    assert len(frame) == 50


def test_deterministic_given_seed():
    a = generate_frame(80, seed=3)
    b = generate_frame(80, seed=3)
    assert a.equals(b)
    c = generate_frame(80, seed=4)
    assert not a.equals(c)


def test_loads_cleanly():
    frame = generate_frame(200, seed=1)
    ds = load_dataset(io.StringIO(frame.to_csv(index=False)))
    assert len(ds) == 200
    assert ds.report.total_dropped == 0
    assert len(ds.polymers()) >= 5


def test_missingness_present_but_bounded():
    frame = generate_frame(500, seed=2, missing_rate=0.05)
    missing = frame[["rotation_speed", "temperature", "humidity"]].isna().mean()
    assert (missing > 0).all()
    assert (missing < 0.15).all()


def test_noise_controls_spread():
    quiet = generate_frame(300, seed=5, noise=0.01)
    loud = generate_frame(300, seed=5, noise=0.5)
    # identical settings and noise draws, so the per-row log ratio isolates
    # the noise scale: sd(log ratio) = (0.5 - 0.01) * sd(z)
    ratio = np.log(loud["fiber_diameter"] / quiet["fiber_diameter"])
    assert ratio.std() > 0.3


def test_true_diameter_positive_and_varies():
    frame = generate_frame(100, seed=6)
    noiseless = [
        true_diameter(
            row["polymer"],
            {
                row[f"solvent_{j}"]: row[f"solvent{j}_ratio"]
                for j in (1, 2, 3)
                if row[f"solvent_{j}"]
            },
            row["solution_concentration"],
            row["needle_diameter"],
            0.0 if np.isnan(row["rotation_speed"]) else row["rotation_speed"],
            row["voltage"],
            row["flow_rate"],
            row["distance"],
            25.0 if np.isnan(row["temperature"]) else row["temperature"],
            45.0 if np.isnan(row["humidity"]) else row["humidity"],
        )
        for _, row in frame.iterrows()
    ]
    noiseless = np.asarray(noiseless)
    assert (noiseless > 0).all()
    assert len(np.unique(noiseless)) > 50


def test_write_fixture(tmp_path):
    path = tmp_path / "fixture.csv"
    frame = write_fixture(str(path), 60, seed=7)
    assert path.exists()
    assert len(frame) == 60
    ds = load_dataset(path)
    assert len(ds) == 60
