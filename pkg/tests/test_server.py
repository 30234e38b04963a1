"""HTTP API tests run against the app in-process."""

from __future__ import annotations

import time

import pytest
from fastapi.testclient import TestClient

from spindesign.server import create_app
from spindesign.synthetic import generate_frame

_POLL_DEADLINE = 120.0


def _wait(client: TestClient, job_id: str) -> dict:
    deadline = time.monotonic() + _POLL_DEADLINE
    while time.monotonic() < deadline:
        payload = client.get(f"/jobs/{job_id}").json()
        if payload["status"] in ("done", "failed"):
            return payload
        time.sleep(0.05)
    raise TimeoutError(f"job {job_id} still {payload['status']}")


@pytest.fixture(scope="module")
def client():
    with TestClient(create_app()) as c:
        yield c


@pytest.fixture(scope="module")
def csv_bytes():
    return generate_frame(300, seed=9).to_csv(index=False).encode()


@pytest.fixture(scope="module")
def dataset_id(client, csv_bytes):
    response = client.post("/datasets?name=demo", content=csv_bytes)
    assert response.status_code == 201, response.text
    return response.json()["dataset_id"]


@pytest.fixture(scope="module")
def model_id(client, dataset_id):
    response = client.post(
        "/train",
        json={
            "dataset_id": dataset_id,
            "learners": ["linear", "knn"],
            "k": 3,
            "n_train": 150,
            "seed": 1,
        },
    )
    assert response.status_code == 202, response.text
    job = _wait(client, response.json()["job_id"])
    assert job["status"] == "done", job["error"]
    return job["result"]["model_id"]


def test_health(client):
    payload = client.get("/health").json()
    assert payload["status"] == "ok"
    assert payload["version"]


def test_upload_reports_and_dedups(client, csv_bytes, dataset_id):
    again = client.post("/datasets", content=csv_bytes)
    assert again.status_code == 201
    payload = again.json()
    assert payload["reused"] is True
    assert payload["dataset_id"] == dataset_id
    assert payload["report"]["rows_out"] == 300


def test_upload_empty_body_rejected(client):
    response = client.post("/datasets", content=b"")
    assert response.status_code == 422
    detail = response.json()["detail"]
    assert detail["code"] == "empty_upload"
    assert detail["message"]


def test_upload_non_utf8_rejected(client):
    response = client.post("/datasets", content=b"\xff\xfe\x00broken")
    assert response.status_code == 422
    assert response.json()["detail"]["code"] == "bad_encoding"


def test_upload_without_required_headers_rejected(client):
    response = client.post("/datasets", content=b"a,b\n1,2\n")
    assert response.status_code == 422
    assert response.json()["detail"]["code"] == "ingest_error"


def test_dataset_listing_and_detail(client, dataset_id):
    listing = client.get("/datasets").json()
    assert any(item["dataset_id"] == dataset_id for item in listing)
    entry = next(item for item in listing if item["dataset_id"] == dataset_id)
    assert entry["rows"] == 300
    assert entry["name"] == "demo"

    detail = client.get(f"/datasets/{dataset_id}").json()
    assert detail["fingerprint"] == entry["fingerprint"]
    assert detail["report"]["rows_in"] == 300


def test_unknown_dataset_is_404_with_code(client):
    response = client.get("/datasets/nope")
    assert response.status_code == 404
    assert response.json()["detail"]["code"] == "dataset_not_found"


def test_summary_json_and_csv(client, dataset_id):
    rows = client.get(f"/datasets/{dataset_id}/summary").json()
    assert rows[-1]["polymer"] == "TOTAL"
    assert all("median" in row for row in rows)

    response = client.get(f"/datasets/{dataset_id}/summary?format=csv")
    assert response.headers["content-type"].startswith("text/csv")
    assert response.text.splitlines()[0].startswith("polymer,mean")


def test_polymer_counts_sorted(client, dataset_id):
    payload = client.get(f"/datasets/{dataset_id}/polymers").json()
    names = [item["name"] for item in payload]
    assert names == sorted(names)
    assert sum(item["rows"] for item in payload) == 300


def test_sample_random_with_export(client, dataset_id):
    response = client.post(
        f"/datasets/{dataset_id}/sample", json={"method": "random", "n": 20, "seed": 4}
    )
    assert response.status_code == 200, response.text
    payload = response.json()
    assert payload["selected"] == 20
    export = client.get(f"/exports/{payload['plan_export']}")
    assert export.status_code == 200
    assert export.headers["content-type"].startswith("text/csv")
    assert len(export.text.strip().splitlines()) == 21


def test_sample_balanced_reports_allocations(client, dataset_id):
    response = client.post(
        f"/datasets/{dataset_id}/sample",
        json={"method": "balanced", "n": 24, "seed": 2},
    )
    assert response.status_code == 200, response.text
    payload = response.json()
    assert sum(payload["allocations"].values()) == 24


def test_sample_unknown_method_is_validation_error(client, dataset_id):
    response = client.post(
        f"/datasets/{dataset_id}/sample", json={"method": "magic", "n": 5}
    )
    assert response.status_code == 422
    assert response.json()["detail"]["code"] == "validation_error"


def test_sample_oversized_budget_is_sampling_error(client, dataset_id):
    response = client.post(
        f"/datasets/{dataset_id}/sample", json={"method": "random", "n": 100000}
    )
    assert response.status_code == 422
    assert response.json()["detail"]["code"] == "sampling_error"


def test_feasibility_status(client):
    payload = client.get("/feasibility").json()
    assert set(payload["ratings"]) >= {"OK", "COND", "NO"}
    assert payload["pairs"] > 0
    assert payload["strictness_thresholds"] == {"strict": 0.0, "balanced": 20.0, "lax": 30.0}


def test_train_rejects_unsupported_fold_count(client, dataset_id):
    response = client.post("/train", json={"dataset_id": dataset_id, "k": 4})
    assert response.status_code == 422
    detail = response.json()["detail"]
    assert detail["code"] == "validation_error"
    assert detail["errors"]


def test_train_unknown_dataset_404(client):
    response = client.post("/train", json={"dataset_id": "nope"})
    assert response.status_code == 404
    assert response.json()["detail"]["code"] == "dataset_not_found"


def test_train_job_failure_is_reported(client, dataset_id):
    response = client.post(
        "/train",
        json={"dataset_id": dataset_id, "learners": ["linear"], "k": 3, "n_train": 299},
    )
    assert response.status_code == 202
    job = _wait(client, response.json()["job_id"])
    assert job["status"] == "failed"
    assert job["error"]["code"] == "train_failed"
    assert job["error"]["message"]


def test_unknown_job_404(client):
    response = client.get("/jobs/j999")
    assert response.status_code == 404
    assert response.json()["detail"]["code"] == "job_not_found"


def test_model_listing_and_detail(client, model_id, dataset_id):
    listing = client.get("/models").json()
    assert any(item["model_id"] == model_id for item in listing)

    detail = client.get(f"/models/{model_id}").json()
    assert detail["dataset_id"] == dataset_id
    meta = detail["metadata"]
    assert "eval_report" not in meta
    assert meta["winner"]["learner"] in ("linear", "knn")
    assert meta["config"]["k"] == 3


def test_model_metrics_rows(client, model_id):
    report = client.get(f"/models/{model_id}/metrics").json()
    assert len(report["rows"]) == 2
    for row in report["rows"]:
        assert row["learner"] in ("linear", "knn")
        assert row["cv"]["rmse"] > 0


def test_model_diagnostics_payload(client, model_id):
    payload = client.get(f"/models/{model_id}/diagnostics").json()
    assert isinstance(payload["flags"], list)
    assert len(payload["observed"]) == len(payload["predicted"])
    assert len(payload["qq_theoretical"]) == len(payload["qq_sample"])


def test_model_importance(client, model_id):
    payload = client.get(f"/models/{model_id}/importance?repeats=2&seed=1").json()
    assert payload["baseline_rmse"] > 0
    ranks = [f["rank"] for f in payload["features"]]
    assert sorted(ranks) == list(range(1, len(ranks) + 1))


def test_model_surface_grid(client, model_id):
    response = client.post(
        f"/models/{model_id}/surface",
        json={"var_a": "voltage", "var_b": "distance", "resolution": 8},
    )
    assert response.status_code == 200, response.text
    payload = response.json()
    assert len(payload["grid_a"]) == 8
    assert len(payload["matrix"]) == 8
    assert all(len(row) == 8 for row in payload["matrix"])
    assert "polymer" in payload["fixed"]


def test_model_surface_same_variable_rejected(client, model_id):
    response = client.post(
        f"/models/{model_id}/surface", json={"var_a": "voltage", "var_b": "voltage"}
    )
    assert response.status_code == 422
    assert response.json()["detail"]["code"] == "surface_error"


def test_imc_job_and_export(client, model_id):
    response = client.post(
        f"/models/{model_id}/imc",
        json={
            "mode": "optimization",
            "polymer": "PVDF",
            "target": 420,
            "tolerance": 150,
            "n_simulations": 400,
            "seed": 3,
        },
    )
    assert response.status_code == 202, response.text
    job = _wait(client, response.json()["job_id"])
    assert job["status"] == "done", job["error"]
    result = job["result"]
    assert result["model_id"] == model_id
    assert result["n_simulations"] == 400
    assert result["acceptance_rate"] is not None
    assert isinstance(result["top_candidates"], list)

    export = client.get(f"/exports/{result['draws_export']}")
    assert export.status_code == 200
    assert len(export.text.strip().splitlines()) == 401


def test_imc_validation_error(client, model_id):
    response = client.post(
        f"/models/{model_id}/imc",
        json={"mode": "optimization", "polymer": "PVDF", "target": -1, "tolerance": 10},
    )
    assert response.status_code == 422
    assert response.json()["detail"]["code"] == "validation_error"


def test_imc_unknown_model_404(client):
    response = client.post(
        "/models/m999/imc",
        json={"mode": "optimization", "polymer": "PVDF", "target": 400, "tolerance": 100},
    )
    assert response.status_code == 404
    assert response.json()["detail"]["code"] == "model_not_found"


def test_bundle_download_and_reload(client, model_id, dataset_id):
    download = client.get(f"/models/{model_id}/bundle")
    assert download.status_code == 200
    assert download.headers["content-type"] == "application/octet-stream"

    reload_resp = client.post(
        f"/models/load?dataset_id={dataset_id}", content=download.content
    )
    assert reload_resp.status_code == 201, reload_resp.text
    new_id = reload_resp.json()["model_id"]
    assert new_id != model_id

    original = client.get(f"/models/{model_id}/metrics").json()
    reloaded = client.get(f"/models/{new_id}/metrics").json()
    assert reloaded == original


def test_load_rejects_corrupt_bundle(client, dataset_id):
    response = client.post(f"/models/load?dataset_id={dataset_id}", content=b"junk")
    assert response.status_code == 422
    assert response.json()["detail"]["code"] == "bad_bundle"


def test_unknown_export_404(client):
    response = client.get("/exports/x999")
    assert response.status_code == 404
    assert response.json()["detail"]["code"] == "export_not_found"


def test_static_ui_mount(tmp_path):
    ui = tmp_path / "ui"
    ui.mkdir()
    (ui / "index.html").write_text("<!doctype html><div id=\"app\"></div>")
    with TestClient(create_app(ui_dir=str(ui))) as c:
        page = c.get("/ui/")
        assert page.status_code == 200
        assert 'id="app"' in page.text
        assert c.get("/health").status_code == 200


def test_no_ui_mount_without_directory(client):
    assert client.get("/ui/").status_code == 404
