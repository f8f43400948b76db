import json

import pytest
from fastapi.testclient import TestClient

from src.api.app import app

Q34 = {"labels": ["B"], "dims": [2], "entries": [[0.75, 0], [0, 0], [0, 0], [0.25, 0]]}
MIXED = {"labels": ["B"], "dims": [2], "entries": [[0.5, 0], [0, 0], [0, 0], [0.5, 0]]}


@pytest.fixture
def client():
    with TestClient(app) as test_client:
        yield test_client


def _fixture(fixtures_dir, name: str) -> dict:
    return json.loads((fixtures_dir / name).read_text())


def test_health(client):
    body = client.get("/health").json()
    assert body["status"] == "ok"
    assert body["service_ready"] is True


def test_catalogue(client):
    body = client.get("/").json()
    assert "POST /dh" in body["endpoints"]
    assert body["status"] == "ready"


class TestEntropy:
    def test_von_neumann(self, client):
        response = client.post("/entropy", json={"quantity": "von_neumann", "rho": Q34})
        assert response.status_code == 200
        assert response.json()["bits"] == pytest.approx(0.8112781, abs=1e-7)

    def test_infinite_divergence_is_null(self, client):
        pure0 = {"dims": [2], "entries": [[1, 0], [0, 0], [0, 0], [0, 0]]}
        pure1 = {"dims": [2], "entries": [[0, 0], [0, 0], [0, 0], [1, 0]]}
        body = client.post("/entropy", json={"quantity": "dmax", "rho": pure0, "sigma": pure1}).json()
        assert body["bits"] is None and body["finite"] is False

    def test_domain_violation_is_422(self, client):
        response = client.post("/entropy", json={"quantity": "petz_renyi", "rho": Q34, "sigma": MIXED, "alpha": 2.5})
        assert response.status_code == 422
        assert response.json()["detail"].startswith("precondition violated")

    def test_malformed_matrix_is_400(self, client):
        skew = {"dims": [2], "entries": [[1, 0], [1, 0], [0, 0], [0, 0]]}
        response = client.post("/entropy", json={"quantity": "von_neumann", "rho": skew})
        assert response.status_code == 400


def test_distance(client):
    body = client.post("/distance", json={"rho": Q34, "sigma": MIXED}).json()
    assert body["values"]["trace"] == pytest.approx(0.5)
    assert set(body["values"]) == {"fidelity", "generalized_fidelity", "purified", "trace"}


def test_dh_fixture_value(client, fixtures_dir):
    request = {"rho": _fixture(fixtures_dir, "q34_n2.json"), "sigma": _fixture(fixtures_dir, "mix_n2.json"), "eps": 0.1}
    body = client.post("/dh", json=request).json()
    assert body["bits"] == pytest.approx(0.5145732, abs=1e-7)
    assert body["alpha"] == pytest.approx(0.9, abs=1e-9)
    assert body["beta"] == pytest.approx(0.7, abs=1e-9)


def test_dh_dimension_mismatch(client, fixtures_dir):
    request = {"rho": Q34, "sigma": _fixture(fixtures_dir, "mix_n2.json"), "eps": 0.1}
    assert client.post("/dh", json=request).status_code == 422


class TestExpand:
    def test_from_state(self, client):
        request = {"task": "source_low", "state": Q34, "n_values": [1000]}
        body = client.post("/expand", json=request).json()
        assert body["leading"] == pytest.approx(0.8112781, abs=1e-7)
        assert body["rows"][0]["predicted"] == pytest.approx(0.9485399, abs=1e-7)

    def test_from_inputs(self, client):
        request = {"task": "channel_coding", "inputs": {"capacity": 1.0, "vmax": 0.5}, "n_values": [8, 64]}
        body = client.post("/expand", json=request).json()
        assert body["second_coeff"] == pytest.approx(0.5)
        assert [row["n"] for row in body["rows"]] == [8, 64]
        assert body["rows"][0]["a_n"] == pytest.approx(8 ** (-1 / 3))

    def test_needs_exactly_one_source(self, client):
        assert client.post("/expand", json={"task": "source_low", "n_values": [8]}).status_code == 422

    def test_missing_input(self, client):
        request = {"task": "source_low", "inputs": {"capacity": 1.0}, "n_values": [8]}
        response = client.post("/expand", json=request)
        assert response.status_code == 422
        assert "entropy available" in response.json()["detail"]
