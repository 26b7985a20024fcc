import pytest
from fastapi.testclient import TestClient

from app import app
from example_catalog import EXAMPLE_CATALOG, example_names

client = TestClient(app)


def document(name):
    return EXAMPLE_CATALOG[name]["document"]


def test_health():
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json()["status"] == "healthy"


def test_list_examples():
    names = [e["name"] for e in client.get("/examples").json()]
    assert names == example_names()


def test_get_example():
    doc = client.get("/examples/mirror").json()
    assert doc["components"][0]["name"] == "mirror"
    assert client.get("/examples/warp_drive").status_code == 404


def test_reduce():
    response = client.post("/reduce", json={"document": document("beamsplitter_gamma0"), "route": "ito"})
    assert response.status_code == 200
    body = response.json()
    assert body["discrepancy"] is None
    assert body["document"]["components"][0]["S"][0][0] == pytest.approx([-1.0, 0.0], abs=1e-10)


def test_reduce_both_reports_discrepancy():
    response = client.post("/reduce", json={"document": document("beamsplitter"), "route": "both"})
    assert response.status_code == 200
    assert response.json()["discrepancy"] < 1e-8


def test_reduce_undefined_is_422():
    response = client.post("/reduce", json={"document": document("beamsplitter_gamma0"), "route": "strat"})
    assert response.status_code == 422
    assert response.json()["error"] == "SchurUndefined"


def test_convert_not_representable():
    response = client.post("/convert", json={"document": document("mirror"), "to": "strat"})
    assert response.status_code == 422
    assert response.json()["error"] == "NotRepresentable"


def test_bad_document_is_400():
    bad = dict(document("mirror"), connections=[{"from": "mirror.out[7]", "to": "mirror.in[1]"}])
    response = client.post("/check", json={"document": bad})
    assert response.status_code == 400
    assert response.json()["error"] == "UnknownPort"


def test_check():
    response = client.post("/check", json={"document": document("closed_loop")})
    assert response.status_code == 200
    assert response.json()["external"] == []


def test_series():
    response = client.post("/series", json={"second": document("mirror"), "first": document("mirror")})
    assert response.status_code == 200
    assert response.json()["document"]["components"][0]["S"][0][0] == pytest.approx([1.0, 0.0])


def test_invalid_tolerance_rejected():
    response = client.post("/reduce", json={"document": document("mirror"), "tol": 0})
    assert response.status_code == 422
