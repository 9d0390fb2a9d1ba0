"""HTTP service tests: publishing, validation, negotiation, planning,
session flow, auth, and concurrency."""

from __future__ import annotations

import copy
import json
import threading
import time

import pytest
from fastapi.testclient import TestClient

from tutorkit import engine
from tutorkit.model import fragment_to_dict
from tutorkit.service import ServiceConfig, create_app

from conftest import example_catalog
from fixture_mutations import mutate, m_unreachable_node


@pytest.fixture()
def client(tmp_path):
    app = create_app(ServiceConfig(data_dir=str(tmp_path / "data")))
    with TestClient(app) as c:
        yield c


def publish_fixture(client, fixture_doc) -> dict:
    response = client.post("/fragments", json=fixture_doc)
    assert response.status_code == 201, response.text
    return response.json()


def submit_correct_walkthrough(client, session_id: str) -> list[dict]:
    """Answer the current activity correctly until the session terminates."""
    answers = {
        "L1": {"kind": "lesson", "payload": True},
        "Q1": {"kind": "close_ended", "payload": "3"},
        "L2": {"kind": "lesson", "payload": True},
        "Q2": {"kind": "close_ended", "payload": "3"},
        "M": {"kind": "lesson", "payload": True},
        "C1": {"kind": "coding", "payload": "average"},
        "C2": {"kind": "coding", "payload": "median"},
    }
    bodies = []
    for _ in range(20):
        current = client.get(f"/sessions/{session_id}/current")
        if current.status_code != 200:
            break
        node = current.json()["node"]
        response = client.post(
            f"/sessions/{session_id}/submissions", json={"submission": answers[node]}
        )
        assert response.status_code == 200, response.text
        body = response.json()
        bodies.append(body)
        if body["status"] != "Active":
            break
    return bodies


# ---------------------------------------------------------------------------
# Fragments


def test_publish_and_fetch_round_trip(client, fixture_doc):
    result = publish_fixture(client, fixture_doc)
    assert result["id"] == "stats-avg-median" and result["version"] == 1
    assert result["report"]["ok"] is True

    fetched = client.get("/fragments/stats-avg-median")
    assert fetched.status_code == 200
    assert json.loads(fetched.content) == fixture_doc
    assert client.get("/fragments").json()["ids"] == ["stats-avg-median"]


def test_side_maps_survive_publish(client, fixture_doc):
    doc = copy.deepcopy(fixture_doc)
    doc["ui"] = {"layout": {"L1": {"x": 10, "y": 20}}}
    publish_fixture(client, doc)
    fetched = client.get("/fragments/stats-avg-median").json()
    assert fetched["ui"] == {"layout": {"L1": {"x": 10, "y": 20}}}


def test_republish_same_version_conflicts(client, fixture_doc):
    publish_fixture(client, fixture_doc)
    publish_fixture(client, fixture_doc)  # identical bytes: idempotent
    changed = copy.deepcopy(fixture_doc)
    changed["title"] = "renamed"
    response = client.post("/fragments", json=changed)
    assert response.status_code == 409
    assert response.json()["error"]["code"] == "VERSION_CONFLICT"


def test_invalid_fragment_rejected_with_report(client, fixture_doc):
    broken = mutate(fixture_doc, m_unreachable_node)
    response = client.post("/fragments", json=broken)
    assert response.status_code == 422
    error = response.json()["error"]
    assert error["code"] == "VALIDATION_FAILED"
    codes = {issue["code"] for issue in error["detail"]["errors"]}
    assert "UNREACHABLE_NODE" in codes


def test_unknown_fragment_404(client):
    response = client.get("/fragments/ghost")
    assert response.status_code == 404
    assert response.json()["error"]["code"] == "NOT_FOUND"


def test_validate_endpoint_stored_and_inline(client, fixture_doc):
    publish_fixture(client, fixture_doc)
    stored = client.post("/fragments/stats-avg-median/validate")
    assert stored.status_code == 200 and stored.json()["ok"] is True
    inline = client.post(
        "/fragments/whatever/validate", json=mutate(fixture_doc, m_unreachable_node)
    )
    assert inline.status_code == 200 and inline.json()["ok"] is False


def test_negotiate_endpoint(client, fixture_doc):
    publish_fixture(client, fixture_doc)
    full = client.post(
        "/fragments/stats-avg-median/negotiate", json={"capabilities": ["text", "code"]}
    ).json()
    assert full["satisfiable"] is True
    assert full["nodes"]["L1"] == {"satisfiable": True, "modality": "text"}
    partial = client.post(
        "/fragments/stats-avg-median/negotiate", json={"capabilities": ["text"]}
    ).json()
    assert partial["satisfiable"] is False
    assert partial["nodes"]["C1"] == {"satisfiable": False, "missing": ["code"]}


# ---------------------------------------------------------------------------
# Catalogs, rule packs, planning


def seed_catalog_and_fragments(client):
    catalog, fragments = example_catalog()
    entries = []
    for entry in catalog.entries:
        entries.append(
            {
                "fragment_id": entry.fragment_id,
                "version": entry.version,
                "provides": sorted(entry.provides),
                "requires": sorted(entry.requires),
                "cost": entry.cost,
                "kinds_present": sorted(entry.kinds_present),
                "modalities_required": sorted(entry.modalities_required),
            }
        )
    response = client.post("/catalogs", json={"id": "main", "entries": entries})
    assert response.status_code == 201, response.text
    for frag in fragments.values():
        response = client.post("/fragments", json=fragment_to_dict(frag))
        assert response.status_code == 201, response.text


def test_plan_endpoint_worked_example(client):
    seed_catalog_and_fragments(client)
    response = client.post(
        "/plan", json={"goal": ["average", "median", "difference"], "known": []}
    )
    assert response.status_code == 200
    body = response.json()
    assert body["fragments"] == ["F_avg", "F_med", "F_diff"]
    assert body["total_cost"] == 3.0


def test_plan_uncoverable_goal_maps_to_422(client):
    seed_catalog_and_fragments(client)
    response = client.post("/plan", json={"goal": ["variance"]})
    assert response.status_code == 422
    assert response.json()["error"]["code"] == "UNCOVERABLE_GOAL"


def test_publish_rulepacks(client, rulepack_docs):
    for doc in rulepack_docs:
        response = client.post("/rulepacks", json=doc)
        assert response.status_code == 201


# ---------------------------------------------------------------------------
# Sessions


def test_session_walkthrough_to_completion(client, fixture_doc, rulepack_docs):
    publish_fixture(client, fixture_doc)
    for doc in rulepack_docs:
        client.post("/rulepacks", json=doc)
    created = client.post(
        "/sessions",
        json={
            "fragment_id": "stats-avg-median",
            "learner_id": "kid-1",
            "capabilities": ["text", "code"],
        },
    )
    assert created.status_code == 201, created.text
    body = created.json()
    session_id = body["id"]
    assert body["status"] == "Active"
    assert body["activity"]["node"] == "L1"
    assert body["activity"]["modality"] == "text"

    bodies = submit_correct_walkthrough(client, session_id)
    assert len(bodies) == 7
    final = bodies[-1]
    assert final["status"] == "Completed"
    assert final["next"]["kind"] == "completed"
    assert "finisher" in final["gamification"]["badges"]
    assert "on-a-roll" in final["gamification"]["badges"]

    record = client.get(f"/sessions/{session_id}").json()
    assert record["status"] == "Completed"
    assert [entry["node"] for entry in record["transcript"]] == [
        "L1", "Q1", "L2", "Q2", "M", "C1", "C2",
    ]
    # a finished session refuses more work
    done = client.post(
        f"/sessions/{session_id}/submissions",
        json={"kind": "lesson", "payload": True},
    )
    assert done.status_code == 409
    assert done.json()["error"]["code"] == "SESSION_NOT_ACTIVE"


def test_session_refines_abstract_fragment(client):
    seed_catalog_and_fragments(client)
    host = {
        "id": "host",
        "title": "host",
        "version": 1,
        "entry": "intro",
        "nodes": [
            {"id": "intro", "kind": "lesson", "title": "intro",
             "representations": {"text": "hello"}, "max_attempts": None, "kind_data": {}},
            {"id": "A", "kind": "abstract", "title": "learn averages",
             "representations": {}, "max_attempts": None,
             "kind_data": {"goal": ["average"], "constraints": {}}},
        ],
        "edges": [
            {"id": "e1", "source": "intro", "target": "A",
             "condition": {"builtin": "always"}, "label": None},
        ],
    }
    assert client.post("/fragments", json=host).status_code == 201
    created = client.post(
        "/sessions",
        json={"fragment_id": "host", "learner_id": "kid", "capabilities": ["text"]},
    )
    assert created.status_code == 201, created.text
    assert created.json()["activity"]["node"] == "intro"
    session_id = created.json()["id"]
    state = client.get(f"/sessions/{session_id}").json()
    assert state["fragment_id"] == "host"


def test_session_capability_mismatch(client, fixture_doc):
    publish_fixture(client, fixture_doc)
    response = client.post(
        "/sessions",
        json={"fragment_id": "stats-avg-median", "capabilities": ["text"]},
    )
    assert response.status_code == 422
    error = response.json()["error"]
    assert error["code"] == "CAPABILITY_MISMATCH"
    assert error["detail"]["missing"] == ["code"]


def test_wrong_submission_kind_maps_to_422(client, fixture_doc):
    publish_fixture(client, fixture_doc)
    session_id = client.post(
        "/sessions",
        json={"fragment_id": "stats-avg-median", "capabilities": ["text", "code"]},
    ).json()["id"]
    response = client.post(
        f"/sessions/{session_id}/submissions", json={"kind": "quiz", "payload": [0]}
    )
    assert response.status_code == 422
    assert response.json()["error"]["code"] == "KIND_MISMATCH"


def test_racing_submissions_one_409(client, fixture_doc, monkeypatch):
    publish_fixture(client, fixture_doc)
    session_id = client.post(
        "/sessions",
        json={"fragment_id": "stats-avg-median", "capabilities": ["text", "code"]},
    ).json()["id"]

    original = engine.submit

    def slow_submit(session, submission, grader_plugin="static"):
        time.sleep(0.4)
        return original(session, submission, grader_plugin)

    monkeypatch.setattr(engine, "submit", slow_submit)
    statuses: list[int] = []

    def fire():
        response = client.post(
            f"/sessions/{session_id}/submissions",
            json={"kind": "lesson", "payload": True},
        )
        statuses.append(response.status_code)

    first = threading.Thread(target=fire)
    second = threading.Thread(target=fire)
    first.start()
    time.sleep(0.1)  # the first request is inside the slow grader now
    second.start()
    first.join()
    second.join()
    assert sorted(statuses) == [200, 409]


def test_bearer_token_auth(tmp_path, fixture_doc):
    app = create_app(ServiceConfig(data_dir=str(tmp_path / "auth-data"), api_token="sesame"))
    with TestClient(app) as client:
        denied = client.get("/fragments")
        assert denied.status_code == 401
        assert denied.json()["error"]["code"] == "UNAUTHORIZED"
        wrong = client.get("/fragments", headers={"Authorization": "Bearer nope"})
        assert wrong.status_code == 401
        allowed = client.get("/fragments", headers={"Authorization": "Bearer sesame"})
        assert allowed.status_code == 200


def test_responses_are_canonical_json(client, fixture_doc):
    publish_fixture(client, fixture_doc)
    raw = client.get("/fragments").content
    assert raw.endswith(b"\n")
    assert json.dumps(json.loads(raw), sort_keys=True, indent=2, ensure_ascii=False).encode() + b"\n" == raw
