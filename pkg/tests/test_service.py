import json

import pytest
from fastapi.testclient import TestClient

from quacq import bench, model
from quacq.acquisition import quacq2
from quacq.oracle import SimulatedOracle
from quacq.service import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def purdey_payload(include_target=False):
    spec = bench.build_benchmark("purdey")
    return bench.spec_to_problem_dict(spec, include_target=include_target), spec


def drive_session(client, payload, spec, strategy="basic", seed=4, max_queries=5000):
    """Answer every pending query from a hidden simulated oracle."""
    oracle = SimulatedOracle(spec.vocab, spec.target)
    r = client.post("/sessions", json={"problem": payload, "strategy": strategy,
                                       "seed": seed})
    assert r.status_code == 201, r.text
    state = r.json()
    sid = state["id"]
    answered = set()
    steps = 0
    while state["phase"] == "awaiting-answer":
        steps += 1
        assert steps < max_queries
        q = state["pending_query"]
        assert q["number"] not in answered
        answered.add(q["number"])
        e = model.assignment({k: int(v) for k, v in q["bindings"].items()},
                             spec.vocab)
        ans = "yes" if oracle.answer_of(e) else "no"
        r = client.post(f"/sessions/{sid}/answer",
                        json={"answer": ans, "token": f"tok-{q['number']}"})
        assert r.status_code == 200, r.text
        state = r.json()
        while state["phase"] == "generating":
            state = client.get(f"/sessions/{sid}").json()
    return sid, state, answered


def test_session_learns_purdey_identical_to_in_process(client):
    payload, spec = purdey_payload()
    sid, state, answered = drive_session(client, payload, spec, seed=4)
    assert state["phase"] == "converged"
    net = client.get(f"/sessions/{sid}/network").json()
    assert net["converged"] is True
    via_api = {json.dumps(c, sort_keys=True)
               for c in ({k: v for k, v in c.items() if k != "text"}
                         for c in net["constraints"])}
    oracle = SimulatedOracle(spec.vocab, spec.target)
    in_process = quacq2(spec.vocab, spec.basis, oracle, strategy="basic", seed=4)
    expected = {json.dumps(model.constraint_entry(c), sort_keys=True)
                for c in in_process.constraints}
    assert via_api == expected
    # every query was answered exactly once and the history matches
    assert len(state["history"]) == len(answered)
    assert oracle.counters.asked == len(answered)


def test_answer_idempotency_token(client):
    payload, spec = purdey_payload()
    r = client.post("/sessions", json={"problem": payload, "strategy": "basic",
                                       "seed": 11})
    state = r.json()
    sid = state["id"]
    assert state["phase"] == "awaiting-answer"
    n0 = state["pending_query"]["number"]
    r1 = client.post(f"/sessions/{sid}/answer", json={"answer": "yes", "token": "t1"})
    assert r1.status_code == 200
    # replaying the same token is a no-op returning current state
    r2 = client.post(f"/sessions/{sid}/answer", json={"answer": "no", "token": "t1"})
    assert r2.status_code == 200
    s2 = r2.json()
    assert s2["history"][0]["number"] == n0
    assert s2["history"][0]["answer"] == "yes"
    assert len([h for h in s2["history"] if h["number"] == n0]) == 1
    client.post(f"/sessions/{sid}/answer", json={"answer": "abort", "token": "t-end"})


def test_answer_in_wrong_phase_conflicts(client):
    payload, spec = purdey_payload()
    spec_small = {**payload, "variables": payload["variables"][:1],
                  "language": [{"family": "ne"}]}
    r = client.post("/sessions", json={"problem": spec_small, "strategy": "basic"})
    assert r.status_code == 201
    state = r.json()
    assert state["phase"] == "converged"  # single variable: empty basis
    r = client.post(f"/sessions/{state['id']}/answer",
                    json={"answer": "yes", "token": "x"})
    assert r.status_code == 409


def test_unknown_session_404(client):
    assert client.get("/sessions/deadbeef").status_code == 404
    assert client.post("/sessions/deadbeef/answer",
                       json={"answer": "yes", "token": "t"}).status_code == 404


def test_invalid_problem_rejected(client):
    r = client.post("/sessions", json={"problem": {"variables": [],
                                                   "language": []}})
    assert r.status_code == 400
    r = client.post("/sessions", json={"problem": {"variables": [
        {"name": "A", "domain": [1]}], "language": []}})
    assert r.status_code == 400


def test_abort_terminates_session(client):
    payload, spec = purdey_payload()
    r = client.post("/sessions", json={"problem": payload, "strategy": "basic"})
    state = r.json()
    sid = state["id"]
    assert state["phase"] == "awaiting-answer"
    r = client.post(f"/sessions/{sid}/answer", json={"answer": "abort", "token": "a"})
    assert r.status_code == 200
    assert r.json()["phase"] == "aborted"
    net = client.get(f"/sessions/{sid}/network").json()
    assert net["converged"] is False
