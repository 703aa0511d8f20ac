import json
import subprocess
import sys

import pytest
from fastapi.testclient import TestClient

from koszulkit.assoc import AInfCoalgebra, bar
from koszulkit.fields import QQ
from koszulkit.operads import ass_operad, c0_cooperad, dualize_operad
from koszulkit.reports import Report, emit_report
from koszulkit.serialize import (
    ParseError,
    ainf_to_json,
    algebra_to_json,
    complex_to_json,
    cooperad_to_json,
    emit_object,
    operad_to_json,
    parse_object,
)
from koszulkit.service import app
from koszulkit.tasks import TaskConfig, run_task

from helpers import complex_from_dims, x2y_algebra


def test_complex_round_trip():
    import random

    cx = complex_from_dims(QQ, {0: 2, 1: 2, 2: 1}, rng=random.Random(3))
    data = complex_to_json(cx)
    back = parse_object(data)
    assert back.space == cx.space
    assert back.d == cx.d


def test_algebra_round_trip():
    A = x2y_algebra()
    data = algebra_to_json(A)
    back = parse_object(data)
    assert back.underlying.space == A.underlying.space
    assert back.mu2 == A.mu2


def test_ainf_round_trip():
    A = x2y_algebra()
    coalg, _ = bar(A, 3)
    data = ainf_to_json(coalg)
    back = parse_object(data)
    assert back.underlying.d == coalg.underlying.d
    assert back.ops.keys() == coalg.ops.keys()
    for n in back.ops:
        assert back.ops[n] == coalg.ops[n]


def test_operad_round_trip():
    P = ass_operad(QQ, 4)
    data = operad_to_json(P)
    back = parse_object(data)
    assert back.arities() == P.arities()
    for key in P.partial:
        assert back.partial[key] == P.partial[key]


def test_cooperad_round_trip():
    C = dualize_operad(ass_operad(QQ, 3))
    data = cooperad_to_json(C)
    back = parse_object(data)
    assert back.arities() == C.arities()
    for key in C.decomp:
        assert back.decomp[key] == C.decomp[key]


def test_parse_rejects_bad_kind():
    with pytest.raises(ParseError):
        parse_object({"kind": "nonsense"})


def test_parse_rejects_non_square_zero():
    data = {
        "kind": "complex",
        "field": {"kind": "Q"},
        "spaces": {"0": ["a"], "1": ["b"], "2": ["c"]},
        "maps": {"d": [["a", "b", "1/1"], ["b", "c", "1/1"]]},
    }
    from koszulkit.complexes import NotSquareZero

    with pytest.raises(NotSquareZero):
        parse_object(data)


def test_report_json_deterministic():
    cfg = TaskConfig(command="koszul-check", inputs=["ass"], d_max=3, arity_bound=3)
    r1 = run_task(cfg)
    r2 = run_task(cfg)
    assert emit_report(r1, "json") == emit_report(r2, "json")
    assert r1.input_digest == r2.input_digest


def test_report_text_has_window():
    cfg = TaskConfig(command="counit-check", inputs=["x2y"], weight_bound=3)
    rep = run_task(cfg)
    text = emit_report(rep, "text").decode()
    assert "window" in text
    assert rep.exit_code == 0


def test_exit_codes():
    assert run_task(TaskConfig(command="koszul-check", inputs=["ass"], d_max=3, arity_bound=3)).exit_code == 0
    assert run_task(TaskConfig(command="validate", inputs=["nope.json"])).exit_code == 2
    bad = run_task(TaskConfig(command="counterexample", inputs=["v0"], witness_bound=1))
    assert bad.exit_code == 3


def test_task_bar_emits_object():
    cfg = TaskConfig(command="bar", inputs=["x2y"], weight_bound=2)
    rep = run_task(cfg)
    assert rep.exit_code == 0
    obj = parse_object(rep.results["object"])
    assert isinstance(obj, AInfCoalgebra)


def test_cli_end_to_end(tmp_path):
    out = tmp_path / "report.json"
    proc = subprocess.run(
        [
            sys.executable, "-m", "koszulkit.cli", "koszul-check", "ass",
            "--d-max", "3", "--arity-bound", "3", "--format", "json",
            "--out", str(out),
        ],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    data = json.loads(out.read_text())
    assert data["verdict"] == "koszul"


def test_cli_negative_verdict_exit_one():
    proc = subprocess.run(
        [
            sys.executable, "-m", "koszulkit.cli", "koszul-check", "c0",
            "--d-max", "3", "--arity-bound", "3",
        ],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 2  # c0 is a cooperad, not an operad: input error


def test_service_health_and_run():
    client = TestClient(app)
    assert client.get("/v1/health").json()["status"] == "ok"
    cmds = client.get("/v1/commands").json()["commands"]
    assert "square-check" in cmds
    resp = client.post(
        "/v1/run",
        json={"command": "mc-check", "inputs": ["ass"], "kind": "pi", "arity_bound": 4},
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["verdict"] == "yes" and body["exit_code"] == 0


def test_service_inline_object():
    client = TestClient(app)
    A = x2y_algebra()
    payload = {
        "command": "counit-check",
        "inputs": [algebra_to_json(A)],
        "weight_bound": 3,
    }
    resp = client.post("/v1/run", json=payload)
    assert resp.status_code == 200
    assert resp.json()["verdict"] == "yes"


def test_service_bad_field_rejected():
    client = TestClient(app)
    resp = client.post("/v1/run", json={"command": "validate", "inputs": ["ass"], "field": "f2"})
    assert resp.status_code == 422


def test_cli_remote_matches_local(tmp_path):
    # run the same task locally and through the service; reports agree
    client = TestClient(app)
    local = run_task(TaskConfig(command="koszul-check", inputs=["ass"], d_max=3, arity_bound=3))
    remote = client.post(
        "/v1/run",
        json={"command": "koszul-check", "inputs": ["ass"], "d_max": 3, "arity_bound": 3},
    ).json()
    assert remote["report"]["results"] == json.loads(emit_report(local, "json"))["results"]


def test_cli_validate_file(tmp_path):
    A = x2y_algebra()
    path = tmp_path / "algebra.json"
    path.write_text(json.dumps(algebra_to_json(A)))
    proc = subprocess.run(
        [sys.executable, "-m", "koszulkit.cli", "validate", str(path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0 and "valid" in proc.stdout


def test_cli_validation_error_positioned(tmp_path):
    data = {
        "kind": "complex",
        "field": {"kind": "Q"},
        "spaces": {"0": ["a"], "1": ["b"], "2": ["c"]},
        "maps": {"d": [["a", "b", "1/1"], ["b", "c", "1/1"]]},
    }
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(data))
    proc = subprocess.run(
        [sys.executable, "-m", "koszulkit.cli", "validate", str(path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 2
    assert "NotSquareZero" in proc.stdout
