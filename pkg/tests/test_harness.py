import math
import socket

import pytest

from pirgrid.client import ServerEndpoint
from pirgrid.errors import FaultProfileError, PlanAborted, PlanError
from pirgrid.harness import CSV_COLUMNS, ExperimentPlan, read_csv, run_plan, server_faults, write_csv


def test_plan_validation():
    with pytest.raises(PlanError):
        ExperimentPlan("goldberg", 6, [256], trials=0)
    with pytest.raises(PlanError):
        ExperimentPlan("goldberg", 6, [256], t=6)
    with pytest.raises(PlanError):
        ExperimentPlan("chor", 1, [256])
    with pytest.raises(PlanError):
        ExperimentPlan("pir", 3, [256])
    with pytest.raises(PlanError):
        ExperimentPlan("chor", 3, [])
    with pytest.raises(PlanError):
        ExperimentPlan("chor", 3, [256], faults=["drop:1@4"])
    with pytest.raises(FaultProfileError):
        ExperimentPlan("chor", 3, [256], faults=["explode"])
    with pytest.raises(PlanError):
        ExperimentPlan.from_mapping({"protocol": "chor", "n": 3, "record_counts": [8], "colour": "red"})
    assert ExperimentPlan("goldberg", 6, [256]).t == 2
    assert ExperimentPlan("chor", 4, [256]).t == 3


def test_server_faults():
    assert server_faults("none", 3) == ["none"] * 3
    assert server_faults("drop:1.0@2", 4) == ["none", "none", "drop:1.0", "drop:1.0"]
    assert server_faults("delay:5@0", 2) == ["none", "none"]


def test_load_toml(tmp_path):
    path = tmp_path / "plan.toml"
    path.write_text('protocol = "goldberg"\nn = 6\nt = 2\nrecord_counts = [256, 512]\n'
                    'faults = ["none", "drop:1.0@2"]\ntrials = 3\nseed = 4\n')
    plan = ExperimentPlan.load(path)
    assert (plan.protocol, plan.n, plan.t, plan.record_counts, plan.trials) == ("goldberg", 6, 2, [256, 512], 3)
    assert plan.block_bytes == 560 and plan.faults == ["none", "drop:1.0@2"]


def test_chor_plan_counts(tmp_path):
    plan = ExperimentPlan("chor", 3, [256, 1024], block_bytes=32, trials=3, seed=1)
    rows = run_plan(plan)
    assert [row.r for row in rows] == [256, 1024]
    for row in rows:
        assert row.successes == 3 and row.wrong_blocks == 0 and row.mean_k == 3
        assert row.protocol_bits == (row.r + 8 * 32) * 3 == row.table1_bits
        assert row.protocol_bytes_up == 3 * row.r / 8
        assert row.server_bytes_touched <= row.r * 32
    path = tmp_path / "out.csv"
    write_csv(rows, path)
    with open(path) as fh:
        assert fh.readline().strip().split(",") == CSV_COLUMNS
    back = read_csv(path)
    assert len(back) == 2 and float(back[1]["protocol_bits"]) == rows[1].protocol_bits


def test_goldberg_plan_with_faults():
    plan = ExperimentPlan("goldberg", 6, [256], t=1, block_bytes=16, trials=4, seed=2,
                          faults=["none", "drop:1.0@2", "byzantine:random-block@1", "drop:1.0@5"])
    rows = run_plan(plan)
    none, dropped, byz, dead = rows
    assert none.successes == 4 and none.mean_k == 6 and none.server_bytes_touched == 256 * 16
    assert dropped.successes == 4 and dropped.mean_k == 4
    assert dropped.protocol_bits == dropped.table1_bits == 256 * 8 * 6 + 4 * 8 * 16
    assert byz.successes == 4 and byz.byzantine_detected == 4
    assert dead.successes == 0 and dead.failures == 4 and dead.mean_k == 1


def test_protocol_fields_are_deterministic():
    plan = ExperimentPlan("goldberg", 4, [128], t=1, block_bytes=8, trials=3, seed=9, faults=["drop:0.5"])
    a, b = run_plan(plan)[0], run_plan(plan)[0]
    for name in ("successes", "mean_k", "protocol_bits", "protocol_bytes_up", "protocol_bytes_down",
                 "server_bytes_touched"):
        assert getattr(a, name) == getattr(b, name)


def test_unreachable_endpoints_abort(tmp_path):
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        dead = s.getsockname()
    plan = ExperimentPlan("chor", 2, [128], trials=1)
    endpoints = [ServerEndpoint(0, *dead), ServerEndpoint(1, *dead)]
    with pytest.raises(PlanAborted) as info:
        run_plan(plan, endpoints)
    assert info.value.rows == []
    path = tmp_path / "aborted.csv"
    write_csv(info.value.rows, path, aborted=True)
    assert path.read_text().splitlines()[-1].startswith("#aborted")
    assert read_csv(path) == []


def test_external_endpoints(small_db):
    from pirgrid.server import LocalCluster

    plan = ExperimentPlan("goldberg", 3, [small_db.r], t=1, block_bytes=small_db.b, trials=2)
    with LocalCluster(small_db, n=3) as cluster:
        (row,) = run_plan(plan, cluster.endpoints, small_db)
    assert row.successes == 2 and math.isnan(row.server_bytes_touched)
