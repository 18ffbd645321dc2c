"""Experiment driver: sweeps of database size and fault profile, emitted as CSV.

A plan file is flat TOML::

    protocol = "goldberg"
    n = 6
    t = 2
    block_bytes = 560
    record_counts = [4096, 16384, 65536]
    faults = ["none", "drop:1.0@1", "drop:1.0@2"]
    trials = 10
    seed = 7
    deadline_ms = 500

A fault entry is a server fault profile optionally suffixed by ``@m``; the
profile is then applied to the last m servers only.  Without the suffix it
applies to every server.
"""

from __future__ import annotations

import asyncio
import csv
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Optional, Sequence

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import accounting
from .client import PROTOCOLS, ServerEndpoint, describe, private_fetch
from .errors import PirError, PlanAborted, PlanError
from .faults import FaultProfile
from .goldberg import default_threshold
from .server import LocalCluster
from .specdb import DatabaseMatrix, DbGeometry, generate_synthetic, key_for_index

SCHEMA_VERSION = 1


@dataclass
class ExperimentPlan:
    protocol: str
    n: int
    record_counts: list
    t: Optional[int] = None
    block_bytes: int = 560
    faults: list = field(default_factory=lambda: ["none"])
    trials: int = 5
    seed: int = 0
    deadline_ms: float = 1000.0
    parallel: int = 1

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise PlanError(f"protocol must be one of {PROTOCOLS}")
        if self.n < 2:
            raise PlanError("n must be >= 2")
        if self.protocol == "goldberg":
            if self.t is None:
                self.t = default_threshold(self.n)
            if not 1 <= self.t < self.n:
                raise PlanError(f"need 1 <= t < n, got t={self.t}")
        else:
            self.t = self.n - 1
        if self.trials < 1:
            raise PlanError("trials must be >= 1")
        if not self.record_counts or not self.faults:
            raise PlanError("record_counts and faults must be non-empty")
        if self.parallel < 1:
            raise PlanError("parallel must be >= 1")
        for spec in self.faults:
            server_faults(spec, self.n)

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentPlan":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise PlanError(f"unknown plan keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "ExperimentPlan":
        with open(path, "rb") as fh:
            return cls.from_mapping(tomllib.load(fh))


def server_faults(spec: str, n: int) -> list[str]:
    """Expand one sweep entry into per-server fault profiles."""
    profile, _, count = spec.partition("@")
    FaultProfile.parse(profile)
    if not count:
        return [profile] * n
    m = int(count)
    if not 0 <= m <= n:
        raise PlanError(f"{spec!r}: cannot apply a fault to {m} of {n} servers")
    return ["none"] * (n - m) + [profile] * m


@dataclass
class ExperimentRow:
    schema_version: int
    protocol: str
    n: int
    t: int
    r: int
    b: int
    fault: str
    trials: int
    successes: int
    failures: int
    wrong_blocks: int
    byzantine_detected: int
    mean_k: float
    protocol_bytes_up: float
    protocol_bytes_down: float
    protocol_bits: float
    table1_bits: float
    framing_bytes: float
    handshake_bytes: float
    server_rows_touched: float
    server_bytes_touched: float
    build_ms_mean: float
    build_ms_p50: float
    build_ms_p95: float
    recovery_ms_mean: float
    recovery_ms_p50: float
    recovery_ms_p95: float
    recovery_cpu_ms_mean: float
    recovery_cpu_ms_p50: float
    recovery_cpu_ms_p95: float
    rtt_ms_mean: float
    rtt_ms_p50: float
    rtt_ms_p95: float
    e2e_ms_mean: float
    e2e_ms_p50: float
    e2e_ms_p95: float
    status: str = "ok"


CSV_COLUMNS = [f.name for f in fields(ExperimentRow)]


@dataclass
class _Trial:
    ok: bool
    wrong: bool = False
    byzantine: int = 0
    metrics: object = None


def _run_trial(db: Optional[DatabaseMatrix], geo: DbGeometry, endpoints, plan: ExperimentPlan,
               point_seed: Sequence[int], trial: int) -> _Trial:
    rng = np.random.default_rng([*point_seed, trial])
    beta = int(rng.integers(geo.record_count))
    try:
        block, report, metrics = private_fetch(key_for_index(beta, geo), endpoints, plan.protocol, plan.t,
                                               deadline=plan.deadline_ms / 1000.0, rng=rng)
    except PirError as exc:
        return _Trial(False, metrics=getattr(exc, "metrics", None))
    except OSError as exc:
        raise PlanAborted(f"endpoint failure: {exc}") from exc
    wrong = db is not None and block != db.row(beta)
    return _Trial(not wrong, wrong, len(report.byzantine), metrics)


def _stats(values) -> tuple[float, float, float]:
    if not values:
        return (float("nan"),) * 3
    arr = np.asarray(values, dtype=float) * 1000.0
    return float(arr.mean()), float(np.percentile(arr, 50)), float(np.percentile(arr, 95))


def _mean(values) -> float:
    return float(np.mean(values)) if values else float("nan")


def _table1(plan: ExperimentPlan, r: int, k: float) -> float:
    if plan.protocol == "chor":
        return accounting.chor_bits(r, plan.block_bytes, plan.n)
    return accounting.goldberg_bits(r, plan.block_bytes, plan.n, k)


def _aggregate(plan, r, fault, trials: list[_Trial], touched: tuple[float, float]) -> ExperimentRow:
    ms = [tr.metrics for tr in trials if tr.metrics is not None]
    ks = [m.k for m in ms]
    mean_k = _mean(ks)
    build = _stats([m.build_time for m in ms])
    recovery = _stats([m.recovery_time for m in ms])
    recovery_cpu = _stats([m.recovery_cpu for m in ms])
    rtt = _stats([x for m in ms for x in m.rtts])
    e2e = _stats([m.elapsed for m in ms])
    successes = sum(tr.ok for tr in trials)
    return ExperimentRow(
        SCHEMA_VERSION, plan.protocol, plan.n, plan.t, r, plan.block_bytes, fault, len(trials),
        successes, len(trials) - successes, sum(tr.wrong for tr in trials), sum(tr.byzantine for tr in trials),
        mean_k,
        _mean([m.protocol_bytes_up for m in ms]),
        _mean([m.protocol_bytes_down for m in ms]),
        _mean([m.protocol_bits for m in ms]),
        _mean([_table1(plan, r, m.k) for m in ms]),
        _mean([m.framing_bytes for m in ms]),
        _mean([m.handshake_bytes for m in ms]),
        touched[0], touched[1],
        *build, *recovery, *recovery_cpu, *rtt, *e2e,
    )


def _run_point(plan, db, geo, endpoints, point_seed) -> list[_Trial]:
    if plan.parallel == 1:
        return [_run_trial(db, geo, endpoints, plan, point_seed, i) for i in range(plan.trials)]
    with ThreadPoolExecutor(plan.parallel) as pool:
        return list(pool.map(lambda i: _run_trial(db, geo, endpoints, plan, point_seed, i), range(plan.trials)))


def run_plan(plan: ExperimentPlan, endpoints: Optional[Sequence[ServerEndpoint]] = None,
             db: Optional[DatabaseMatrix] = None) -> list[ExperimentRow]:
    """Run every (record count, fault) point of the plan.

    Without ``endpoints`` each point spawns a loopback cluster over a fresh
    synthetic database.  With ``endpoints`` the remote servers are used as-is
    (fault sweep entries are labels only) and ``db``, if given, is used to
    check retrieved blocks.
    """
    rows: list[ExperimentRow] = []
    for ri, r in enumerate(plan.record_counts):
        for fi, fault in enumerate(plan.faults):
            point_seed = (plan.seed, ri, fi)
            try:
                if endpoints is None:
                    geo = DbGeometry.flat(r, plan.block_bytes)
                    local_db = generate_synthetic(geo, plan.seed + r)
                    with LocalCluster(local_db, faults=server_faults(fault, plan.n), seed=plan.seed) as cluster:
                        trials = _run_point(plan, local_db, geo, cluster.endpoints, point_seed)
                        answered = sum(s.stats.answered for s in cluster.servers)
                        touched = (
                            sum(s.stats.rows_touched for s in cluster.servers) / max(answered, 1),
                            sum(s.stats.bytes_touched for s in cluster.servers) / max(answered, 1),
                        )
                else:
                    if len(endpoints) != plan.n:
                        raise PlanError(f"plan expects {plan.n} servers, got {len(endpoints)}")
                    try:
                        geo, _ = describe(endpoints)
                    except (OSError, asyncio.TimeoutError) as exc:
                        raise PlanAborted(f"endpoint set unreachable: {exc}") from exc
                    if geo.record_count != r:
                        raise PlanError(f"servers hold {geo.record_count} rows, plan point asks for {r}")
                    trials = _run_point(plan, db, geo, endpoints, point_seed)
                    touched = (float("nan"), float("nan"))
            except PlanAborted as exc:
                raise PlanAborted(str(exc), rows) from exc
            rows.append(_aggregate(plan, r, fault, trials, touched))
    return rows


def write_csv(rows: Sequence[ExperimentRow], path, aborted: bool = False) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([getattr(row, c) for c in CSV_COLUMNS])
        if aborted:
            writer.writerow(["#aborted"] + [""] * (len(CSV_COLUMNS) - 1))


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return [row for row in csv.DictReader(fh) if not row["schema_version"].startswith("#")]
