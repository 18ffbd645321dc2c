"""Command-line entry points: ``pirgrid`` and ``specdb``."""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import sys
import time

from . import accounting
from .client import ServerEndpoint, private_fetch
from .errors import PirError, PlanAborted
from .harness import ExperimentPlan, run_plan, write_csv
from .server import serve_forever
from .specdb import DbGeometry, SpectrumKey, generate_synthetic, load_db, save_db


def _split_addr(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    return host or "127.0.0.1", int(port)


def cmd_serve(args) -> int:
    host, port = _split_addr(args.listen)

    def ready(bound):
        print(f"listening {bound[0]}:{bound[1]}", flush=True)

    try:
        asyncio.run(serve_forever(args.db, host, port, args.fault, args.seed, args.server_id, ready))
    except KeyboardInterrupt:
        pass
    return 0


def cmd_fetch(args) -> int:
    endpoints = ServerEndpoint.parse_list(args.servers)
    key = SpectrumKey(args.x, args.y, args.channel, args.slot)
    try:
        block, report, metrics = private_fetch(key, endpoints, args.proto, args.t,
                                               deadline=args.deadline_ms / 1000.0)
    except PirError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    out = {
        "block": block.hex(),
        "method": report.method,
        "honest": sorted(report.honest),
        "byzantine": sorted(report.byzantine),
        "absent": sorted(report.absent),
        "k": metrics.k,
        "protocol_bytes_up": metrics.protocol_bytes_up,
        "protocol_bytes_down": metrics.protocol_bytes_down,
        "framing_bytes": metrics.framing_bytes,
        "build_ms": metrics.build_time * 1000,
        "recovery_ms": metrics.recovery_time * 1000,
        "elapsed_ms": metrics.elapsed * 1000,
    }
    print(json.dumps(out, indent=2))
    return 0


def cmd_bench(args) -> int:
    plan = ExperimentPlan.load(args.plan)
    endpoints = ServerEndpoint.parse_list(args.servers) if args.servers else None
    db = load_db(args.db) if args.db else None
    try:
        rows = run_plan(plan, endpoints, db)
    except PlanAborted as exc:
        write_csv(exc.rows, args.out, aborted=True)
        print(f"aborted: {exc}; {len(exc.rows)} rows written to {args.out}", file=sys.stderr)
        return 3
    write_csv(rows, args.out)
    print(f"{len(rows)} rows written to {args.out}")
    return 0


def cmd_account(args) -> int:
    start = time.perf_counter()
    lines = accounting.account_table0(args.r, args.b, args.n, args.k)
    for line in lines:
        print(line)
    print(f"computed in {(time.perf_counter() - start) * 1000:.3f} ms")
    return 0


def pirgrid_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pirgrid", description="Multi-server private spectrum-database queries")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("serve", help="host one replica")
    s.add_argument("--db", required=True)
    s.add_argument("--listen", default="127.0.0.1:0")
    s.add_argument("--fault", default="none")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--server-id", type=int, default=0)
    s.set_defaults(func=cmd_serve)

    f = sub.add_parser("fetch", help="privately fetch one record")
    f.add_argument("--servers", required=True, help="host:port,host:port,...")
    f.add_argument("--proto", choices=["chor", "goldberg"], default="goldberg")
    f.add_argument("--t", type=int, default=None, help="privacy threshold (goldberg); default floor((n-1)/2)")
    f.add_argument("--x", type=int, required=True)
    f.add_argument("--y", type=int, required=True)
    f.add_argument("--channel", type=int, required=True)
    f.add_argument("--slot", type=int, required=True)
    f.add_argument("--deadline-ms", type=float, default=5000.0)
    f.set_defaults(func=cmd_fetch)

    b = sub.add_parser("bench", help="run an experiment plan")
    b.add_argument("--plan", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--servers", default=None, help="use running servers instead of a local cluster")
    b.add_argument("--db", default=None, help="local copy of the served database, for checking answers")
    b.set_defaults(func=cmd_bench)

    a = sub.add_parser("account-table0", help="closed-form communication cost")
    a.add_argument("--r", type=int, default=10**6)
    a.add_argument("--b", type=int, default=560)
    a.add_argument("--n", type=int, default=6)
    a.add_argument("--k", type=int, default=6)
    a.set_defaults(func=cmd_account)
    return p


def cmd_gen(args) -> int:
    gx, gy = (int(v) for v in args.grid.split(","))
    geo = DbGeometry.build(gx, gy, args.channels, args.slots, args.block_bytes)
    if args.rows is not None and args.rows != geo.record_count:
        print(f"error: --rows {args.rows} != {gx}*{gy}*{args.channels}*{args.slots} = {geo.record_count}",
              file=sys.stderr)
        return 2
    db = generate_synthetic(geo, args.seed)
    save_db(db, args.out)
    print(f"{args.out}: r={db.r} b={db.b} digest={db.content_digest.hex()}")
    return 0


def cmd_digest(args) -> int:
    try:
        db = load_db(args.path)
    except PirError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(db.content_digest.hex())
    return 0


def specdb_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="specdb", description="Synthetic spectrum databases in SPDB format")
    sub = p.add_subparsers(dest="command", required=True)
    g = sub.add_parser("gen")
    g.add_argument("--rows", type=int, default=None)
    g.add_argument("--block-bytes", type=int, default=560)
    g.add_argument("--grid", default="16,16", help="X,Y")
    g.add_argument("--channels", type=int, default=32)
    g.add_argument("--slots", type=int, default=8)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)
    d = sub.add_parser("digest")
    d.add_argument("path")
    d.set_defaults(func=cmd_digest)
    return p


def main(argv=None) -> int:
    args = pirgrid_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    return args.func(args)


def specdb_main(argv=None) -> int:
    args = specdb_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
