"""Command line front end.

``serve`` owns the simulated deployment (bus, emulated nodes, HTTP API);
every other subcommand is a thin JSON client for a running server, so the
CLI and the dashboard exercise exactly the same HTTP surface.
"""

from __future__ import annotations

import argparse
import json
import sys
import urllib.error
import urllib.request
from urllib.parse import quote

from .config import build_world, load_config
from .httpapi import ApiServer

DEFAULT_URL = "http://127.0.0.1:8735"


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.fn(args)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clusterbus",
        description="Power control for cluster nodes over a simulated serial bus.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the master service and HTTP API")
    serve.add_argument("--config", help="config JSON path (else $CLUSTERBUS_CONFIG)")
    serve.add_argument("--bind", help="host:port override")
    serve.set_defaults(fn=cmd_serve)

    scan = sub.add_parser("scan", help="probe a bus address range")
    scan.add_argument("--from", dest="start", type=int, default=1)
    scan.add_argument("--to", dest="stop", type=int, default=254)
    _client_args(scan)
    scan.set_defaults(fn=cmd_scan)

    power = sub.add_parser("power", help="switch a node, a block, or everything")
    power.add_argument("state", choices=["on", "off"])
    group = power.add_mutually_exclusive_group(required=True)
    group.add_argument("--node", type=int, help="unicast node address")
    group.add_argument("--block", help="block name")
    group.add_argument("--broadcast", action="store_true", help="all nodes, no acks")
    _client_args(power)
    power.set_defaults(fn=cmd_power)

    status = sub.add_parser("status", help="show one node record or the registry")
    status.add_argument("address", nargs="?", type=int)
    _client_args(status)
    status.set_defaults(fn=cmd_status)

    sensors = sub.add_parser("sensors", help="read temperature and humidity")
    sensors.add_argument("address", type=int)
    _client_args(sensors)
    sensors.set_defaults(fn=cmd_sensors)

    blocks = sub.add_parser("blocks", help="list or define node blocks")
    blocks.add_argument("--create", metavar="NAME", help="define/replace a block")
    blocks.add_argument(
        "--nodes", help="comma-separated addresses (with --create)", default=""
    )
    _client_args(blocks)
    blocks.set_defaults(fn=cmd_blocks)

    audit = sub.add_parser("audit", help="query the audit log")
    audit.add_argument("--since")
    audit.add_argument("--until")
    audit.add_argument("--actor-filter", dest="actor_filter")
    audit.add_argument("--target")
    _client_args(audit)
    audit.set_defaults(fn=cmd_audit)

    return parser


def _client_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--url", default=DEFAULT_URL, help="server base URL")
    sub.add_argument("--actor", default="anonymous", help="actor string for the audit log")


# -- subcommands -----------------------------------------------------------------


def cmd_serve(args) -> int:
    config = load_config(args.config)
    world = build_world(config)
    server_cfg = config["server"]
    bind = args.bind or server_cfg["bind"]
    server = ApiServer(
        world.service, bind=bind, static_dir=server_cfg.get("static_dir")
    )
    if server_cfg.get("scan_on_start", True) and world.nodes:
        found = world.service.scan_bus(actor="system")
        print(f"startup scan: {len(found)} nodes responding", file=sys.stderr)
    print(f"listening on {server.url}", file=sys.stderr)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
        world.close()
    return 0


def cmd_scan(args) -> int:
    return _emit(
        _request(
            f"{args.url}/bus/scan",
            method="POST",
            body={"from": args.start, "to": args.stop},
            actor=args.actor,
        )
    )


def cmd_power(args) -> int:
    body = {"state": args.state}
    if args.broadcast:
        path = "/power/broadcast"
    elif args.block is not None:
        path = f"/blocks/{args.block}/power"
    else:
        path = f"/nodes/{args.node}/power"
    return _emit(_request(f"{args.url}{path}", method="POST", body=body, actor=args.actor))


def cmd_status(args) -> int:
    path = "/nodes" if args.address is None else f"/nodes/{args.address}"
    return _emit(_request(f"{args.url}{path}"))


def cmd_sensors(args) -> int:
    return _emit(_request(f"{args.url}/nodes/{args.address}/sensors", actor=args.actor))


def cmd_blocks(args) -> int:
    if args.create:
        addresses = [int(a) for a in args.nodes.split(",") if a.strip()]
        return _emit(
            _request(
                f"{args.url}/blocks",
                method="POST",
                body={"name": args.create, "nodes": addresses},
                actor=args.actor,
            )
        )
    return _emit(_request(f"{args.url}/blocks"))


def cmd_audit(args) -> int:
    params = []
    for key, value in (
        ("since", args.since),
        ("until", args.until),
        ("actor", args.actor_filter),
        ("target", args.target),
    ):
        if value:
            params.append(f"{key}={quote(value)}")
    suffix = "?" + "&".join(params) if params else ""
    return _emit(_request(f"{args.url}/audit{suffix}"))


# -- HTTP plumbing ------------------------------------------------------------------


def _request(url: str, method: str = "GET", body=None, actor: str | None = None):
    data = json.dumps(body).encode("utf-8") if body is not None else None
    request = urllib.request.Request(url, data=data, method=method)
    request.add_header("Content-Type", "application/json")
    if actor:
        request.add_header("X-Actor", actor)
    try:
        with urllib.request.urlopen(request) as response:
            return response.status, json.loads(response.read() or b"null")
    except urllib.error.HTTPError as exc:
        payload = exc.read()
        try:
            decoded = json.loads(payload) if payload else {"error": str(exc)}
        except json.JSONDecodeError:
            decoded = {"error": payload.decode("utf-8", "replace")}
        return exc.code, decoded


def _emit(result: tuple[int, object]) -> int:
    status, payload = result
    print(json.dumps(payload, indent=2))
    return 0 if 200 <= status < 300 else 1


if __name__ == "__main__":
    sys.exit(main())
