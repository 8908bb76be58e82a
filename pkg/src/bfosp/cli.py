"""Command-line interface for running campaigns from a terminal.

Every state-carrying command takes --campaign pointing at the campaign's
JSON file; results print as JSON on stdout so the commands compose with
shell pipelines.
"""

from __future__ import annotations

import argparse
import json
import sys

from .campaign import Campaign, run_synthetic
from .errors import ConfigError
from .optimizer import OptimizerConfig
from .service import serve


def _print(payload) -> None:
    json.dump(payload, sys.stdout, indent=1)
    sys.stdout.write("\n")


def _cmd_init(args) -> None:
    with open(args.config) as fh:
        payload = json.load(fh)
    config = OptimizerConfig.from_json(payload)
    campaign = Campaign.create(
        config,
        path=args.campaign,
        campaign_id=payload.get("campaign_id"),
        seed=int(payload.get("seed", 0)),
    )
    _print(campaign.status())


def _cmd_ask(args) -> None:
    campaign = Campaign.open(args.campaign)
    _print({"suggestions": campaign.ask(grid_size=args.grid)})


def _cmd_tell(args) -> None:
    if len(args.token) != len(args.y):
        raise ConfigError("--token and --y must be given the same number of times")
    campaign = Campaign.open(args.campaign)
    _print(campaign.tell(dict(zip(args.token, args.y))))


def _cmd_status(args) -> None:
    _print(Campaign.open(args.campaign).status())


def _cmd_export(args) -> None:
    campaign = Campaign.open(args.campaign)
    _print(campaign.export_curve(which=args.what, grid_size=args.grid, index=args.index))


def _cmd_run_synthetic(args) -> None:
    result = run_synthetic(
        shape=args.shape,
        iterations=args.iters,
        seed=args.seed,
        prior_kind=args.prior,
        batch_size=args.batch_size,
        path=args.campaign,
    )
    if args.log_out:
        with open(args.log_out, "w") as fh:
            for record in result["records"]:
                fh.write(json.dumps(record) + "\n")
    result.pop("records")
    _print(result)


def _cmd_serve(args) -> None:
    serve(addr=args.addr, root=args.root)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bfosp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="create a campaign from a JSON config file")
    p.add_argument("--config", required=True, help="path to the config JSON")
    p.add_argument("--campaign", required=True, help="path for the campaign state file")
    p.set_defaults(fn=_cmd_init)

    p = sub.add_parser("ask", help="get (or repeat) the current suggestion batch")
    p.add_argument("--campaign", required=True)
    p.add_argument("--grid", type=int, default=101, help="curve sample resolution")
    p.set_defaults(fn=_cmd_ask)

    p = sub.add_parser("tell", help="report observed outcomes for pending tokens")
    p.add_argument("--campaign", required=True)
    p.add_argument("--token", action="append", default=[], help="repeatable")
    p.add_argument("--y", action="append", type=float, default=[], help="repeatable")
    p.set_defaults(fn=_cmd_tell)

    p = sub.add_parser("status", help="print the campaign summary")
    p.add_argument("--campaign", required=True)
    p.set_defaults(fn=_cmd_status)

    p = sub.add_parser("export", help="export a curve in application units")
    p.add_argument("--campaign", required=True)
    p.add_argument("--what", choices=("incumbent", "suggestion"), default="incumbent")
    p.add_argument("--grid", type=int, default=101)
    p.add_argument("--index", type=int, default=0, help="suggestion index")
    p.set_defaults(fn=_cmd_export)

    p = sub.add_parser("run-synthetic", help="closed-loop benchmark driver")
    p.add_argument("--shape", choices=("decreasing", "unimodal"), required=True)
    p.add_argument("--iters", type=int, default=40)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--prior",
        choices=("increasing", "decreasing", "unimodal", "range_only"),
        default=None,
        help="override the shape-matched prior",
    )
    p.add_argument("--batch-size", type=int, default=1)
    p.add_argument("--campaign", default=None, help="optional state file to persist")
    p.add_argument("--log-out", default=None, help="write the run log as JSON lines")
    p.set_defaults(fn=_cmd_run_synthetic)

    p = sub.add_parser("serve", help="run the HTTP JSON API")
    p.add_argument("--addr", default=None, help="host:port (default BFOSP_ADDR or 127.0.0.1:8700)")
    p.add_argument("--root", default=None, help="campaign directory (default BFOSP_ROOT or ./campaigns)")
    p.set_defaults(fn=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.fn(args)
    except Exception as exc:
        json.dump({"error": {"code": type(exc).__name__, "message": str(exc)}}, sys.stderr)
        sys.stderr.write("\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
