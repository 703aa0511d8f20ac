"""Command-line client.

Runs tasks in process by default, or against a running service with
--server (the CLI then only assembles the request and prints the report).
Exit codes: 0 verdict-yes, 1 mathematical negative, 2 input error,
3 bound insufficient.
"""

from __future__ import annotations

import argparse
import sys

from .reports import Report, emit_report
from .tasks import COMMANDS, InputError, TaskConfig, parse_field_flag, run_task


def build_parser():
    parser = argparse.ArgumentParser(
        prog="koszulkit",
        description="exact bar/cobar computations for dg algebras and ns operads",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("inputs", nargs="*",
                        help="object files or aliases (ass, c0, x2y, onegen, v0)")
    parser.add_argument("--field", default="q", help="q or fp:<p>")
    parser.add_argument("--weight-bound", type=int, default=3, metavar="W")
    parser.add_argument("--arity-bound", type=int, default=6, metavar="K")
    parser.add_argument("--d-max", type=int, default=6)
    parser.add_argument("--witness-bound", type=int, default=5, metavar="N")
    parser.add_argument("--degrees", default=None, metavar="a..b")
    parser.add_argument("--kind", default="pi", choices=["pi", "iota"])
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--format", default="text", choices=["json", "text"])
    parser.add_argument("--out", default=None, help="write the report to a file")
    parser.add_argument("--server", default=None,
                        help="base URL of a running service; run remotely")
    return parser


def parse_degrees(text):
    if text is None:
        return None
    try:
        lo, hi = text.split("..", 1)
        return (int(lo), int(hi))
    except ValueError:
        raise InputError("degrees must look like a..b, got %r" % text)


def run_remote(args) -> tuple[Report, int]:
    import httpx

    payload = {
        "command": args.command,
        "inputs": args.inputs,
        "field": args.field,
        "weight_bound": args.weight_bound,
        "arity_bound": args.arity_bound,
        "d_max": args.d_max,
        "witness_bound": args.witness_bound,
        "degrees": parse_degrees(args.degrees),
        "kind": args.kind,
        "seed": args.seed,
    }
    url = args.server.rstrip("/") + "/v1/run"
    resp = httpx.post(url, json=payload, timeout=600.0)
    resp.raise_for_status()
    body = resp.json()
    data = body["report"]
    report = Report(
        command=data.get("command", args.command),
        verdict=body.get("verdict"),
        exit_code=body.get("exit_code", 0),
        config=data.get("config", {}),
        results=data.get("results", {}),
        windows=data.get("windows", {}),
        witnesses=data.get("witnesses", {}),
        input_digest=data.get("input_digest"),
    )
    return report, body.get("exit_code", 0)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.server:
            report, code = run_remote(args)
        else:
            config = TaskConfig(
                command=args.command,
                inputs=args.inputs,
                field=parse_field_flag(args.field),
                weight_bound=args.weight_bound,
                arity_bound=args.arity_bound,
                d_max=args.d_max,
                witness_bound=args.witness_bound,
                degree_range=parse_degrees(args.degrees),
                kind=args.kind,
                seed=args.seed,
                format=args.format,
            )
            report = run_task(config)
            code = report.exit_code
    except InputError as exc:
        print("input error: %s" % exc, file=sys.stderr)
        return 2
    blob = emit_report(report, args.format)
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(blob)
    else:
        sys.stdout.write(blob.decode())
    return code


if __name__ == "__main__":
    sys.exit(main())
