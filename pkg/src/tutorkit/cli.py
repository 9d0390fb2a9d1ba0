"""Command-line entry points: cohort simulation, the analytic oracle,
fragment validation, and the HTTP service."""

from __future__ import annotations

import argparse
import sys

from . import simulator
from .errors import TutorKitError
from .model import load_fragment, validate_fragment


def _load_fragment_checked(path: str):
    with open(path, "rb") as fh:
        fragment = load_fragment(fh.read())
    report = validate_fragment(fragment)
    if not report.ok:
        for issue in report.errors:
            print(f"error {issue.code} at {issue.where}: {issue.message}", file=sys.stderr)
        raise SystemExit(2)
    return fragment


def _load_model(path: str):
    with open(path, "rb") as fh:
        return simulator.load_model(fh.read())


def cmd_simulate(args) -> int:
    fragment = _load_fragment_checked(args.fragment)
    model = _load_model(args.model)
    metrics = simulator.simulate(fragment, model, trials=args.trials, seed=args.seed)
    payload = metrics.to_bytes()
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(payload)
    else:
        sys.stdout.buffer.write(payload)
    return 0


def cmd_expected_steps(args) -> int:
    fragment = _load_fragment_checked(args.fragment)
    model = _load_model(args.model)
    print(simulator.analytic_expected_steps(fragment, model))
    return 0


def cmd_validate(args) -> int:
    with open(args.fragment, "rb") as fh:
        fragment = load_fragment(fh.read())
    report = validate_fragment(fragment)
    for issue in report.errors:
        print(f"error {issue.code} at {issue.where}: {issue.message}")
    for issue in report.warnings:
        print(f"warning {issue.code} at {issue.where}: {issue.message}")
    if report.ok:
        print("ok")
        return 0
    return 2


def cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    app = create_app(
        ServiceConfig(
            data_dir=args.data_dir,
            step_cap=args.step_cap,
            api_token=args.api_token,
            static_dir=args.static_dir,
        )
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tutorkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="drive synthetic students through a fragment")
    p.add_argument("--fragment", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("expected-steps", help="fundamental-matrix expected steps")
    p.add_argument("--fragment", required=True)
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_expected_steps)

    p = sub.add_parser("validate", help="structurally validate a fragment file")
    p.add_argument("fragment")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--data-dir", default="./data")
    p.add_argument("--step-cap", type=int, default=1000)
    p.add_argument("--api-token", default=None)
    p.add_argument("--static-dir", default=None)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TutorKitError as exc:
        print(f"error {exc.code}: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
