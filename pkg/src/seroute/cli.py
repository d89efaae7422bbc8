"""Command line front end for the routing pipeline and gateway.

Exit codes: 0 success, 1 validation problem (the message names the
offending path or value), 2 provider failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import pipeline
from .errors import (
    BackendFailure,
    BackendTimeout,
    JudgeFailure,
    OracleFailure,
    ProviderFailure,
    SerouteError,
)
from .gateway import GatewayConfig, RouterGateway
from .pipeline import ROUTER_KINDS, PipelineManifest

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_PROVIDER = 2

_PROVIDER_ERRORS = (
    ProviderFailure,
    OracleFailure,
    JudgeFailure,
    BackendFailure,
    BackendTimeout,
)


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; keep 2 reserved for
    provider failures by downgrading usage errors to 1."""

    def error(self, message):
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="seroute",
        description="Uncertainty-driven routing between a strong and a weak model.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_stage(name: str, help_text: str, router: bool = False) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--manifest", required=True, help="pipeline manifest JSON")
        p.add_argument("--seed", type=int, default=None, help="override the manifest seed")
        p.add_argument("--tau", type=float, default=None, help="override the tie threshold")
        p.add_argument("--mock", action="store_true", help="force every provider to mock")
        if router:
            p.add_argument("--router", required=True, choices=ROUTER_KINDS)
        return p

    add_stage("sample", "draw samples and record the benchmark")
    add_stage("cluster", "group samples into meaning clusters")
    add_stage("se", "score the uncertainty of each clustering")
    add_stage("build-prefs", "label strong/weak/tie preference records")
    add_stage("embed", "embed prompts into the vector store")
    add_stage("train", "fit one router and save its artifact", router=True)
    add_stage("sweep", "replay the benchmark across all thresholds", router=True)
    cpt_p = add_stage("cpt", "report the strong fraction reaching x%% quality", router=True)
    cpt_p.add_argument("--x", type=float, required=True, help="quality target in (0, 100]")
    add_stage("judge", "score both recorded responses with the judge")
    route_p = add_stage("route", "route one prompt through a stored artifact", router=True)
    route_p.add_argument("--prompt", required=True)
    route_p.add_argument("--threshold", type=float, default=0.5)

    serve_p = sub.add_parser("serve", help="run the HTTP routing gateway")
    serve_p.add_argument("--config", required=True, help="gateway config JSON")
    return parser


def _run_serve(config_path: str) -> int:
    gateway = RouterGateway(GatewayConfig.from_file(config_path))
    checksum = gateway.load()
    gateway.start()
    print(
        json.dumps({"artifact_checksum": checksum, "listening": gateway.address}),
        flush=True,
    )
    gateway.run()
    return EXIT_OK


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "serve":
        return _run_serve(args.config)

    manifest = PipelineManifest.from_file(
        args.manifest, seed=args.seed, tau=args.tau, mock=args.mock
    )
    if args.command == "sample":
        produced = pipeline.run_sample(manifest)
    elif args.command == "cluster":
        produced = pipeline.run_cluster(manifest)
    elif args.command == "se":
        produced = pipeline.run_se(manifest)
    elif args.command == "build-prefs":
        produced = pipeline.run_build_prefs(manifest)
    elif args.command == "embed":
        produced = pipeline.run_embed(manifest)
    elif args.command == "train":
        produced = pipeline.run_train(manifest, args.router)
    elif args.command == "sweep":
        produced = pipeline.run_sweep(manifest, args.router)
    elif args.command == "cpt":
        value = pipeline.run_cpt(manifest, args.router, args.x)
        print(
            json.dumps(
                {"cpt": value, "router_kind": args.router, "x_percent": args.x},
                sort_keys=True,
            )
        )
        return EXIT_OK
    elif args.command == "judge":
        produced = pipeline.run_judge(manifest)
    elif args.command == "route":
        decision = pipeline.run_route(manifest, args.router, args.prompt, args.threshold)
        print(json.dumps(decision, sort_keys=True))
        return EXIT_OK
    else:  # unreachable; subparsers are required
        raise AssertionError(args.command)
    for path in produced:
        print(path)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_VALIDATION
    try:
        return _dispatch(args)
    except _PROVIDER_ERRORS as exc:
        print(f"provider failure: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except SerouteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
