"""Command line for the scoring sidecar: one model per process."""

from __future__ import annotations

import argparse
import logging

import uvicorn

from .app import create_app
from .scoring import COMETKIWI_SCALE, METRICX_SCALE, ServiceConfig


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qe-sidecar",
        description="Serve a QE backbone behind the /v1/score wire protocol.",
    )
    parser.add_argument("--model", default="Unbabel/wmt22-cometkiwi-da",
                        help="Model checkpoint id (family determines the declared scale).")
    parser.add_argument("--port", type=int, default=8900)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--device", default="cpu", help="cpu or a CUDA device selector.")
    parser.add_argument("--fake", action="store_true",
                        help="Serve deterministic hash-based scores (no weights needed).")
    parser.add_argument("--fake-scale", choices=["cometkiwi", "metricx"], default="cometkiwi",
                        help="Declared scale when running with --fake.")
    parser.add_argument("--batch-limit", type=int, default=32)
    return parser


def main(argv=None) -> None:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    scale = None
    model = args.model
    if args.fake:
        scale = METRICX_SCALE if args.fake_scale == "metricx" else COMETKIWI_SCALE
        if model == "Unbabel/wmt22-cometkiwi-da":
            model = "fake"
    config = ServiceConfig(
        model=model,
        device=args.device,
        port=args.port,
        host=args.host,
        batch_limit=args.batch_limit,
        fake=args.fake,
        scale=scale,
    )
    uvicorn.run(create_app(config), host=config.host, port=config.port, log_level="info")


if __name__ == "__main__":
    main()
