"""Run the bridge: python -m modelbridge [--config cfg.json]."""

from __future__ import annotations

import argparse

import uvicorn

from .config import BridgeConfig
from .service import create_app


def main() -> None:
    parser = argparse.ArgumentParser(prog="modelbridge", description=__doc__)
    parser.add_argument("--config", default=None,
                        help="JSON config file (falls back to MODELBRIDGE_* env vars)")
    parser.add_argument("--host", default=None)
    parser.add_argument("--port", type=int, default=None)
    args = parser.parse_args()

    config = BridgeConfig.from_file(args.config) if args.config else BridgeConfig.from_env()
    host = args.host or config.host
    port = args.port or config.port
    uvicorn.run(create_app(config), host=host, port=port)


if __name__ == "__main__":
    main()
