#!/usr/bin/env python3
"""Regenerate the mock-contract golden fixtures from the in-process mocks.

The fixtures pin the wire responses the bridge's mock mode must reproduce
byte for byte. Rerun only when the documented mock formulas change, and
expect the bridge contract tests to flag the diff.
"""

import argparse
from pathlib import Path

from madcap.contract import FIXTURE_SEED, write_fixtures


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="fixtures/mock_contract", type=Path)
    parser.add_argument("--seed", default=FIXTURE_SEED, type=int)
    args = parser.parse_args()
    write_fixtures(args.out, seed=args.seed)
    print(f"wrote fixtures for seed {args.seed} to {args.out}")


if __name__ == "__main__":
    main()
