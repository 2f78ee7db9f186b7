#!/usr/bin/env python3
"""Sweep the candidate budget n and print how the success columns move.

Mock generation derives each completion from (seed, pair, index), so the
candidate sets nest across budgets and Total can only go up.
"""

import argparse
import tempfile
from pathlib import Path

from madcap.campaign import CampaignConfig, run_attack
from madcap.demo import write_demo_corpus


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--budgets", type=int, nargs="+", default=[1, 2, 4, 8, 16])
    parser.add_argument("--pairs", type=int, default=100)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    out = Path(tempfile.mkdtemp(prefix="madcap-sweep-"))
    corpus_path = out / "corpus.jsonl"
    write_demo_corpus(corpus_path, n_train=0, n_test=args.pairs, seed=args.seed)

    print(f"{'n':>4}  {'cross':>7} {'uni':>7} {'dist':>7} {'aux':>7} {'total':>7}")
    for n in sorted(args.budgets):
        cfg = CampaignConfig.from_dict({
            "corpus": str(corpus_path),
            "out_dir": str(out / f"n{n}"),
            "name": f"sweep-n{n}",
            "seed": args.seed,
            "n": n,
            "large_n": max(64, n),
            "providers": {
                "embedding": {"backend": "mock", "seed": 1},
                "nli": {"backend": "mock", "seed": 2},
                "generation": {"backend": "mock", "seed": 3},
                "annotation": {"backend": "mock", "seed": 4},
            },
        })
        asr = run_attack(cfg).asr
        print(f"{n:>4}  {asr.crossmodal:>7.3f} {asr.unimodal:>7.3f} "
              f"{asr.distance:>7.3f} {asr.auxiliary:>7.3f} {asr.total:>7.3f}")


if __name__ == "__main__":
    main()
