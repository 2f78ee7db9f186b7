#!/usr/bin/env python3
"""End-to-end offline demo: build a corpus, attack it with the mock stack,
export the training dataset, and print the headline numbers."""

import argparse
import json
import tempfile
from pathlib import Path

from madcap.campaign import CampaignConfig, export_rft, run_attack
from madcap.demo import write_demo_corpus


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=None,
                        help="campaign directory (default: a temp dir)")
    parser.add_argument("--pairs", type=int, default=50, help="test pairs to attack")
    parser.add_argument("--n", type=int, default=4, help="candidate budget")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--strategy", default="best_of_n",
                        choices=("best_of_n", "gibbs"))
    args = parser.parse_args()

    out = args.out or Path(tempfile.mkdtemp(prefix="madcap-demo-"))
    corpus_path = out / "corpus.jsonl"
    write_demo_corpus(corpus_path, n_train=args.pairs, n_test=args.pairs, seed=args.seed)

    cfg = CampaignConfig.from_dict({
        "corpus": str(corpus_path),
        "out_dir": str(out / "campaign"),
        "name": "mock-demo",
        "seed": args.seed,
        "n": args.n,
        "selection": {"strategy": args.strategy, "k": 3},
        "providers": {
            "embedding": {"backend": "mock", "seed": 1},
            "nli": {"backend": "mock", "seed": 2},
            "generation": {"backend": "mock", "seed": 3},
            "annotation": {"backend": "mock", "seed": 4},
        },
    })
    result = run_attack(cfg)
    manifest = export_rft(cfg, result.pools, corpus=result.corpus,
                          out_dir=result.out_dir / "rft")

    print(json.dumps({
        "campaign_dir": str(result.out_dir),
        "asr": result.report["asr"],
        "diversity": {k: result.report["diversity"][k]
                      for k in ("entropy", "normalized_entropy", "distinct1")},
        "rft_selected": manifest["m_selected"],
    }, indent=2))


if __name__ == "__main__":
    main()
