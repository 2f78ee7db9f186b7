#!/usr/bin/env python3
"""Write a synthetic caption/asset corpus for offline mock campaigns."""

import argparse
from pathlib import Path

from madcap.demo import write_demo_corpus


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out", type=Path, help="output JSONL path")
    parser.add_argument("--train", type=int, default=100)
    parser.add_argument("--test", type=int, default=50)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--modality", default="image",
                        choices=("image", "video", "audio"))
    args = parser.parse_args()
    corpus = write_demo_corpus(args.out, n_train=args.train, n_test=args.test,
                               seed=args.seed, modality=args.modality)
    print(f"wrote {len(corpus.pairs)} pairs to {args.out} (l_d={corpus.l_d:.2f})")


if __name__ == "__main__":
    main()
