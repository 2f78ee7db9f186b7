"""Command-line surface binding all campaign stages.

Exit codes: 0 on success, 1 on a stage failure (the failing stage is
named on stderr), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import campaign as camp
from .contract import check_bridge
from .corpus import CorpusError, ingest
from .providers import ProviderError


def _add_config_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="campaign config JSON")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="dotted-key config override (repeatable)")
    parser.add_argument("--out", default=None, help="output directory override")
    parser.add_argument("--seed", type=int, default=None, help="campaign seed override")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="madcap",
                                     description="deceptive-caption attack campaigns")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load a corpus file and print its statistics")
    p.add_argument("corpus", help="JSONL or CSV corpus file")
    p.add_argument("--format", dest="format_hint", default="auto",
                   choices=("auto", "jsonl", "csv"))

    p = sub.add_parser("attack", help="run a full campaign on the configured split")
    _add_config_args(p)

    p = sub.add_parser("evaluate", help="recompute verdicts from persisted raw candidates")
    _add_config_args(p)
    p.add_argument("--campaign", required=True, help="existing campaign directory")

    p = sub.add_parser("select", help="re-run selection from persisted verdicts")
    _add_config_args(p)
    p.add_argument("--campaign", required=True)
    p.add_argument("--strategy", choices=("best_of_n", "gibbs"), default=None)
    p.add_argument("--k", type=int, default=None, help="gibbs sweep count")

    p = sub.add_parser("export-rft", help="export the fine-tuning dataset from a campaign")
    _add_config_args(p)
    p.add_argument("--campaign", required=True)

    p = sub.add_parser("round", help="run one self-training round (train attack + export + test eval)")
    _add_config_args(p)
    p.add_argument("--round", dest="round_index", type=int, default=None)

    p = sub.add_parser("transfer", help="re-score selected samples under target embedders")
    _add_config_args(p)
    p.add_argument("--campaign", required=True, action="append", dest="campaigns",
                   help="source campaign directory (repeatable)")

    p = sub.add_parser("report", help="print a finished campaign's report.json verbatim")
    p.add_argument("--campaign", required=True)

    p = sub.add_parser("mock-serve-check", help="verify a bridge's mock mode against the golden fixtures")
    p.add_argument("--base-url", required=True)
    p.add_argument("--fixtures", default="fixtures/mock_contract",
                   help="contract fixture directory")
    return parser


def _load_config(args) -> camp.CampaignConfig:
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.out is not None:
        overrides.append(f"out_dir={args.out}")
    return camp.CampaignConfig.from_file(args.config, overrides)


def _print_asr(report: dict) -> None:
    asr = report["asr"]
    print("ASR  cross={cross:.4f} uni={uni:.4f} dist={dist:.4f} aux={aux:.4f} total={total:.4f}".format(**asr))
    div = report["diversity"]
    print(f"Diversity  H={div['entropy']:.4f} H_norm={div['normalized_entropy']:.4f} "
          f"distinct1={div['distinct1']} tokens={div['total_tokens']}")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    stage = args.command
    try:
        if stage == "ingest":
            corpus = ingest(args.corpus, args.format_hint)
            by_split = {}
            for pair in corpus.pairs:
                by_split[pair.split] = by_split.get(pair.split, 0) + 1
            print(json.dumps({
                "name": corpus.name, "pairs": len(corpus.pairs), "l_d": corpus.l_d,
                "distance_threshold": corpus.l_d / 2, "splits": by_split,
            }, sort_keys=True, indent=2))
        elif stage == "attack":
            cfg = _load_config(args)
            result = camp.run_attack(cfg)
            _print_asr(result.report)
            print(f"campaign written to {result.out_dir}")
        elif stage == "evaluate":
            cfg = _load_config(args)
            result = camp.reevaluate(cfg, args.campaign)
            _print_asr(result.report)
        elif stage == "select":
            cfg = _load_config(args)
            if args.strategy is not None:
                cfg = camp.CampaignConfig.from_file(
                    args.config,
                    list(args.overrides) + [f"selection.strategy={args.strategy}"]
                    + ([f"selection.k={args.k}"] if args.k is not None else []))
            result = camp.reselect(cfg, args.campaign)
            _print_asr(result.report)
        elif stage == "export-rft":
            cfg = _load_config(args)
            snapshot = camp.load_snapshot(args.campaign)
            pools = camp.load_pools(args.campaign)
            corpus = ingest(snapshot["resolved_corpus"]).for_split(snapshot["evaluated_split"])
            manifest = camp.export_rft(cfg, pools, corpus=corpus, out_dir=Path(args.campaign) / "rft")
            print(json.dumps(manifest, sort_keys=True, indent=2))
        elif stage == "round":
            cfg = _load_config(args)
            if args.round_index is not None:
                cfg = camp.CampaignConfig.from_file(
                    args.config, list(args.overrides) + [f"round={args.round_index}"])
            handle = camp.run_round(cfg)
            print(json.dumps(handle, sort_keys=True, indent=2))
        elif stage == "transfer":
            cfg = _load_config(args)
            out_path = Path(args.out or cfg.out_dir) / "transfer.csv"
            result = camp.transfer_matrix(cfg, args.campaigns, out_path)
            print(json.dumps(result, sort_keys=True, indent=2))
            print(f"grid written to {out_path}")
        elif stage == "report":
            report_path = Path(args.campaign) / "report.json"
            if not report_path.exists():
                raise camp.CampaignError(f"no report.json under {args.campaign}")
            sys.stdout.write(report_path.read_text(encoding="utf-8"))
        elif stage == "mock-serve-check":
            results = check_bridge(args.base_url, args.fixtures)
            failed = [r for r in results if not r[1]]
            for name, ok, detail in results:
                print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
            if failed:
                print(f"[{stage}] {len(failed)} contract checks failed", file=sys.stderr)
                return 1
    except (camp.CampaignError, CorpusError, ProviderError, FileNotFoundError, ValueError) as exc:
        print(f"[{stage}] {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
