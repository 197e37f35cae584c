"""Command line entry point.

Exit codes: 0 when every check passes, 1 when a check fails, 2 on a
configuration error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from .config import ConfigError, load_config
from .report import canonical_json, csv_text, write_text
from .runner import SUBCOMMANDS, run_section

EXIT_OK, EXIT_CHECK, EXIT_CONFIG = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="glscatter",
        description="Finite-truncation checks for warped-convolution deformed scattering theory.",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS + ("all",))
    parser.add_argument("--config", type=Path, default=None, help="YAML experiment config (default: bundled)")
    parser.add_argument("--out", type=Path, default=Path("glscatter-out"), help="output directory")
    parser.add_argument("--seed", type=int, default=0, help="seed for randomized property sweeps")
    parser.add_argument("--json", action="store_true", help="print a machine-readable summary to stdout")
    return parser


def run(subcommand: str, config: Path | None, out: Path, seed: int = 0) -> tuple[int, dict]:
    """Execute one subcommand (or all of them) and write ``report.json`` plus CSVs into ``out``."""
    cfg = load_config(config)
    names = SUBCOMMANDS if subcommand == "all" else (subcommand,)
    sections = {}
    for name in names:
        sec = run_section(name, cfg, seed)
        sections[name] = sec.as_dict()
        for fname, (header, rows) in sec.tables.items():
            write_text(out / fname, csv_text(header, rows))
    passed = all(s["passed"] for s in sections.values())
    report = {
        "subcommand": subcommand,
        "seed": seed,
        "config": cfg.model_dump(mode="json"),
        "sections": sections,
        "passed": passed,
    }
    write_text(out / "report.json", canonical_json(report))
    return (EXIT_OK if passed else EXIT_CHECK), report


def _summary(report: dict) -> dict:
    failed = {
        name: sorted(k for k, c in sec["checks"].items() if not c["passed"])
        for name, sec in report["sections"].items()
    }
    return {
        "passed": report["passed"],
        "sections": {name: sec["passed"] for name, sec in report["sections"].items()},
        "failed_checks": {k: v for k, v in failed.items() if v},
    }


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed < 0 or args.seed >= 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    try:
        code, report = run(args.subcommand, args.config, args.out, args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    summary = _summary(report)
    if args.json:
        print(json.dumps(summary, sort_keys=True))
    else:
        for name, ok in summary["sections"].items():
            print(f"{name:14s} {'PASS' if ok else 'FAIL'}")
            for check in summary["failed_checks"].get(name, []):
                c = report["sections"][name]["checks"][check]
                detail = c.get("message") or f"value={c.get('value')!r} tolerance={c.get('tolerance')!r}"
                print(f"  failed: {check} ({detail})")
        print(f"report: {args.out / 'report.json'}")
    return code


if __name__ == "__main__":
    sys.exit(main())
