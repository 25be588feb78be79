"""Command line entry point: ``pa-pec-lab --suite universal2 --out report.json``.

Exit status is 0 when no inequality is violated, 1 on any violation and 2
for usage or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from .campaign import SUITES, CampaignConfig, ConfigError, dumps_report, run_campaign

EXIT_PASS, EXIT_VIOLATION, EXIT_CONFIG = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pa-pec-lab", description="Run a seeded verification campaign.")
    p.add_argument("--suite", choices=SUITES)
    p.add_argument("--config", help="JSON file with campaign settings")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="report path (default: stdout)")
    p.add_argument("--trials", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--jobs", type=int, help="worker processes")
    return p


def load_config(args: argparse.Namespace) -> CampaignConfig:
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    for key in ("suite", "seed", "out", "trials", "tol", "jobs"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    if "suite" not in data:
        raise ConfigError("no suite given")
    return CampaignConfig.from_dict(data).validate()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
    except (ConfigError, TypeError) as exc:
        print(f"pa-pec-lab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = run_campaign(cfg)
    except (ValueError, RuntimeError) as exc:
        # a crash is not a violation, so it must not share exit status 1
        print(f"pa-pec-lab: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = dumps_report(report)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    s = report["summary"]
    print(f"{cfg.suite}: {s['pass']} pass, {s['fail']} fail, {s['inconclusive']} inconclusive",
          file=sys.stderr)
    for v in report["violations"]:
        print(f"  violation: trial {v['trial']} {v['name']} ({v['anchor']})", file=sys.stderr)
    return EXIT_VIOLATION if report["violations"] else EXIT_PASS
