#!/usr/bin/env python3
"""Command-line entry point for the mixing laboratory.

Verbs: ``seq validate|build``, ``simulate``, ``verify <suite>``,
``run <scenario...>``, ``report`` and ``status``.
"""

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from config import config
from process.field import ProcessConfig, NoiseSpec, NOISE_LAWS
from process.sequence import ensure_usable, parse_sequence, validate_lacunary
from process.sums import PATH_MODES, MODE_FOCUS, max_statistic, path_profile, sup_norm
from services.artifact_writer import ArtifactWriter, dumps
from services.report_builder import emit_report
from services.scenario import SUITE_SELECTORS, load_scenario, parse_scenario
from services.scenario_runner import (
    EXIT_CAPACITY,
    EXIT_INVALID_INPUT,
    EXIT_OK,
    run_scenario,
)
from utils.errors import CapacityError, LabError
from utils.logger import get_logger
from utils.metrics import metrics

logger = get_logger("main")


# ---------- verbs ----------
def cmd_seq(args: argparse.Namespace) -> int:
    seq = parse_sequence(args.sequence)
    report = validate_lacunary(seq)
    if args.action == "validate":
        print(dumps({"sequence": seq.to_json(), "validation": report.to_dict()}), end="")
        if not report.is_usable:
            logger.error("sequence is not usable: " + "; ".join(report.failures()))
            return EXIT_INVALID_INPUT
        return EXIT_OK
    ensure_usable(seq)
    payload = dumps(seq.to_json())
    if args.output:
        path = Path(args.output)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="\n") as handle:
            handle.write(payload)
        logger.info(f"sequence written to {path}")
    else:
        print(payload, end="")
    return EXIT_OK


def _parse_range(text: str):
    lo, _, hi = text.partition(":")
    return int(lo), int(hi)


def cmd_simulate(args: argparse.Namespace) -> int:
    seq = parse_sequence(args.sequence)
    ensure_usable(seq)
    process = ProcessConfig(
        seq=seq,
        truncation=seq.K if args.truncation is None else args.truncation,
        noise=NoiseSpec(args.noise),
        seed=args.seed,
    )
    n_k = process.n(args.level)
    n_range = _parse_range(args.range) if args.range else (1, n_k * n_k)
    path = path_profile(process, args.level, n_range, args.mode, trial=args.trial)
    writer = ArtifactWriter(args.output or Path(config.OUTPUT_DIR) / "simulate")
    writer.write_csv("path.csv", ["N", "h", "m", "y"], path.csv_rows())
    if args.dump_fields:
        writer.write_csv("fields.csv", ["level", "index", "value"], path.field_rows())
    summary = {
        "config": process.to_json(),
        "level": args.level,
        "mode": args.mode,
        "range": list(n_range),
        "trial": args.trial,
        "intrusion_levels": list(path.intrusion_levels),
    }
    if path.n_lo == 1:
        summary["sup_norm"] = sup_norm(path, path.n_hi)
    if path.n_lo <= 2 * n_k and path.n_hi >= n_k * n_k:
        summary["max_statistic"] = max_statistic(path, args.level)
    writer.write_json("simulate.json", summary)
    logger.info(f"simulated level {args.level} over {n_range}: {writer.directory}")
    return EXIT_OK


def _verify_scenario(args: argparse.Namespace):
    if args.scenario:
        scenario = load_scenario(args.scenario)
        return scenario.with_suite(args.suite)
    lines = [
        f"name = verify-{args.suite}",
        f"suite = {args.suite}",
        f"sequence = {args.sequence}",
        f"seed = {args.seed}",
        f"trials = {args.trials}",
        f"noise = {args.noise}",
    ]
    if args.truncation is not None:
        lines.append(f"truncation = {args.truncation}")
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise LabError(f"--set expects key=value, got '{item}'")
        key = key.strip()
        if "." not in key:
            key = f"{args.suite}.{key}"
        lines.append(f"{key} = {value.strip()}")
    return parse_scenario("\n".join(lines) + "\n", source="<command line>")


def cmd_verify(args: argparse.Namespace) -> int:
    return run_scenario(_verify_scenario(args), args.output, args.workers)


def cmd_run(args: argparse.Namespace) -> int:
    code = EXIT_OK
    for path in args.scenarios:
        scenario = load_scenario(path)
        output = Path(args.output) / scenario.name if args.output else None
        code = max(code, run_scenario(scenario, output, args.workers))
    return code


def cmd_report(args: argparse.Namespace) -> int:
    report = emit_report(args.summaries, args.output or Path(config.OUTPUT_DIR) / "report")
    return EXIT_OK if report["passed"] else 1


def cmd_status(args: argparse.Namespace) -> int:
    status = config.get_configuration_status()
    print(json.dumps(status, indent=2, sort_keys=True))
    return EXIT_OK if status["validation"]["is_valid"] else EXIT_INVALID_INPUT


# ---------- parser ----------
def _add_process_flags(parser: argparse.ArgumentParser, sequence_required: bool) -> None:
    parser.add_argument("--sequence", required=sequence_required, default="explicit:2,64,65600")
    parser.add_argument("--truncation", type=int, default=None)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--noise", choices=NOISE_LAWS, default=NOISE_LAWS[0])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mixlab", description=__doc__)
    parser.add_argument("--output", help="artifact directory (default from MIXLAB_OUTPUT_DIR)")
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--metrics-file", help="write the Prometheus text exposition here")
    verbs = parser.add_subparsers(dest="verb", required=True)

    seq = verbs.add_parser("seq", help="validate or build a level sequence")
    seq.add_argument("action", choices=("validate", "build"))
    seq.add_argument("--sequence", required=True)
    seq.set_defaults(handler=cmd_seq)

    simulate = verbs.add_parser("simulate", help="sample one partial-sum path")
    _add_process_flags(simulate, sequence_required=False)
    simulate.add_argument("--level", type=int, default=2)
    simulate.add_argument("--range", help="N-range as lo:hi")
    simulate.add_argument("--mode", choices=PATH_MODES, default=MODE_FOCUS)
    simulate.add_argument("--trial", type=int, default=0)
    simulate.add_argument("--dump-fields", action="store_true", help="also write fields.csv")
    simulate.set_defaults(handler=cmd_simulate)

    verify = verbs.add_parser("verify", help="run one suite")
    verify.add_argument("suite", choices=SUITE_SELECTORS)
    verify.add_argument("--scenario")
    _add_process_flags(verify, sequence_required=False)
    verify.add_argument("--trials", type=int, default=1000)
    verify.add_argument("--set", action="append", metavar="KEY=VALUE")
    verify.set_defaults(handler=cmd_verify)

    run = verbs.add_parser("run", help="run scenario files")
    run.add_argument("scenarios", nargs="+")
    run.set_defaults(handler=cmd_run)

    report = verbs.add_parser("report", help="merge summary files into a report")
    report.add_argument("summaries", nargs="+")
    report.set_defaults(handler=cmd_report)

    status = verbs.add_parser("status", help="show the configuration")
    status.set_defaults(handler=cmd_status)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code = args.handler(args)
    except CapacityError as exc:
        logger.error(f"{exc}" + (f" (hint: {exc.hint})" if exc.hint else ""))
        code = EXIT_CAPACITY
    except LabError as exc:
        logger.error(f"{exc}" + (f" (hint: {exc.hint})" if exc.hint else ""))
        code = EXIT_INVALID_INPUT
    if args.metrics_file:
        Path(args.metrics_file).write_bytes(metrics.export_text())
    return code


if __name__ == "__main__":
    sys.exit(main())
