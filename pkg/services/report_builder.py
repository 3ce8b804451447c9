"""Merges scenario summaries into report.md and report.json."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Union

from services.artifact_writer import ArtifactWriter
from utils.errors import MergeError
from utils.logger import get_logger

logger = get_logger("report_builder")

CLAIM_ORDER = ("a", "b", "c", "d", "e", "coboundary")
CLAIM_TITLES = {
    "a": "Central limit theorem under sqrt(n) normalisation",
    "b": "Failure of the weak invariance principle",
    "c": "Variance of order N",
    "d": "Absolute-regularity rate",
    "e": "Finite moments of every order",
    "coboundary": "Exact partial-sum identities",
}


def _claim_key(claim: str):
    return (CLAIM_ORDER.index(claim), claim) if claim in CLAIM_ORDER else (len(CLAIM_ORDER), claim)


def load_summaries(paths: Iterable[Union[str, Path]]) -> List[Dict[str, Any]]:
    merged: Dict[str, Dict[str, Any]] = {}
    for path in paths:
        path = Path(path)
        if path.is_dir():
            path = path / "summary.json"
        try:
            summary = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise MergeError(f"cannot read summary {path}: {exc}") from exc
        name = summary.get("scenario")
        if not name:
            raise MergeError(f"summary {path} has no scenario name")
        if name in merged and merged[name] != summary:
            raise MergeError(
                f"scenario '{name}' appears twice with different results",
                hint="rerun one of them or give the scenarios distinct names",
            )
        merged[name] = summary
    return [merged[name] for name in sorted(merged)]


def build_report(summaries: List[Dict[str, Any]]) -> Dict[str, Any]:
    claims: Dict[str, List[Dict[str, Any]]] = {}
    for summary in summaries:
        for check in summary.get("checks", []):
            claims.setdefault(check["claim"], []).append(
                {
                    "scenario": summary["scenario"],
                    "suite": check["suite"],
                    "name": check["name"],
                    "passed": check["passed"],
                    "observed": check.get("observed"),
                    "expected": check.get("expected"),
                    "error": check.get("error"),
                }
            )
    ordered = {claim: claims[claim] for claim in sorted(claims, key=_claim_key)}
    return {
        "scenarios": [
            {"name": s["scenario"], "suite": s["suite"], "seed": s["seed"], "passed": s["passed"]}
            for s in summaries
        ],
        "claims": {
            claim: {
                "title": CLAIM_TITLES.get(claim, claim),
                "passed": all(c["passed"] for c in checks),
                "checks": checks,
            }
            for claim, checks in ordered.items()
        },
        "passed": all(s["passed"] for s in summaries),
    }


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6g}"
    text = json.dumps(value, sort_keys=True) if isinstance(value, (dict, list)) else str(value)
    return text if len(text) <= 60 else text[:57] + "..."


def render_markdown(report: Dict[str, Any]) -> str:
    lines = ["# Mixing laboratory report", ""]
    lines.append("| scenario | suite | seed | status |")
    lines.append("|---|---|---|---|")
    for s in report["scenarios"]:
        lines.append(f"| {s['name']} | {s['suite']} | {s['seed']} | {'PASS' if s['passed'] else 'FAIL'} |")
    for claim, block in report["claims"].items():
        lines += ["", f"## ({claim}) {block['title']}: {'PASS' if block['passed'] else 'FAIL'}", ""]
        lines.append("| scenario | check | status | observed | expected |")
        lines.append("|---|---|---|---|---|")
        for check in block["checks"]:
            status = "PASS" if check["passed"] else ("ERROR" if check["error"] else "FAIL")
            lines.append(
                f"| {check['scenario']} | {check['suite']}.{check['name']} | {status} "
                f"| {_cell(check['observed'])} | {_cell(check['expected'])} |"
            )
    return "\n".join(lines) + "\n"


def emit_report(summary_paths: Iterable[Union[str, Path]], output_dir: Union[str, Path]) -> Dict[str, Any]:
    summaries = load_summaries(summary_paths)
    if not summaries:
        raise MergeError("no summaries to merge")
    report = build_report(summaries)
    writer = ArtifactWriter(output_dir)
    writer.write_json("report.json", report)
    path = writer.directory / "report.md"
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        handle.write(render_markdown(report))
    logger.info(f"report over {len(summaries)} scenario(s) written to {writer.directory}")
    return report
