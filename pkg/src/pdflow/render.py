"""Text and JSON rendering for analysis results, metrics, and policies.

JSON output is byte-stable for identical inputs: keys are emitted in a fixed
order and every list is sorted upstream.
"""
from __future__ import annotations

import json

from pdflow.metrics import MetricsReport
from pdflow.policygen import PolicyDocument
from pdflow.rules import AnalysisResult

DIAGNOSTICS_SCHEMA_VERSION = 1


def _dumps(data: dict) -> str:
    return json.dumps(data, indent=2)


def diagnostics_envelope(result: AnalysisResult) -> dict:
    return {
        "version": DIAGNOSTICS_SCHEMA_VERSION,
        "diagnostics": [d.to_dict() for d in result.diagnostics],
    }


def render_diagnostics(result: AnalysisResult, fmt: str = "text") -> str:
    if fmt == "json":
        return _dumps(diagnostics_envelope(result))
    lines = [
        f"{d.position.file}:{d.position.line}:{d.position.column}: "
        f"warning[{d.rule.value}]: {d.message}"
        for d in result.diagnostics
    ]
    return "\n".join(lines)


def render_metrics(report: MetricsReport, fmt: str = "text") -> str:
    data = report.to_dict()
    if fmt == "json":
        return _dumps(data)
    rows = [
        ("total_classes", str(data["totalClasses"])),
        ("personal_classes", str(data["personalClasses"])),
        ("personal_ratio", f"{data['personalRatio']:.4f}"),
        ("handler_contexts", str(data["handlerContexts"])),
        ("endpoint_functions", str(data["endpointFunctions"])),
    ]
    for rule, count in data["violationCounts"].items():
        rows.append((f"violations[{rule}]", str(count)))
    for module, count in data["perModulePersonal"].items():
        rows.append((f"personal[{module}]", str(count)))
    width = max(len(name) for name, _ in rows)
    return "\n".join(f"{name.ljust(width)}  {value}" for name, value in rows)


def render_policy(doc: PolicyDocument, fmt: str = "text") -> str:
    data = doc.to_dict()
    if fmt == "json":
        return _dumps(data)
    lines = [f"policy template v{data['version']} "
             f"(source fingerprint {data['generatedFrom']})"]
    for warning in data["warnings"]:
        lines.append(f"warning: {warning}")
    if not data["purposes"]:
        lines.append("no purposes found")
    for purpose in data["purposes"]:
        lines.append(f"purpose {purpose['name']}")
        if purpose["data"]:
            for element in purpose["data"]:
                fields = ", ".join(f"{f['name']}: {f['type']}"
                                   for f in element["fields"])
                lines.append(f"  data {element['class']} ({fields})")
        else:
            lines.append("  data (none)")
        lines.append(f"  unresolved calls: {purpose['unresolvedCalls']}")
    return "\n".join(lines)
