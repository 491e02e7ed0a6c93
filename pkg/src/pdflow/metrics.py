"""Prevalence metrics for personal data over an analyzed code base."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from pdflow.config import AnnotationKind
from pdflow.rules import AnalysisResult, Rule
from pdflow.sema import ORIGIN_EXTERNAL, SymbolTable

DEFAULT_MODULE = "(default)"


@dataclass
class MetricsReport:
    total_classes: int
    personal_classes: int
    personal_ratio: float
    handler_contexts: int
    endpoint_functions: int
    per_module_personal: dict[str, int]
    violation_counts: dict[str, int]

    def to_dict(self) -> dict:
        return {
            "totalClasses": self.total_classes,
            "personalClasses": self.personal_classes,
            "personalRatio": self.personal_ratio,
            "handlerContexts": self.handler_contexts,
            "endpointFunctions": self.endpoint_functions,
            "perModulePersonal": dict(sorted(self.per_module_personal.items())),
            "violationCounts": {r.value: self.violation_counts.get(r.value, 0)
                                for r in (Rule.R2, Rule.R3)},
        }


def _declared(table: SymbolTable):
    return [c for c in table.classes.values() if c.origin != ORIGIN_EXTERNAL]


def personal_distribution(table: SymbolTable) -> dict[str, int]:
    """Personal class count per module; classes without a module declaration
    fall under the default bucket."""
    counts = Counter(
        info.module or DEFAULT_MODULE
        for info in _declared(table)
        if table.class_is_personal(info.name))
    return dict(sorted(counts.items()))


def compute_metrics(table: SymbolTable, result: AnalysisResult) -> MetricsReport:
    """Counts and the personal-data share over declared classes.

    Classes registered purely through configuration are external code and
    stay out of every count. Handler contexts count each annotated class
    once plus each method carrying its own handler annotation; endpoint
    functions count methods whose effective context marks them as data
    endpoints.
    """
    declared = _declared(table)
    total = len(declared)
    personal = [c for c in declared if table.class_is_personal(c.name)]
    handler_contexts = sum(
        1 for c in declared if AnnotationKind.HANDLER in c.effective)
    handler_contexts += sum(
        1 for c in declared for m in c.methods
        if AnnotationKind.HANDLER in m.kinds)
    endpoint_functions = sum(
        1 for c in declared for m in c.methods
        if AnnotationKind.DATA_ENDPOINT in m.kinds
        or AnnotationKind.DATA_ENDPOINT in c.effective)
    violations = Counter(d.rule.value for d in result.diagnostics
                         if d.rule in (Rule.R2, Rule.R3))
    return MetricsReport(
        total_classes=total,
        personal_classes=len(personal),
        personal_ratio=len(personal) / max(total, 1),
        handler_contexts=handler_contexts,
        endpoint_functions=endpoint_functions,
        per_module_personal=personal_distribution(table),
        violation_counts=dict(violations),
    )
