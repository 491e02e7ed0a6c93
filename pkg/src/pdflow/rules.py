"""Rule checks for personal-data use (R2) and handler boundary calls (R3).

R2: any use of a personal type inside a context without a handler annotation
is a violation. Use sites form a closed list: local declarations, method
parameters, return types, field declarations, and the expression kinds that
can produce a personal value (constructor, call, field access, variable
reference, cast).

R3: inside a handler context, a call passing a personal-typed argument to a
callee that is neither a handler nor a data endpoint (including unresolved
callees) is a violation, one diagnostic per call site.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from pdflow.config import AnalyzerConfig
from pdflow.frontend.ast import (
    AstUnit,
    Call,
    Cast,
    Expr,
    FieldAccess,
    New,
    Position,
    VarRef,
)
from pdflow.sema import (
    BodyTyper,
    ClassInfo,
    MethodSig,
    SemaError,
    SymbolTable,
    build_symbol_table,
    effective_context,
    walk_body,
)


class Rule(Enum):
    R2 = "R2"
    R3 = "R3"
    SEMA = "SEMA"


@dataclass(frozen=True)
class Diagnostic:
    rule: Rule
    position: Position
    message: str
    subject_type: str
    context_owner: tuple[str, str | None]
    callee: tuple[str | None, str] | None = None

    def sort_key(self):
        callee = self.callee or (None, "")
        return (self.position.file, self.position.line, self.position.column,
                self.rule.value, self.subject_type, self.message,
                callee[0] or "", callee[1])

    def to_dict(self) -> dict:
        data = {
            "rule": self.rule.value,
            "file": self.position.file,
            "line": self.position.line,
            "column": self.position.column,
            "message": self.message,
            "subjectType": self.subject_type,
            "contextOwner": {"class": self.context_owner[0],
                             "method": self.context_owner[1]},
        }
        if self.callee is not None:
            data["callee"] = {"class": self.callee[0], "method": self.callee[1]}
        return data

    @classmethod
    def from_dict(cls, data: dict) -> Diagnostic:
        callee = None
        if "callee" in data:
            callee = (data["callee"]["class"], data["callee"]["method"])
        return cls(
            rule=Rule(data["rule"]),
            position=Position(data["file"], data["line"], data["column"]),
            message=data["message"],
            subject_type=data["subjectType"],
            context_owner=(data["contextOwner"]["class"],
                           data["contextOwner"]["method"]),
            callee=callee,
        )


@dataclass
class AnalysisResult:
    diagnostics: list[Diagnostic]
    files_analyzed: int
    classes_seen: int

    def count(self, rule: Rule) -> int:
        return sum(1 for d in self.diagnostics if d.rule is rule)


def _owner_label(owner: tuple[str, str | None]) -> str:
    cls, method = owner
    return f"{cls}.{method}" if method else cls


def _callee_label(callee: tuple[str | None, str]) -> str:
    cls, method = callee
    return f"{cls}.{method}" if cls else method


def _r2_diag(position: Position, subject: str,
             owner: tuple[str, str | None]) -> Diagnostic:
    message = (f"personal data '{subject}' used in "
               f"non-handler context '{_owner_label(owner)}'")
    return Diagnostic(Rule.R2, position, message, subject, owner)


def _r3_diag(position: Position, subject: str, owner: tuple[str, str | None],
             callee: tuple[str | None, str]) -> Diagnostic:
    message = (f"personal data '{subject}' passed to non-endpoint "
               f"'{_callee_label(callee)}' from handler context")
    return Diagnostic(Rule.R3, position, message, subject, owner, callee)


def sema_error_to_diag(err: SemaError) -> Diagnostic:
    return Diagnostic(Rule.SEMA, err.position, err.message, err.subject,
                      err.owner)


def _expr_anchor(expr: Expr) -> Position:
    if isinstance(expr, (FieldAccess, Call)):
        return expr.name_position
    return expr.position


_R2_EXPR_KINDS = (New, Call, FieldAccess, VarRef, Cast)


def _checked_members(unit: AstUnit, table: SymbolTable):
    """Pairs each declared class with its table entry, skipping classes that
    lost a duplicate-name conflict (their bodies are not analyzed)."""
    for decl in unit.classes:
        info = table.lookup(decl.name)
        if info is None or info.decl is not decl:
            continue
        yield decl, info


def check_r2(unit: AstUnit, table: SymbolTable) -> list[Diagnostic]:
    """One diagnostic per personal-type use site outside a handler context.

    Semantic errors found while typing bodies pass through as SEMA
    diagnostics.
    """
    diags: list[Diagnostic] = []
    for decl, info in _checked_members(unit, table):
        class_ctx = effective_context(info, None)
        if not class_ctx.has_handler:
            for f in info.fields:
                t = table.resolve_type(f.type, info)
                if table.is_personal(t):
                    diags.append(_r2_diag(f.position,
                                          table.personal_witness(t),
                                          class_ctx.owner))
        for sig in info.methods:
            ctx = effective_context(info, sig)
            if not ctx.has_handler:
                for _, p_type in sig.params:
                    t = table.resolve_type(p_type, info)
                    if table.is_personal(t):
                        diags.append(_r2_diag(p_type.position,
                                              table.personal_witness(t),
                                              ctx.owner))
                if sig.return_type is not None:
                    t = table.resolve_type(sig.return_type, info)
                    if table.is_personal(t):
                        diags.append(_r2_diag(sig.return_type.position,
                                              table.personal_witness(t),
                                              ctx.owner))
            if sig.decl is None or sig.decl.body is None:
                continue
            typer = BodyTyper(table, info, sig)

            def on_expr(expr, t, ctx=ctx):
                if (not ctx.has_handler and isinstance(expr, _R2_EXPR_KINDS)
                        and table.is_personal(t)):
                    diags.append(_r2_diag(_expr_anchor(expr),
                                          table.personal_witness(t),
                                          ctx.owner))

            def on_local(stmt, t, ctx=ctx):
                if not ctx.has_handler and table.is_personal(t):
                    diags.append(_r2_diag(stmt.position,
                                          table.personal_witness(t),
                                          ctx.owner))

            walk_body(typer, sig.decl.body, on_expr, on_local)
            diags.extend(sema_error_to_diag(e) for e in typer.errors)
    return diags


def check_r3(unit: AstUnit, table: SymbolTable) -> list[Diagnostic]:
    """One diagnostic per call leaking a personal argument out of a handler
    context to a callee that is neither handler nor endpoint."""
    diags: list[Diagnostic] = []
    for decl, info in _checked_members(unit, table):
        for sig in info.methods:
            ctx = effective_context(info, sig)
            if not ctx.has_handler:
                continue
            if sig.decl is None or sig.decl.body is None:
                continue
            typer = BodyTyper(table, info, sig)

            def on_expr(expr, t, ctx=ctx, typer=typer):
                if not isinstance(expr, Call):
                    return
                resolved = typer.resolve_call(expr)
                if resolved is not None:
                    callee_info, callee_sig = resolved
                    callee_ctx = effective_context(callee_info, callee_sig)
                    if callee_ctx.has_handler or callee_ctx.has_endpoint:
                        return
                    callee = (callee_info.name, callee_sig.name)
                else:
                    callee = (None, expr.method)
                for arg in expr.args:
                    arg_t = typer.type_of(arg)
                    if table.is_personal(arg_t):
                        diags.append(_r3_diag(
                            _expr_anchor(expr),
                            table.personal_witness(arg_t),
                            ctx.owner, callee))
                        return

            walk_body(typer, sig.decl.body, on_expr)
            diags.extend(sema_error_to_diag(e) for e in typer.errors)
    return diags


def merge_diagnostics(groups) -> list[Diagnostic]:
    """Sort by (file, line, column, rule, ...) and drop exact duplicates."""
    merged = sorted((d for group in groups for d in group),
                    key=Diagnostic.sort_key)
    out: list[Diagnostic] = []
    for d in merged:
        if not out or out[-1] != d:
            out.append(d)
    return out


def analyze_parts(units, summaries, config: AnalyzerConfig):
    """Run the table build plus per-unit checks, keeping table-level
    diagnostics separate from unit-local ones (the incremental layer caches
    only the latter)."""
    units = sorted(units, key=lambda u: u.path)
    table = build_symbol_table(units, summaries, config)
    table_diags = [sema_error_to_diag(e) for e in table.errors]
    per_file: dict[str, list[Diagnostic]] = {}
    for unit in units:
        local: list[Diagnostic] = []
        for err in unit.errors:
            local.append(Diagnostic(Rule.SEMA, err.position,
                                    f"parse error: {err.message}", "",
                                    ("", None)))
        local.extend(check_r2(unit, table))
        local.extend(check_r3(unit, table))
        per_file[unit.path] = merge_diagnostics([local])
    return table, table_diags, per_file


def analyze(units, summaries, config: AnalyzerConfig) -> AnalysisResult:
    """Full analysis over parsed units; summary-only files contribute their
    declarations to the table but are never rule-checked themselves."""
    summaries = list(summaries)
    table, table_diags, per_file = analyze_parts(units, summaries, config)
    diagnostics = merge_diagnostics([table_diags, *per_file.values()])
    declared = sum(1 for c in table.classes.values() if c.origin != "external")
    return AnalysisResult(
        diagnostics=diagnostics,
        files_analyzed=len(per_file) + len(summaries),
        classes_seen=declared,
    )
