"""Per-file declaration summaries and the content-hash-keyed cache.

A summary captures everything other files can observe about a file (class
signatures and annotations) and nothing about method bodies, so analysis
composes per file: unchanged-summary files keep their cached diagnostics and
only files that could be affected by a change are re-checked. The result of
an incremental run is identical to a cold run over the same texts.
"""
from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field

from pdflow.config import AnalyzerConfig
from pdflow.frontend.ast import (
    AstUnit,
    Block,
    Call,
    Cast,
    ClassDecl,
    Expr,
    FieldAccess,
    If,
    LocalDecl,
    New,
    Position,
    SourceFile,
    Stmt,
    TypeRef,
    VarRef,
    While,
    stable_hash,
)
from pdflow.frontend.parser import parse
from pdflow.rules import AnalysisResult, Diagnostic, analyze_parts, merge_diagnostics
from pdflow.sema import ClassInfo, FieldSig, MethodSig, ORIGIN_SUMMARY

SUMMARY_FORMAT_VERSION = 1


def _type_to_dict(t: TypeRef) -> dict:
    return {"name": t.name,
            "args": [_type_to_dict(a) for a in t.type_args],
            "dims": t.array_dims}


def _type_from_dict(data: dict, pos: Position) -> TypeRef:
    return TypeRef(pos, data["name"],
                   [_type_from_dict(a, pos) for a in data["args"]],
                   data["dims"])


@dataclass
class ClassSummary:
    name: str
    annotations: list[str]
    super_type: dict | None        # serialized TypeRef
    type_params: list[str]
    fields: list[tuple[str, dict]]
    methods: list[dict]            # name, arity, params, returnType, annotations
    line: int
    column: int


@dataclass
class FileSummary:
    path: str
    content_hash: str
    module: str | None
    classes: list[ClassSummary]
    format_version: int = SUMMARY_FORMAT_VERSION

    def to_dict(self) -> dict:
        return {
            "formatVersion": self.format_version,
            "path": self.path,
            "contentHash": self.content_hash,
            "module": self.module,
            "classes": [{
                "name": c.name,
                "annotations": c.annotations,
                "super": c.super_type,
                "typeParams": c.type_params,
                "fields": [{"name": n, "type": t} for n, t in c.fields],
                "methods": c.methods,
                "line": c.line,
                "column": c.column,
            } for c in self.classes],
        }

    @classmethod
    def from_dict(cls, data: dict) -> FileSummary:
        classes = [ClassSummary(
            name=c["name"],
            annotations=list(c["annotations"]),
            super_type=c["super"],
            type_params=list(c["typeParams"]),
            fields=[(f["name"], f["type"]) for f in c["fields"]],
            methods=list(c["methods"]),
            line=c["line"],
            column=c["column"],
        ) for c in data["classes"]]
        return cls(path=data["path"], content_hash=data["contentHash"],
                   module=data["module"], classes=classes,
                   format_version=data["formatVersion"])

    def digest(self) -> str:
        return stable_hash(json.dumps(self.to_dict(), sort_keys=True))

    def class_names(self) -> set[str]:
        return {c.name for c in self.classes}

    def class_infos(self, config: AnalyzerConfig) -> list[ClassInfo]:
        """Materialize table entries from the summary alone."""
        infos = []
        for c in self.classes:
            pos = Position(self.path, c.line, c.column)
            super_ref = (_type_from_dict(c.super_type, pos)
                         if c.super_type is not None else None)
            methods = [MethodSig(
                name=m["name"],
                params=[(p["name"], _type_from_dict(p["type"], pos))
                        for p in m["params"]],
                return_type=(_type_from_dict(m["returnType"], pos)
                             if m["returnType"] is not None else None),
                annotations=list(m["annotations"]),
                kinds=config.kinds_of(m["annotations"]),
                position=pos,
            ) for m in c.methods]
            info = ClassInfo(
                name=c.name,
                annotations=list(c.annotations),
                effective=config.kinds_of(c.annotations),
                type_params=tuple(c.type_params),
                super_ref=super_ref,
                fields=[FieldSig(n, _type_from_dict(t, pos), pos)
                        for n, t in c.fields],
                methods=methods,
                module=self.module,
                origin=ORIGIN_SUMMARY,
                position=pos,
            )
            info.finish()
            infos.append(info)
        return infos


def summarize(unit: AstUnit) -> FileSummary:
    """Declaration digest of a parsed file; method bodies never contribute."""
    classes = []
    for decl in unit.classes:
        classes.append(ClassSummary(
            name=decl.name,
            annotations=[a.name for a in decl.annotations],
            super_type=(_type_to_dict(decl.superclass)
                        if decl.superclass is not None else None),
            type_params=list(decl.type_params),
            fields=[(f.name, _type_to_dict(f.type)) for f in decl.fields],
            methods=[{
                "name": m.name,
                "arity": len(m.params),
                "params": [{"name": p.name, "type": _type_to_dict(p.type)}
                           for p in m.params],
                "returnType": (_type_to_dict(m.return_type)
                               if m.return_type is not None else None),
                "annotations": [a.name for a in m.annotations],
            } for m in decl.methods],
            line=decl.position.line,
            column=decl.position.column,
        ))
    return FileSummary(path=unit.path, content_hash=unit.content_hash,
                       module=unit.module, classes=classes)


def referenced_names(unit: AstUnit) -> set[str]:
    """Class names this unit could observe: every type reference plus every
    bare variable reference (which may resolve to a class). Used for
    conservative cache invalidation."""
    names: set[str] = set()

    def add_type(t: TypeRef) -> None:
        names.add(t.name)
        for a in t.type_args:
            add_type(a)

    def add_expr(e: Expr) -> None:
        if isinstance(e, VarRef):
            names.add(e.name)
        elif isinstance(e, FieldAccess):
            add_expr(e.receiver)
        elif isinstance(e, Call):
            if e.receiver is not None:
                add_expr(e.receiver)
            for a in e.args:
                add_expr(a)
        elif isinstance(e, New):
            add_type(e.type)
            for a in e.args:
                add_expr(a)
        elif isinstance(e, Cast):
            add_type(e.type)
            add_expr(e.expr)
        elif hasattr(e, "lhs"):
            add_expr(e.lhs)
            add_expr(e.rhs)

    def add_stmt(s: Stmt) -> None:
        if isinstance(s, LocalDecl):
            add_type(s.type)
            if s.init is not None:
                add_expr(s.init)
        elif isinstance(s, Block):
            for inner in s.statements:
                add_stmt(inner)
        elif isinstance(s, If):
            add_expr(s.cond)
            add_stmt(s.then_block)
            if s.else_block is not None:
                add_stmt(s.else_block)
        elif isinstance(s, While):
            add_expr(s.cond)
            add_stmt(s.body)
        else:
            for attr in ("target", "value", "expr"):
                child = getattr(s, attr, None)
                if child is not None:
                    add_expr(child)

    for decl in unit.classes:
        if decl.superclass is not None:
            add_type(decl.superclass)
        for f in decl.fields:
            add_type(f.type)
        for m in decl.methods:
            for p in m.params:
                add_type(p.type)
            if m.return_type is not None:
                add_type(m.return_type)
            for stmt in m.body or []:
                add_stmt(stmt)
    return names


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(path)
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


class SummaryCache:
    """Directory-backed map from content hash to serialized FileSummary,
    plus the index of the previous run used by incremental analysis.

    Layout: <dir>/<first two hex digits>/<hash>.json, written to a temp file
    and renamed so readers never observe partial entries. Corrupt or
    version-mismatched entries read as misses.
    """

    def __init__(self, directory: str):
        self.directory = directory

    def _entry_path(self, content_hash: str) -> str:
        return os.path.join(self.directory, content_hash[:2],
                            f"{content_hash}.json")

    def get(self, content_hash: str) -> FileSummary | None:
        try:
            with open(self._entry_path(content_hash), encoding="utf-8") as fh:
                data = json.load(fh)
            if data.get("formatVersion") != SUMMARY_FORMAT_VERSION:
                return None
            return FileSummary.from_dict(data)
        except (OSError, ValueError, KeyError, TypeError):
            return None

    def put(self, summary: FileSummary) -> None:
        _atomic_write(self._entry_path(summary.content_hash),
                      json.dumps(summary.to_dict(), sort_keys=True))

    # previous-run index

    def _index_path(self) -> str:
        return os.path.join(self.directory, "index.json")

    def load_index(self) -> dict:
        try:
            with open(self._index_path(), encoding="utf-8") as fh:
                data = json.load(fh)
            if data.get("formatVersion") != SUMMARY_FORMAT_VERSION:
                return {}
            files = data.get("files", {})
            return files if isinstance(files, dict) else {}
        except (OSError, ValueError):
            return {}

    def save_index(self, files: dict) -> None:
        _atomic_write(self._index_path(), json.dumps(
            {"formatVersion": SUMMARY_FORMAT_VERSION, "files": files},
            sort_keys=True))


@dataclass
class IncrementalStats:
    parsed: set[str] = field(default_factory=set)
    rechecked: set[str] = field(default_factory=set)


def analyze_incremental(changed, all_paths, cache: SummaryCache,
                        config: AnalyzerConfig,
                        stats: IncrementalStats | None = None) -> AnalysisResult:
    """Incrementally re-analyze a file set, reusing cached summaries and
    per-file diagnostics where sound. Output equals a cold full analysis."""
    sources = {p: SourceFile.load(p) for p in all_paths}
    return analyze_incremental_sources(sources, cache, config,
                                       changed=changed, stats=stats)


def analyze_incremental_sources(sources: dict[str, SourceFile],
                                cache: SummaryCache, config: AnalyzerConfig,
                                changed=None,
                                stats: IncrementalStats | None = None
                                ) -> AnalysisResult:
    if stats is None:
        stats = IncrementalStats()
    index = cache.load_index()
    all_paths = sorted(sources)

    changed_set = set(changed or ())
    for path in all_paths:
        entry = index.get(path)
        if entry is None or entry.get("contentHash") != sources[path].content_hash:
            changed_set.add(path)
    changed_set &= set(sources)

    units: dict[str, AstUnit] = {}

    def ensure_unit(path: str) -> AstUnit:
        unit = units.get(path)
        if unit is None:
            unit = parse(sources[path])
            units[path] = unit
            stats.parsed.add(path)
        return unit

    # fresh summaries: parse changed files, reuse cache entries elsewhere
    new_summaries: dict[str, FileSummary | None] = {}
    for path in all_paths:
        if path in changed_set:
            unit = ensure_unit(path)
            new_summaries[path] = summarize(unit) if not unit.errors else None
        else:
            entry = index.get(path, {})
            if entry.get("parseErrors"):
                new_summaries[path] = None
                continue
            summary = cache.get(sources[path].content_hash)
            if summary is None or summary.path != path:
                unit = ensure_unit(path)
                summary = summarize(unit) if not unit.errors else None
            new_summaries[path] = summary

    # classes whose observable shape may have changed
    dirty: set[str] = set()
    for path in all_paths:
        old = index.get(path)
        summary = new_summaries[path]
        new_digest = summary.digest() if summary is not None else None
        old_digest = old.get("summaryDigest") if old else None
        if old is None or new_digest is None or new_digest != old_digest:
            dirty.update(old.get("classes", ()) if old else ())
            if path in changed_set or summary is None:
                unit = ensure_unit(path)
                dirty.update(c.name for c in unit.classes)
            elif summary is not None:
                dirty.update(summary.class_names())
    for path, entry in index.items():
        if path not in sources:
            dirty.update(entry.get("classes", ()))

    # close over subclassing: personal-data status flows down the hierarchy
    super_edges: set[tuple[str, str]] = set()
    for path in all_paths:
        summary = new_summaries[path]
        if summary is None:
            for decl in ensure_unit(path).classes:
                if decl.superclass is not None:
                    super_edges.add((decl.name, decl.superclass.name))
        else:
            for c in summary.classes:
                if c.super_type is not None:
                    super_edges.add((c.name, c.super_type["name"]))
    grew = True
    while grew:
        grew = False
        for cls, parent in super_edges:
            if parent in dirty and cls not in dirty:
                dirty.add(cls)
                grew = True

    # which files must be re-checked
    recheck: set[str] = set()
    for path in all_paths:
        entry = index.get(path)
        if (path in changed_set or new_summaries[path] is None
                or entry is None or "diagnostics" not in entry):
            recheck.add(path)
            continue
        refs = set(entry.get("references", ()))
        if refs & dirty or set(entry.get("classes", ())) & dirty:
            recheck.add(path)
    stats.rechecked = set(recheck)

    recheck_units = [ensure_unit(p) for p in sorted(recheck)]
    reused_summaries = [new_summaries[p] for p in all_paths
                        if p not in recheck and new_summaries[p] is not None]
    table, table_diags, fresh_per_file = analyze_parts(
        recheck_units, reused_summaries, config)

    per_file: dict[str, list[Diagnostic]] = {}
    new_index: dict[str, dict] = {}
    for path in all_paths:
        summary = new_summaries[path]
        if path in recheck:
            diags = fresh_per_file[path]
            refs = sorted(referenced_names(units[path]))
            class_names = sorted(c.name for c in units[path].classes)
            parse_errors = bool(units[path].errors)
        else:
            entry = index[path]
            diags = [Diagnostic.from_dict(d) for d in entry["diagnostics"]]
            refs = entry.get("references", [])
            class_names = entry.get("classes", [])
            parse_errors = False
        per_file[path] = diags
        if summary is not None:
            cache.put(summary)
        new_index[path] = {
            "contentHash": sources[path].content_hash,
            "summaryDigest": summary.digest() if summary is not None else None,
            "references": list(refs),
            "classes": list(class_names),
            "diagnostics": [d.to_dict() for d in diags],
            "parseErrors": parse_errors,
        }
    cache.save_index(new_index)

    diagnostics = merge_diagnostics([table_diags, *per_file.values()])
    declared = sum(1 for c in table.classes.values() if c.origin != "external")
    return AnalysisResult(diagnostics=diagnostics,
                          files_analyzed=len(all_paths),
                          classes_seen=declared)
