"""Static call graph and privacy-policy template extraction.

Entry-point methods that are also handler contexts become policy purposes;
the personal entity classes reachable from each purpose through the call
graph become its data elements. Calls resolve by static receiver type with
no dispatch expansion, so the graph understates dynamic behavior; unresolved
calls are counted per purpose to keep that gap visible.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from pdflow.config import AnalyzerConfig, AnnotationKind
from pdflow.frontend.ast import (
    Binary,
    Block,
    Call,
    Cast,
    Expr,
    FieldAccess,
    If,
    LocalDecl,
    New,
    Stmt,
    TypeRef,
    While,
)
from pdflow.rules import _checked_members
from pdflow.sema import (
    BodyTyper,
    ClassInfo,
    MethodSig,
    ORIGIN_EXTERNAL,
    SymbolTable,
    effective_context,
    walk_body,
)

POLICY_SCHEMA_VERSION = 1

Node = tuple[str, str, int]  # class, method, arity


@dataclass
class CallGraph:
    nodes: set[Node] = field(default_factory=set)
    edges: dict[Node, list[Node]] = field(default_factory=dict)
    unresolved: dict[Node, list[str]] = field(default_factory=dict)

    def successors(self, node: Node) -> list[Node]:
        return self.edges.get(node, [])


def build_call_graph(table: SymbolTable, units) -> CallGraph:
    """One node per declared method, one edge per call site resolved through
    the receiver's static type; all branches contribute."""
    graph = CallGraph()
    for info in table.classes.values():
        if info.origin == ORIGIN_EXTERNAL:
            continue
        for sig in info.methods:
            graph.nodes.add((info.name, sig.name, sig.arity))

    edges: dict[Node, set[Node]] = {}
    unresolved: dict[Node, list[str]] = {}
    for unit in sorted(units, key=lambda u: u.path):
        for decl, info in _checked_members(unit, table):
            for sig in info.methods:
                if sig.decl is None or sig.decl.body is None:
                    continue
                caller: Node = (info.name, sig.name, sig.arity)
                typer = BodyTyper(table, info, sig)

                def on_expr(expr, t, caller=caller, typer=typer):
                    if not isinstance(expr, Call):
                        return
                    resolved = typer.resolve_call(expr)
                    if resolved is None:
                        unresolved.setdefault(caller, []).append(
                            f"{expr.method}/{len(expr.args)}")
                    else:
                        target_info, target_sig = resolved
                        edges.setdefault(caller, set()).add(
                            (target_info.name, target_sig.name,
                             target_sig.arity))

                walk_body(typer, sig.decl.body, on_expr)
    graph.edges = {caller: sorted(targets) for caller, targets in edges.items()}
    graph.unresolved = {caller: sorted(labels)
                        for caller, labels in unresolved.items()}
    return graph


@dataclass
class DataElement:
    class_name: str
    fields: list[tuple[str, str]]  # field name, rendered type

    def to_dict(self) -> dict:
        return {"class": self.class_name,
                "fields": [{"name": n, "type": t} for n, t in self.fields]}


@dataclass
class Purpose:
    name: str
    entry: Node
    data: list[DataElement]
    unresolved_calls: int

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "entry": {"class": self.entry[0], "method": self.entry[1]},
            "data": [d.to_dict() for d in self.data],
            "unresolvedCalls": self.unresolved_calls,
        }


@dataclass
class PolicyDocument:
    purposes: list[Purpose]
    warnings: list[str]
    generated_from: str
    schema_version: int = POLICY_SCHEMA_VERSION

    def to_dict(self) -> dict:
        return {
            "version": self.schema_version,
            "generatedFrom": self.generated_from,
            "purposes": [p.to_dict() for p in self.purposes],
            "warnings": list(self.warnings),
        }


def _type_names(t: TypeRef, out: set[str]) -> None:
    out.add(t.name)
    for a in t.type_args:
        _type_names(a, out)


def _body_type_names(stmts: list[Stmt], out: set[str]) -> None:
    """Names from local declarations and constructions, nested blocks and
    argument expressions included."""
    def visit_expr(e: Expr) -> None:
        if isinstance(e, New):
            _type_names(e.type, out)
            for a in e.args:
                visit_expr(a)
        elif isinstance(e, Call):
            if e.receiver is not None:
                visit_expr(e.receiver)
            for a in e.args:
                visit_expr(a)
        elif isinstance(e, FieldAccess):
            visit_expr(e.receiver)
        elif isinstance(e, Cast):
            visit_expr(e.expr)
        elif isinstance(e, Binary):
            visit_expr(e.lhs)
            visit_expr(e.rhs)

    for stmt in stmts:
        if isinstance(stmt, LocalDecl):
            _type_names(stmt.type, out)
            if stmt.init is not None:
                visit_expr(stmt.init)
        elif isinstance(stmt, Block):
            _body_type_names(stmt.statements, out)
        elif isinstance(stmt, If):
            visit_expr(stmt.cond)
            _body_type_names(stmt.then_block.statements, out)
            if stmt.else_block is not None:
                _body_type_names(stmt.else_block.statements, out)
        elif isinstance(stmt, While):
            visit_expr(stmt.cond)
            _body_type_names(stmt.body.statements, out)
        else:
            for attr in ("target", "value", "expr"):
                child = getattr(stmt, attr, None)
                if child is not None:
                    visit_expr(child)


def _node_touched_names(table: SymbolTable, node: Node) -> set[str]:
    """Class names a method touches through parameters, its return type,
    local declarations, or constructions."""
    names: set[str] = set()
    info = table.lookup(node[0])
    if info is None:
        return names
    sig = info.methods_by_key.get((node[1], node[2]))
    if sig is None:
        return names
    for _, p_type in sig.params:
        _type_names(p_type, names)
    if sig.return_type is not None:
        _type_names(sig.return_type, names)
    if sig.decl is not None and sig.decl.body is not None:
        _body_type_names(sig.decl.body, names)
    return names


def fingerprint(units) -> str:
    from pdflow.frontend.ast import stable_hash
    lines = sorted(f"{u.path}:{u.content_hash}" for u in units)
    return stable_hash("\n".join(lines))


def extract_policy(graph: CallGraph, table: SymbolTable,
                   config: AnalyzerConfig, generated_from: str = "") -> PolicyDocument:
    """One purpose per entry-point method that is also a handler context.

    Entry points carrying no handler annotation are skipped with a warning;
    a data element is any class that is both a persistence entity and
    personal (directly or by inheritance) touched by a reachable method.
    """
    warnings: list[str] = []
    entries: list[tuple[Node, ClassInfo, MethodSig]] = []
    for name in sorted(table.classes):
        info = table.classes[name]
        if info.origin == ORIGIN_EXTERNAL:
            continue
        for sig in sorted(info.methods, key=lambda m: (m.name, m.arity)):
            if AnnotationKind.ENTRY_POINT not in sig.kinds:
                continue
            ctx = effective_context(info, sig)
            if not ctx.has_handler:
                warnings.append(
                    f"entry point '{info.name}.{sig.name}' lacks a handler "
                    "annotation and was not treated as a purpose")
                continue
            entries.append(((info.name, sig.name, sig.arity), info, sig))

    purposes: list[Purpose] = []
    for entry, info, sig in entries:
        reachable: set[Node] = set()
        stack = [entry]
        while stack:
            node = stack.pop()
            if node in reachable:
                continue
            reachable.add(node)
            stack.extend(graph.successors(node))
        unresolved = sum(len(graph.unresolved.get(n, ())) for n in reachable)
        touched: set[str] = set()
        for node in sorted(reachable):
            touched |= _node_touched_names(table, node)
        data = []
        for name in sorted(touched):
            target = table.lookup(name)
            if (target is not None
                    and AnnotationKind.ENTITY in target.effective
                    and table.class_is_personal(name)):
                data.append(DataElement(
                    class_name=name,
                    fields=[(f.name, f.type.render()) for f in target.fields]))
        purposes.append(Purpose(
            name=f"{entry[0]}.{entry[1]}",
            entry=entry,
            data=data,
            unresolved_calls=unresolved,
        ))
    purposes.sort(key=lambda p: (p.name, p.entry[2]))
    return PolicyDocument(purposes=purposes, warnings=warnings,
                          generated_from=generated_from)
