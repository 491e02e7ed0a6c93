"""Symbol table construction, type resolution, and personal-data classification.

The table is the sole authority for class and annotation lookups. It is built
once from parsed units, file summaries, and configured external types, then
shared immutably by the rule checks.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from pdflow.config import AnalyzerConfig, AnnotationKind
from pdflow.frontend.ast import (
    Assign,
    Binary,
    Block,
    Call,
    Cast,
    ClassDecl,
    Expr,
    ExprStmt,
    FieldAccess,
    If,
    Literal,
    LocalDecl,
    MethodDecl,
    New,
    Position,
    Return,
    Stmt,
    TypeRef,
    VarRef,
    While,
)

UNKNOWN = "?"
PRIMITIVE_TYPES = frozenset({"int", "boolean", "String", "null", "void"})

ORIGIN_PARSED = "parsed"
ORIGIN_SUMMARY = "summary"
ORIGIN_EXTERNAL = "external"


@dataclass(frozen=True)
class ResolvedType:
    base: str
    type_args: tuple[ResolvedType, ...] = ()
    array_dims: int = 0

    def render(self) -> str:
        out = self.base
        if self.type_args:
            out += "<" + ",".join(a.render() for a in self.type_args) + ">"
        return out + "[]" * self.array_dims


INT = ResolvedType("int")
BOOLEAN = ResolvedType("boolean")
STRING = ResolvedType("String")
NULL = ResolvedType("null")
UNKNOWN_TYPE = ResolvedType(UNKNOWN)


@dataclass
class SemaError:
    position: Position
    message: str
    subject: str = ""
    owner: tuple[str, str | None] = ("", None)


@dataclass
class MethodSig:
    name: str
    params: list[tuple[str, TypeRef]]
    return_type: TypeRef | None
    annotations: list[str]
    kinds: frozenset[AnnotationKind]
    position: Position
    decl: MethodDecl | None = None  # None for summary or external origin

    @property
    def arity(self) -> int:
        return len(self.params)


@dataclass
class FieldSig:
    name: str
    type: TypeRef
    position: Position


@dataclass
class ClassInfo:
    name: str
    annotations: list[str]
    effective: frozenset[AnnotationKind]
    type_params: tuple[str, ...]
    super_ref: TypeRef | None
    fields: list[FieldSig]
    methods: list[MethodSig]
    module: str | None
    origin: str
    position: Position | None
    decl: ClassDecl | None = None
    resolved_super: ClassInfo | None = None
    fields_by_name: dict[str, FieldSig] = field(default_factory=dict)
    methods_by_key: dict[tuple[str, int], MethodSig] = field(default_factory=dict)

    def finish(self) -> None:
        self.fields_by_name = {f.name: f for f in self.fields}
        self.methods_by_key = {(m.name, m.arity): m for m in self.methods}


@dataclass(frozen=True)
class EffectiveContext:
    owner: tuple[str, str | None]
    has_handler: bool
    has_endpoint: bool


def effective_context(info: ClassInfo, method: MethodSig | None) -> EffectiveContext:
    """Lift class-level handler/endpoint markers onto a member (OR semantics)."""
    handler = AnnotationKind.HANDLER in info.effective
    endpoint = AnnotationKind.DATA_ENDPOINT in info.effective
    if method is not None:
        handler = handler or AnnotationKind.HANDLER in method.kinds
        endpoint = endpoint or AnnotationKind.DATA_ENDPOINT in method.kinds
    return EffectiveContext(owner=(info.name, method.name if method else None),
                            has_handler=handler, has_endpoint=endpoint)


class SymbolTable:
    def __init__(self, config: AnalyzerConfig):
        self.config = config
        self.classes: dict[str, ClassInfo] = {}
        self.errors: list[SemaError] = []
        self._personal_memo: dict[str, bool] = {}

    def lookup(self, name: str) -> ClassInfo | None:
        return self.classes.get(name)

    def ancestry(self, name: str) -> list[ClassInfo]:
        """The class plus its resolved superclasses, root last."""
        chain: list[ClassInfo] = []
        info = self.classes.get(name)
        while info is not None:
            chain.append(info)
            info = info.resolved_super
        return chain

    def class_is_personal(self, name: str) -> bool:
        """True when the class itself, or any ancestor, is A1-annotated."""
        memo = self._personal_memo
        if name in memo:
            return memo[name]
        result = any(AnnotationKind.PERSONAL in c.effective
                     for c in self.ancestry(name))
        memo[name] = result
        return result

    def is_personal(self, t: ResolvedType | None) -> bool:
        """Personal-data classification of a resolved type.

        A type is personal when its base class is personal, when any type
        argument is personal, or when it is an array of a personal element
        type. Unknown bases without personal arguments classify as clean.
        """
        if t is None:
            return False
        if self.class_is_personal(t.base):
            return True
        return any(self.is_personal(a) for a in t.type_args)

    def personal_witness(self, t: ResolvedType | None) -> str | None:
        """Name of the class that makes the type personal (pre-order pick)."""
        if t is None:
            return None
        if self.class_is_personal(t.base):
            return t.base
        for arg in t.type_args:
            w = self.personal_witness(arg)
            if w is not None:
                return w
        return None

    def resolve_type(self, ref: TypeRef, owner: ClassInfo | None) -> ResolvedType:
        """Resolve a syntactic type reference in the owning class's scope.

        Type parameters of the owning class resolve to the unknown type:
        personal-data status is judged at instantiation sites, not inside
        generic declarations.
        """
        if owner is not None and ref.name in owner.type_params:
            return ResolvedType(UNKNOWN, (), ref.array_dims)
        args = tuple(self.resolve_type(a, owner) for a in ref.type_args)
        if ref.name in PRIMITIVE_TYPES:
            return ResolvedType(ref.name, (), ref.array_dims)
        return ResolvedType(ref.name, args, ref.array_dims)

    def find_field(self, class_name: str,
                   field_name: str) -> tuple[ClassInfo, FieldSig] | None:
        for info in self.ancestry(class_name):
            sig = info.fields_by_name.get(field_name)
            if sig is not None:
                return info, sig
        return None

    def find_method(self, class_name: str, method: str,
                    arity: int) -> tuple[ClassInfo, MethodSig] | None:
        for info in self.ancestry(class_name):
            sig = info.methods_by_key.get((method, arity))
            if sig is not None:
                return info, sig
        return None


def _class_info_from_decl(decl: ClassDecl, module: str | None,
                          config: AnalyzerConfig) -> ClassInfo:
    names = [a.name for a in decl.annotations]
    methods = []
    for m in decl.methods:
        m_names = [a.name for a in m.annotations]
        methods.append(MethodSig(
            name=m.name,
            params=[(p.name, p.type) for p in m.params],
            return_type=m.return_type,
            annotations=m_names,
            kinds=config.kinds_of(m_names),
            position=m.position,
            decl=m,
        ))
    info = ClassInfo(
        name=decl.name,
        annotations=names,
        effective=config.kinds_of(names),
        type_params=tuple(decl.type_params),
        super_ref=decl.superclass,
        fields=[FieldSig(f.name, f.type, f.position) for f in decl.fields],
        methods=methods,
        module=module,
        origin=ORIGIN_PARSED,
        position=decl.position,
        decl=decl,
    )
    info.finish()
    return info


def build_symbol_table(units, summaries, config: AnalyzerConfig) -> SymbolTable:
    """Merge units, summaries, and configured externals into one table.

    Duplicate class names keep the first declaration (path order, then line)
    and report the rest; inheritance cycles are reported and severed so every
    later walk terminates.
    """
    table = SymbolTable(config)
    candidates: list[ClassInfo] = []
    for unit in sorted(units, key=lambda u: u.path):
        for decl in unit.classes:
            candidates.append(_class_info_from_decl(decl, unit.module, config))
    for summary in sorted(summaries, key=lambda s: s.path):
        candidates.extend(summary.class_infos(config))

    def decl_key(info: ClassInfo):
        pos = info.position
        return (pos.file, pos.line, pos.column)

    for info in sorted(candidates, key=decl_key):
        first = table.classes.get(info.name)
        if first is None:
            table.classes[info.name] = info
        else:
            table.errors.append(SemaError(
                position=info.position,
                message=f"duplicate class '{info.name}' "
                        f"(declaration at {first.position.file}:"
                        f"{first.position.line} wins)",
                subject=info.name,
                owner=(info.name, None)))

    for name in config.external_personal_types:
        if name not in table.classes:
            info = ClassInfo(
                name=name, annotations=[],
                effective=frozenset({AnnotationKind.PERSONAL}),
                type_params=(), super_ref=None, fields=[], methods=[],
                module=None, origin=ORIGIN_EXTERNAL, position=None)
            info.finish()
            table.classes[name] = info

    # direct superclass links; unknown superclasses are reported and dropped
    for name in sorted(table.classes):
        info = table.classes[name]
        if info.super_ref is None:
            continue
        super_name = info.super_ref.name
        target = table.classes.get(super_name)
        if target is None or super_name in PRIMITIVE_TYPES:
            table.errors.append(SemaError(
                position=info.position,
                message=f"unknown superclass '{super_name}' of '{name}'",
                subject=super_name,
                owner=(name, None)))
            info.resolved_super = None
        else:
            info.resolved_super = target

    _sever_cycles(table)
    return table


def _sever_cycles(table: SymbolTable) -> None:
    # DFS over sorted names; a back edge is reported once and cut at its tail
    color: dict[str, int] = {}  # 1 on stack, 2 done
    for root in sorted(table.classes):
        if color.get(root):
            continue
        stack = [table.classes[root]]
        while stack:
            info = stack[-1]
            if color.get(info.name) == 1:
                color[info.name] = 2
                stack.pop()
                continue
            color[info.name] = 1
            parent = info.resolved_super
            if parent is None:
                continue
            state = color.get(parent.name)
            if state == 1:
                table.errors.append(SemaError(
                    position=info.position,
                    message=f"inheritance cycle at class '{info.name}'",
                    subject=info.name,
                    owner=(info.name, None)))
                info.resolved_super = None
            elif state is None:
                stack.append(parent)


class BodyTyper:
    """Flow-sensitive static typing over one method body.

    Locals enter scope only after their declaration statement, so a use
    before declaration resolves to the unknown type and is reported. Each
    expression node is typed exactly once per walk.
    """

    def __init__(self, table: SymbolTable, owner: ClassInfo, method: MethodSig):
        self.table = table
        self.owner = owner
        self.method = method
        self.scopes: list[dict[str, ResolvedType]] = [{}]
        for p_name, p_type in method.params:
            self.scopes[0][p_name] = table.resolve_type(p_type, owner)
        self.errors: list[SemaError] = []
        self.types: dict[int, ResolvedType] = {}
        self._local_names = _collect_local_names(method.decl.body or []) \
            if method.decl is not None else set()

    def push_scope(self) -> None:
        self.scopes.append({})

    def pop_scope(self) -> None:
        self.scopes.pop()

    def declare(self, name: str, t: ResolvedType) -> None:
        self.scopes[-1][name] = t

    def _lookup_var(self, name: str) -> ResolvedType | None:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        return None

    def type_of(self, expr: Expr) -> ResolvedType:
        key = id(expr)
        cached = self.types.get(key)
        if cached is not None:
            return cached
        t = self._compute(expr)
        self.types[key] = t
        return t

    def _compute(self, expr: Expr) -> ResolvedType:
        table = self.table
        if isinstance(expr, Literal):
            return {"int": INT, "string": STRING,
                    "boolean": BOOLEAN, "null": NULL}[expr.kind]
        if isinstance(expr, VarRef):
            t = self._lookup_var(expr.name)
            if t is not None:
                return t
            field = table.find_field(self.owner.name, expr.name)
            if field is not None:
                declaring, sig = field
                return table.resolve_type(sig.type, declaring)
            if expr.name in table.classes:
                return ResolvedType(expr.name)
            if expr.name in self._local_names:
                message = f"'{expr.name}' used before declaration"
            else:
                message = f"unknown name '{expr.name}'"
            self.errors.append(SemaError(
                position=expr.position, message=message, subject=expr.name,
                owner=(self.owner.name, self.method.name)))
            return UNKNOWN_TYPE
        if isinstance(expr, FieldAccess):
            recv = self.type_of(expr.receiver)
            found = table.find_field(recv.base, expr.field)
            if found is None:
                return UNKNOWN_TYPE
            declaring, sig = found
            return table.resolve_type(sig.type, declaring)
        if isinstance(expr, Call):
            resolved = self.resolve_call(expr)
            if resolved is None:
                return UNKNOWN_TYPE
            declaring, sig = resolved
            if sig.return_type is None:
                return ResolvedType("void")
            return table.resolve_type(sig.return_type, declaring)
        if isinstance(expr, New):
            return table.resolve_type(expr.type, self.owner)
        if isinstance(expr, Cast):
            self.type_of(expr.expr)
            return table.resolve_type(expr.type, self.owner)
        if isinstance(expr, Binary):
            lhs = self.type_of(expr.lhs)
            rhs = self.type_of(expr.rhs)
            if expr.op in ("==", "!=", "<=", ">=", "<", ">", "&&", "||"):
                return BOOLEAN
            if expr.op == "+" and (lhs == STRING or rhs == STRING):
                return STRING
            if lhs == INT and rhs == INT:
                return INT
            return UNKNOWN_TYPE
        raise TypeError(f"unexpected expression node {type(expr).__name__}")

    def resolve_call(self, call: Call) -> tuple[ClassInfo, MethodSig] | None:
        if call.receiver is None:
            base = self.owner.name
        else:
            base = self.type_of(call.receiver).base
        if base == UNKNOWN or base in PRIMITIVE_TYPES:
            return None
        return self.table.find_method(base, call.method, len(call.args))


def _collect_local_names(stmts: list[Stmt]) -> set[str]:
    names: set[str] = set()
    work = list(stmts)
    while work:
        stmt = work.pop()
        if isinstance(stmt, LocalDecl):
            names.add(stmt.name)
        elif isinstance(stmt, Block):
            work.extend(stmt.statements)
        elif isinstance(stmt, If):
            work.append(stmt.then_block)
            if stmt.else_block is not None:
                work.append(stmt.else_block)
        elif isinstance(stmt, While):
            work.append(stmt.body)
    return names


def walk_body(typer: BodyTyper, stmts: list[Stmt], on_expr, on_local=None) -> None:
    """Walk statements in execution order, typing every expression.

    on_expr(node, resolved_type) fires once per expression node, children
    first; on_local(stmt, declared_type) fires per local declaration after
    its initializer was visited but before the name enters scope.
    """
    for stmt in stmts:
        if isinstance(stmt, LocalDecl):
            if stmt.init is not None:
                _visit_expr(typer, stmt.init, on_expr)
            declared = typer.table.resolve_type(stmt.type, typer.owner)
            if on_local is not None:
                on_local(stmt, declared)
            typer.declare(stmt.name, declared)
        elif isinstance(stmt, Assign):
            _visit_expr(typer, stmt.target, on_expr)
            _visit_expr(typer, stmt.value, on_expr)
        elif isinstance(stmt, ExprStmt):
            _visit_expr(typer, stmt.expr, on_expr)
        elif isinstance(stmt, Return):
            if stmt.value is not None:
                _visit_expr(typer, stmt.value, on_expr)
        elif isinstance(stmt, Block):
            typer.push_scope()
            walk_body(typer, stmt.statements, on_expr, on_local)
            typer.pop_scope()
        elif isinstance(stmt, If):
            _visit_expr(typer, stmt.cond, on_expr)
            typer.push_scope()
            walk_body(typer, stmt.then_block.statements, on_expr, on_local)
            typer.pop_scope()
            if stmt.else_block is not None:
                typer.push_scope()
                walk_body(typer, stmt.else_block.statements, on_expr, on_local)
                typer.pop_scope()
        elif isinstance(stmt, While):
            _visit_expr(typer, stmt.cond, on_expr)
            typer.push_scope()
            walk_body(typer, stmt.body.statements, on_expr, on_local)
            typer.pop_scope()
        else:
            raise TypeError(f"unexpected statement node {type(stmt).__name__}")


def _visit_expr(typer: BodyTyper, expr: Expr, on_expr) -> None:
    if isinstance(expr, FieldAccess):
        _visit_expr(typer, expr.receiver, on_expr)
    elif isinstance(expr, Call):
        if expr.receiver is not None:
            _visit_expr(typer, expr.receiver, on_expr)
        for arg in expr.args:
            _visit_expr(typer, arg, on_expr)
    elif isinstance(expr, New):
        for arg in expr.args:
            _visit_expr(typer, arg, on_expr)
    elif isinstance(expr, Cast):
        _visit_expr(typer, expr.expr, on_expr)
    elif isinstance(expr, Binary):
        _visit_expr(typer, expr.lhs, on_expr)
        _visit_expr(typer, expr.rhs, on_expr)
    on_expr(expr, typer.type_of(expr))
