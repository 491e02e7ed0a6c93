"""AST node definitions for AL, the analyzed language.

Every node carries the position of its first token so diagnostics can point
back into the source text.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field


def stable_hash(text: str) -> str:
    """64-bit content hash, stable across processes and platforms."""
    return hashlib.blake2b(text.encode("utf-8"), digest_size=8).hexdigest()


@dataclass(frozen=True)
class SourceFile:
    path: str
    text: str
    content_hash: str

    @classmethod
    def from_text(cls, path: str, text: str) -> SourceFile:
        return cls(path=path, text=text, content_hash=stable_hash(text))

    @classmethod
    def load(cls, path: str) -> SourceFile:
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(path, fh.read())


@dataclass(frozen=True)
class Position:
    file: str
    line: int    # 1-based
    column: int  # 1-based

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


@dataclass
class AnnotationUse:
    position: Position
    name: str
    raw_args: str = ""  # verbatim text between parentheses, "" when absent


@dataclass
class TypeRef:
    position: Position
    name: str
    type_args: list[TypeRef] = field(default_factory=list)
    array_dims: int = 0

    def render(self) -> str:
        out = self.name
        if self.type_args:
            out += "<" + ",".join(a.render() for a in self.type_args) + ">"
        return out + "[]" * self.array_dims


class Expr:
    pass


class Stmt:
    pass


@dataclass
class Literal(Expr):
    position: Position
    kind: str  # int | string | boolean | null
    value: object


@dataclass
class VarRef(Expr):
    position: Position
    name: str


@dataclass
class FieldAccess(Expr):
    position: Position       # first token of the receiver
    receiver: Expr
    field: str
    name_position: Position  # the accessed field identifier


@dataclass
class Call(Expr):
    position: Position
    receiver: Expr | None    # None for calls on the enclosing class
    method: str
    args: list[Expr]
    name_position: Position


@dataclass
class New(Expr):
    position: Position
    type: TypeRef
    args: list[Expr]


@dataclass
class Cast(Expr):
    position: Position
    type: TypeRef
    expr: Expr


@dataclass
class Binary(Expr):
    position: Position
    op: str
    lhs: Expr
    rhs: Expr


@dataclass
class LocalDecl(Stmt):
    position: Position
    name: str
    type: TypeRef
    init: Expr | None


@dataclass
class Assign(Stmt):
    position: Position
    target: Expr
    value: Expr


@dataclass
class ExprStmt(Stmt):
    position: Position
    expr: Expr


@dataclass
class Return(Stmt):
    position: Position
    value: Expr | None


@dataclass
class Block(Stmt):
    position: Position
    statements: list[Stmt]


@dataclass
class If(Stmt):
    position: Position
    cond: Expr
    then_block: Block
    else_block: Block | None


@dataclass
class While(Stmt):
    position: Position
    cond: Expr
    body: Block


@dataclass
class Param:
    position: Position
    name: str
    type: TypeRef


@dataclass
class MethodDecl:
    position: Position
    name: str
    annotations: list[AnnotationUse]
    params: list[Param]
    return_type: TypeRef | None  # None means void
    body: list[Stmt] | None      # None when declared with ';' instead of a block


@dataclass
class FieldDecl:
    position: Position
    name: str
    type: TypeRef
    annotations: list[AnnotationUse]


@dataclass
class ClassDecl:
    position: Position
    name: str
    annotations: list[AnnotationUse]
    type_params: list[str]
    superclass: TypeRef | None
    fields: list[FieldDecl]
    methods: list[MethodDecl]


@dataclass
class ParseError:
    position: Position
    message: str


@dataclass
class AstUnit:
    path: str
    content_hash: str
    module: str | None
    classes: list[ClassDecl]
    errors: list[ParseError] = field(default_factory=list)
