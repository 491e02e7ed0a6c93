"""Lexer, parser, and AST for AL source files."""
from pdflow.frontend.ast import (
    AnnotationUse,
    Assign,
    AstUnit,
    Binary,
    Block,
    Call,
    Cast,
    ClassDecl,
    Expr,
    ExprStmt,
    FieldAccess,
    FieldDecl,
    If,
    Literal,
    LocalDecl,
    MethodDecl,
    New,
    Param,
    ParseError,
    Position,
    Return,
    SourceFile,
    Stmt,
    TypeRef,
    VarRef,
    While,
    stable_hash,
)
from pdflow.frontend.lexer import LexError, Token, TokenKind, tokenize
from pdflow.frontend.parser import parse

__all__ = [
    "AnnotationUse",
    "Assign",
    "AstUnit",
    "Binary",
    "Block",
    "Call",
    "Cast",
    "ClassDecl",
    "Expr",
    "ExprStmt",
    "FieldAccess",
    "FieldDecl",
    "If",
    "LexError",
    "Literal",
    "LocalDecl",
    "MethodDecl",
    "New",
    "Param",
    "ParseError",
    "Position",
    "Return",
    "SourceFile",
    "Stmt",
    "Token",
    "TokenKind",
    "TypeRef",
    "VarRef",
    "While",
    "parse",
    "stable_hash",
    "tokenize",
]
