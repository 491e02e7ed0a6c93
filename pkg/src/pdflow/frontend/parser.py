"""Recursive-descent parser for AL.

Parsing is deterministic and total: a syntax error inside a class drops that
class, records a ParseError, and resumes at the next top-level class keyword
(or annotation) so every file yields a result.
"""
from __future__ import annotations

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
)
from pdflow.frontend.lexer import LexError, Token, TokenKind, decode_string, tokenize

_COMPARE_OPS = {"==", "!=", "<=", ">=", "<", ">", "&&", "||"}
_ARITH_OPS = {"+", "-", "*", "/", "%"}
_EXPR_START_KEYWORDS = {"new", "true", "false", "null"}


class _Fail(Exception):
    """Internal signal carrying a ParseError up to a recovery point."""

    def __init__(self, error: ParseError):
        self.error = error


def parse(source: SourceFile) -> AstUnit:
    """Parse one source file into an AstUnit.

    Lex and parse errors are collected on the unit rather than raised; the
    classes list holds everything that survived recovery, in source order.
    """
    try:
        tokens = tokenize(source)
    except LexError as e:
        return AstUnit(path=source.path, content_hash=source.content_hash,
                       module=None, classes=[],
                       errors=[ParseError(e.position, e.message)])
    return _Parser(tokens, source).parse_unit()


class _Parser:
    def __init__(self, tokens: list[Token], source: SourceFile):
        self.tokens = tokens
        self.path = source.path
        self.source = source
        self.pos = 0
        self.depth = 0  # brace depth of consumed tokens, for recovery
        self.errors: list[ParseError] = []
        self._eof = Token(TokenKind.EOF, "",
                          *self._end_linecol(source.text))

    @staticmethod
    def _end_linecol(text: str) -> tuple[int, int]:
        line = text.count("\n") + 1
        last_nl = text.rfind("\n")
        return line, len(text) - last_nl

    # token plumbing

    @property
    def cur(self) -> Token:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else self._eof

    def peek(self, ahead: int = 1) -> Token:
        i = self.pos + ahead
        return self.tokens[i] if i < len(self.tokens) else self._eof

    def advance(self) -> Token:
        t = self.cur
        if t.kind == TokenKind.LBRACE:
            self.depth += 1
        elif t.kind == TokenKind.RBRACE:
            self.depth -= 1
        if self.pos < len(self.tokens):
            self.pos += 1
        return t

    def at(self, kind: TokenKind, text: str | None = None) -> bool:
        t = self.cur
        return t.kind == kind and (text is None or t.text == text)

    def at_keyword(self, word: str) -> bool:
        return self.at(TokenKind.KEYWORD, word)

    def position(self, token: Token | None = None) -> Position:
        return (token or self.cur).position(self.path)

    def fail(self, what: str, token: Token | None = None) -> _Fail:
        t = token or self.cur
        found = "end of file" if t.kind == TokenKind.EOF else repr(t.text)
        return _Fail(ParseError(self.position(t), f"expected {what}, found {found}"))

    def expect(self, kind: TokenKind, what: str) -> Token:
        if self.cur.kind != kind:
            raise self.fail(what)
        return self.advance()

    def expect_keyword(self, word: str) -> Token:
        if not self.at_keyword(word):
            raise self.fail(f"'{word}'")
        return self.advance()

    # unit level

    def parse_unit(self) -> AstUnit:
        module = self._parse_module_decl()
        classes: list[ClassDecl] = []
        while self.cur.kind != TokenKind.EOF:
            start = self.pos
            if self.at_keyword("class") or self.at(TokenKind.AT):
                try:
                    classes.append(self.parse_class())
                    continue
                except _Fail as f:
                    self.errors.append(f.error)
            else:
                self.errors.append(ParseError(self.position(),
                                              "expected class declaration"))
            if self.pos == start:
                self.advance()
            self._recover()
        return AstUnit(path=self.path, content_hash=self.source.content_hash,
                       module=module, classes=classes, errors=self.errors)

    def _parse_module_decl(self) -> str | None:
        if not self.at_keyword("module"):
            return None
        self.advance()
        try:
            parts = [self.expect(TokenKind.IDENT, "module name").text]
            while self.at(TokenKind.DOT):
                self.advance()
                parts.append(self.expect(TokenKind.IDENT, "module name").text)
            self.expect(TokenKind.SEMI, "';'")
        except _Fail as f:
            self.errors.append(f.error)
            self._recover()
            return None
        return ".".join(parts)

    def _recover(self) -> None:
        # skip to the next top-level class declaration
        while self.cur.kind != TokenKind.EOF:
            if self.depth <= 0 and (self.at_keyword("class") or self.at(TokenKind.AT)):
                return
            self.advance()

    # declarations

    def parse_annotations(self) -> list[AnnotationUse]:
        out = []
        while self.at(TokenKind.AT):
            at = self.advance()
            name = self.expect(TokenKind.IDENT, "annotation name")
            raw = ""
            if self.at(TokenKind.ANNOT_ARGS):
                raw = self.advance().text
            out.append(AnnotationUse(self.position(at), name.text, raw))
        return out

    def parse_class(self) -> ClassDecl:
        annotations = self.parse_annotations()
        kw = self.expect_keyword("class")
        first = annotations[0].position if annotations else self.position(kw)
        name = self.expect(TokenKind.IDENT, "class name").text
        type_params: list[str] = []
        if self.at(TokenKind.LT):
            self.advance()
            type_params.append(self.expect(TokenKind.IDENT, "type parameter").text)
            while self.at(TokenKind.COMMA):
                self.advance()
                type_params.append(self.expect(TokenKind.IDENT, "type parameter").text)
            self.expect(TokenKind.GT, "'>'")
        superclass = None
        if self.at_keyword("extends"):
            self.advance()
            superclass = self.parse_type_ref()
        self.expect(TokenKind.LBRACE, "'{'")
        fields: list[FieldDecl] = []
        methods: list[MethodDecl] = []
        field_names: set[str] = set()
        method_keys: set[tuple[str, int]] = set()
        while not self.at(TokenKind.RBRACE):
            if self.cur.kind == TokenKind.EOF:
                raise self.fail("'}'")
            member = self.parse_member(name)
            if member is None:
                continue
            if isinstance(member, FieldDecl):
                if member.name in field_names:
                    self.errors.append(ParseError(
                        member.position,
                        f"duplicate field '{member.name}' in class '{name}'"))
                else:
                    field_names.add(member.name)
                    fields.append(member)
            else:
                key = (member.name, len(member.params))
                if key in method_keys:
                    self.errors.append(ParseError(
                        member.position,
                        f"duplicate method '{member.name}' with "
                        f"{len(member.params)} parameter(s) in class '{name}'"))
                else:
                    method_keys.add(key)
                    methods.append(member)
        self.advance()  # RBRACE
        return ClassDecl(position=first, name=name, annotations=annotations,
                         type_params=type_params, superclass=superclass,
                         fields=fields, methods=methods)

    def parse_member(self, class_name: str) -> FieldDecl | MethodDecl | None:
        annotations = self.parse_annotations()
        start = annotations[0].position if annotations else self.position()
        if self.at_keyword("void"):
            self.advance()
            return_type = None
        else:
            return_type = self.parse_type_ref()
        name = self.expect(TokenKind.IDENT, "member name").text
        if self.at(TokenKind.LPAREN):
            return self._parse_method_rest(start, name, annotations, return_type)
        if return_type is None:
            raise self.fail("'(' (a 'void' member must be a method)")
        self.expect(TokenKind.SEMI, "';'")
        return FieldDecl(position=start, name=name, type=return_type,
                         annotations=annotations)

    def _parse_method_rest(self, start: Position, name: str,
                           annotations: list[AnnotationUse],
                           return_type: TypeRef | None) -> MethodDecl | None:
        self.advance()  # LPAREN
        params: list[Param] = []
        seen: set[str] = set()
        duplicate = None
        if not self.at(TokenKind.RPAREN):
            while True:
                p_type = self.parse_type_ref()
                p_name = self.expect(TokenKind.IDENT, "parameter name")
                if p_name.text in seen and duplicate is None:
                    duplicate = ParseError(
                        self.position(p_name),
                        f"duplicate parameter '{p_name.text}' in method '{name}'")
                seen.add(p_name.text)
                params.append(Param(p_type.position, p_name.text, p_type))
                if not self.at(TokenKind.COMMA):
                    break
                self.advance()
        self.expect(TokenKind.RPAREN, "')' or parameter type")
        body: list[Stmt] | None
        if self.at(TokenKind.SEMI):
            self.advance()
            body = None
        else:
            body = self.parse_block().statements
        if duplicate is not None:
            self.errors.append(duplicate)
            return None
        return MethodDecl(position=start, name=name, annotations=annotations,
                          params=params, return_type=return_type, body=body)

    def parse_type_ref(self) -> TypeRef:
        name = self.expect(TokenKind.IDENT, "type name")
        args: list[TypeRef] = []
        if self.at(TokenKind.LT):
            self.advance()
            args.append(self.parse_type_ref())
            while self.at(TokenKind.COMMA):
                self.advance()
                args.append(self.parse_type_ref())
            self.expect(TokenKind.GT, "'>'")
        dims = 0
        while self.at(TokenKind.LBRACKET):
            self.advance()
            self.expect(TokenKind.RBRACKET, "']'")
            dims += 1
        return TypeRef(self.position(name), name.text, args, dims)

    # statements

    def parse_block(self) -> Block:
        brace = self.expect(TokenKind.LBRACE, "'{'")
        stmts: list[Stmt] = []
        while not self.at(TokenKind.RBRACE):
            if self.cur.kind == TokenKind.EOF:
                raise self.fail("'}'")
            stmts.append(self.parse_stmt())
        self.advance()
        return Block(self.position(brace), stmts)

    def parse_stmt(self) -> Stmt:
        if self.at(TokenKind.LBRACE):
            return self.parse_block()
        if self.at_keyword("return"):
            kw = self.advance()
            value = None
            if not self.at(TokenKind.SEMI):
                value = self.parse_expr()
            self.expect(TokenKind.SEMI, "';'")
            return Return(self.position(kw), value)
        if self.at_keyword("if"):
            return self._parse_if()
        if self.at_keyword("while"):
            kw = self.advance()
            self.expect(TokenKind.LPAREN, "'('")
            cond = self.parse_expr()
            self.expect(TokenKind.RPAREN, "')'")
            return While(self.position(kw), cond, self.parse_block())
        return self._parse_local_or_expr_stmt()

    def _parse_if(self) -> If:
        kw = self.expect_keyword("if")
        self.expect(TokenKind.LPAREN, "'('")
        cond = self.parse_expr()
        self.expect(TokenKind.RPAREN, "')'")
        then_block = self.parse_block()
        else_block = None
        if self.at_keyword("else"):
            self.advance()
            if self.at_keyword("if"):
                nested = self._parse_if()
                else_block = Block(nested.position, [nested])
            else:
                else_block = self.parse_block()
        return If(self.position(kw), cond, then_block, else_block)

    def _parse_local_or_expr_stmt(self) -> Stmt:
        if self.cur.kind == TokenKind.IDENT:
            saved = self.pos
            try:
                decl_type = self.parse_type_ref()
                name = self.expect(TokenKind.IDENT, "name")
                if self.at(TokenKind.SEMI):
                    self.advance()
                    return LocalDecl(decl_type.position, name.text, decl_type, None)
                if self.at(TokenKind.ASSIGN):
                    self.advance()
                    init = self.parse_expr()
                    self.expect(TokenKind.SEMI, "';'")
                    return LocalDecl(decl_type.position, name.text, decl_type, init)
                raise self.fail("';' or '='")
            except _Fail:
                self.pos = saved  # not a declaration; reparse as an expression
        expr = self.parse_expr()
        if self.at(TokenKind.ASSIGN):
            eq = self.advance()
            if not isinstance(expr, (VarRef, FieldAccess)):
                raise self.fail("assignable target on left of '='", eq)
            value = self.parse_expr()
            self.expect(TokenKind.SEMI, "';'")
            return Assign(expr.position, expr, value)
        self.expect(TokenKind.SEMI, "';'")
        return ExprStmt(expr.position, expr)

    # expressions: one comparison tier over one arithmetic tier, left-assoc

    def parse_expr(self) -> Expr:
        left = self._parse_arith()
        while self._compare_op() is not None:
            op = self.advance().text
            right = self._parse_arith()
            left = Binary(left.position, op, left, right)
        return left

    def _compare_op(self) -> str | None:
        t = self.cur
        if t.kind in (TokenKind.LT, TokenKind.GT):
            return t.text
        if t.kind == TokenKind.OP and t.text in _COMPARE_OPS:
            return t.text
        return None

    def _parse_arith(self) -> Expr:
        left = self._parse_postfix()
        while self.cur.kind == TokenKind.OP and self.cur.text in _ARITH_OPS:
            op = self.advance().text
            right = self._parse_postfix()
            left = Binary(left.position, op, left, right)
        return left

    def _parse_postfix(self) -> Expr:
        expr = self._parse_primary()
        while self.at(TokenKind.DOT):
            self.advance()
            name = self.expect(TokenKind.IDENT, "member name")
            if self.at(TokenKind.LPAREN):
                args = self._parse_args()
                expr = Call(expr.position, expr, name.text, args,
                            self.position(name))
            else:
                expr = FieldAccess(expr.position, expr, name.text,
                                   self.position(name))
        return expr

    def _parse_primary(self) -> Expr:
        t = self.cur
        if t.kind == TokenKind.INT:
            self.advance()
            return Literal(self.position(t), "int", int(t.text))
        if t.kind == TokenKind.STRING:
            self.advance()
            return Literal(self.position(t), "string", decode_string(t.text))
        if t.kind == TokenKind.KEYWORD:
            if t.text in ("true", "false"):
                self.advance()
                return Literal(self.position(t), "boolean", t.text == "true")
            if t.text == "null":
                self.advance()
                return Literal(self.position(t), "null", None)
            if t.text == "new":
                self.advance()
                type_ref = self.parse_type_ref()
                if not self.at(TokenKind.LPAREN):
                    raise self.fail("'('")
                args = self._parse_args()
                return New(self.position(t), type_ref, args)
            raise self.fail("expression")
        if t.kind == TokenKind.IDENT:
            self.advance()
            if self.at(TokenKind.LPAREN):
                args = self._parse_args()
                return Call(self.position(t), None, t.text, args, self.position(t))
            return VarRef(self.position(t), t.text)
        if t.kind == TokenKind.LPAREN:
            cast = self._try_cast(t)
            if cast is not None:
                return cast
            self.advance()
            inner = self.parse_expr()
            self.expect(TokenKind.RPAREN, "')'")
            return inner
        raise self.fail("expression")

    def _try_cast(self, lparen: Token) -> Cast | None:
        saved = self.pos
        try:
            self.advance()  # LPAREN
            type_ref = self.parse_type_ref()
            self.expect(TokenKind.RPAREN, "')'")
            if not self._starts_expression():
                raise self.fail("expression")
            operand = self._parse_postfix()
            return Cast(self.position(lparen), type_ref, operand)
        except _Fail:
            self.pos = saved
            return None

    def _starts_expression(self) -> bool:
        t = self.cur
        if t.kind in (TokenKind.IDENT, TokenKind.INT, TokenKind.STRING,
                      TokenKind.LPAREN):
            return True
        return t.kind == TokenKind.KEYWORD and t.text in _EXPR_START_KEYWORDS

    def _parse_args(self) -> list[Expr]:
        self.expect(TokenKind.LPAREN, "'('")
        args: list[Expr] = []
        if not self.at(TokenKind.RPAREN):
            args.append(self.parse_expr())
            while self.at(TokenKind.COMMA):
                self.advance()
                args.append(self.parse_expr())
        self.expect(TokenKind.RPAREN, "')'")
        return args
