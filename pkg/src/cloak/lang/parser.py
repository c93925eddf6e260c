"""Recursive descent parser for annotated contracts.

The surface language is a small Solidity-style subset.  Conveniences with
no semantic weight of their own are rewritten while parsing: ``for`` loops
become ``while`` loops, compound assignments and ``++``/``--`` become
plain assignments over a native operator, and declarations with an
initializer split into a declaration followed by an assignment.  The tree
that comes out is what every later stage consumes.
"""

from __future__ import annotations

from ..errors import ParseError
from .nodes import (
    ADDRESS,
    AnnotatedType,
    ArrayType,
    Assign,
    BIN,
    BOOL,
    BoolLit,
    Contract,
    DataType,
    Decl,
    Expr,
    FunctionDecl,
    Ident,
    If,
    Index,
    IntLit,
    Length,
    MappingType,
    MeExpr,
    NativeApply,
    Owner,
    OWNER_ALL,
    OWNER_ME,
    OWNER_TEE,
    Param,
    PrimType,
    Require,
    Return,
    Reveal,
    StateVar,
    Stmt,
    Ternary,
    UINT,
    While,
)
from .tokens import Token, TokenKind, tokenize

_PRIMS = {"uint": UINT, "uint256": UINT, "bool": BOOL, "address": ADDRESS, "bin": BIN}
_TYPE_STARTS = set(_PRIMS) | {"mapping"}


class _Parser:
    def __init__(self, tokens: list[Token], path: str):
        self.tokens = tokens
        self.pos = 0
        self.path = path

    # -- token plumbing -----------------------------------------------------

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind is not TokenKind.EOF:
            self.pos += 1
        return tok

    def error(self, message: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.peek()
        return ParseError(message, tok.line, tok.col, self.path)

    def expect_symbol(self, text: str) -> Token:
        tok = self.peek()
        if not tok.is_symbol(text):
            raise self.error(f"expected {text!r}, found {tok.text!r}")
        return self.advance()

    def expect_keyword(self, text: str) -> Token:
        tok = self.peek()
        if not tok.is_keyword(text):
            raise self.error(f"expected {text!r}, found {tok.text!r}")
        return self.advance()

    def expect_ident(self, what: str = "identifier") -> Token:
        tok = self.peek()
        if tok.kind is not TokenKind.IDENT:
            raise self.error(f"expected {what}, found {tok.text!r}")
        return self.advance()

    def match_symbol(self, text: str) -> Token | None:
        if self.peek().is_symbol(text):
            return self.advance()
        return None

    # -- declarations -------------------------------------------------------

    def contract(self) -> Contract:
        start = self.expect_keyword("contract")
        name = self.expect_ident("contract name").text
        self.expect_symbol("{")
        state_vars: list[StateVar] = []
        functions: list[FunctionDecl] = []
        while not self.peek().is_symbol("}"):
            tok = self.peek()
            if tok.is_keyword("function"):
                functions.append(self.function_decl())
            elif tok.is_keyword("final") or tok.text in _TYPE_STARTS:
                state_vars.append(self.state_var())
            else:
                raise self.error(f"expected state variable or function, found {tok.text!r}")
        self.expect_symbol("}")
        tok = self.peek()
        if tok.kind is not TokenKind.EOF:
            raise self.error(f"unexpected input after contract: {tok.text!r}")
        return Contract(
            name=name,
            state_vars=tuple(state_vars),
            functions=tuple(functions),
            line=start.line,
            col=start.col,
        )

    def state_var(self) -> StateVar:
        start = self.peek()
        is_final = False
        if start.is_keyword("final"):
            self.advance()
            is_final = True
        annotated = self.annotated_type()
        name = self.expect_ident("state variable name").text
        self.expect_symbol(";")
        return StateVar(
            annotated=annotated, name=name, is_final=is_final, line=start.line, col=start.col
        )

    def function_decl(self) -> FunctionDecl:
        start = self.expect_keyword("function")
        name = self.expect_ident("function name").text
        self.expect_symbol("(")
        params = self.param_list(")")
        self.expect_symbol(")")
        if self.peek().is_keyword("public"):
            self.advance()  # visibility carries no meaning here
        returns: tuple[Param, ...] = ()
        if self.peek().is_keyword("returns"):
            self.advance()
            self.expect_symbol("(")
            returns = self.param_list(")")
            self.expect_symbol(")")
        body = self.block()
        return FunctionDecl(
            name=name, params=params, returns=returns, body=body, line=start.line, col=start.col
        )

    def param_list(self, closer: str) -> tuple[Param, ...]:
        params: list[Param] = []
        if self.peek().is_symbol(closer):
            return ()
        while True:
            start = self.peek()
            annotated = self.annotated_type()
            name = self.expect_ident("parameter name").text
            params.append(Param(annotated=annotated, name=name, line=start.line, col=start.col))
            if not self.match_symbol(","):
                break
        return tuple(params)

    # -- types --------------------------------------------------------------

    def annotated_type(self) -> AnnotatedType:
        data = self.data_type()
        owner = OWNER_ALL
        if self.peek().is_symbol("@"):
            self.advance()
            owner = self.owner_name()
        return AnnotatedType(data=data, owner=owner)

    def data_type(self) -> DataType:
        tok = self.peek()
        if tok.is_keyword("mapping"):
            return self.mapping_type()
        if tok.text in _PRIMS and tok.kind is TokenKind.KEYWORD:
            self.advance()
            prim = _PRIMS[tok.text]
            if self.peek().is_symbol("["):
                return self.array_suffix(prim)
            return prim
        raise self.error(f"expected a type, found {tok.text!r}")

    def mapping_type(self) -> MappingType:
        self.expect_keyword("mapping")
        self.expect_symbol("(")
        key_tok = self.peek()
        if key_tok.text not in _PRIMS or key_tok.kind is not TokenKind.KEYWORD:
            raise self.error(f"expected mapping key type, found {key_tok.text!r}")
        self.advance()
        key = _PRIMS[key_tok.text]
        key_tag: str | None = None
        if self.peek().is_symbol("!"):
            self.advance()
            if key is not ADDRESS:
                raise self.error("only address keys can declare an owner tag", key_tok)
            key_tag = self.expect_ident("key tag").text
        self.expect_symbol("=>")
        value = self.annotated_type()
        self.expect_symbol(")")
        return MappingType(key=key, value=value, key_tag=key_tag)

    def array_suffix(self, prim: PrimType) -> ArrayType:
        open_tok = self.expect_symbol("[")
        if self.match_symbol("]"):
            return ArrayType(elem=AnnotatedType(data=prim, owner=OWNER_ALL))
        if self.peek().is_symbol("!"):
            self.advance()
            if prim is not ADDRESS:
                raise self.error("only address arrays can declare an owner tag", open_tok)
            tag = self.expect_ident("array tag").text
            self.expect_symbol("]")
            return ArrayType(elem=AnnotatedType(data=prim, owner=OWNER_ALL), addr_tag=tag)
        if self.peek().is_symbol("@"):
            self.advance()
            owner = self.owner_name()
            self.expect_symbol("]")
            return ArrayType(elem=AnnotatedType(data=prim, owner=owner))
        raise self.error(f"expected ']', '@owner' or '!tag', found {self.peek().text!r}")

    def owner_name(self) -> Owner:
        tok = self.peek()
        if tok.is_keyword("me"):
            self.advance()
            return OWNER_ME
        if tok.kind is TokenKind.IDENT:
            self.advance()
            if tok.text == "all":
                return OWNER_ALL
            if tok.text == "tee":
                return OWNER_TEE
            return Owner("named", tok.text)
        raise self.error(f"expected an owner, found {tok.text!r}")

    # -- statements ---------------------------------------------------------

    def block(self) -> tuple[Stmt, ...]:
        self.expect_symbol("{")
        stmts: list[Stmt] = []
        while not self.peek().is_symbol("}"):
            stmts.extend(self.statement())
        self.expect_symbol("}")
        return tuple(stmts)

    def statement(self) -> list[Stmt]:
        """Parse one statement; sugar can expand to several."""
        tok = self.peek()
        if tok.is_symbol(";"):
            self.advance()
            return []
        if tok.is_keyword("require"):
            self.advance()
            self.expect_symbol("(")
            cond = self.expression()
            self.expect_symbol(")")
            self.expect_symbol(";")
            return [Require(cond=cond, line=tok.line, col=tok.col)]
        if tok.is_keyword("if"):
            return [self.if_statement()]
        if tok.is_keyword("while"):
            self.advance()
            self.expect_symbol("(")
            cond = self.expression()
            self.expect_symbol(")")
            body = self.block()
            return [While(cond=cond, body=body, line=tok.line, col=tok.col)]
        if tok.is_keyword("for"):
            return self.for_statement()
        if tok.is_keyword("return"):
            self.advance()
            values: list[Expr] = []
            if not self.peek().is_symbol(";"):
                values.append(self.expression())
                while self.match_symbol(","):
                    values.append(self.expression())
            self.expect_symbol(";")
            return [Return(values=tuple(values), line=tok.line, col=tok.col)]
        if tok.text in _TYPE_STARTS and tok.kind is TokenKind.KEYWORD:
            stmts = self.var_decl()
            self.expect_symbol(";")
            return stmts
        stmts = [self.assignment()]
        self.expect_symbol(";")
        return stmts

    def if_statement(self) -> If:
        tok = self.expect_keyword("if")
        self.expect_symbol("(")
        cond = self.expression()
        self.expect_symbol(")")
        then = self.block()
        other: tuple[Stmt, ...] = ()
        if self.peek().is_keyword("else"):
            self.advance()
            if self.peek().is_keyword("if"):
                other = (self.if_statement(),)
            else:
                other = self.block()
        return If(cond=cond, then=then, other=other, line=tok.line, col=tok.col)

    def for_statement(self) -> list[Stmt]:
        tok = self.expect_keyword("for")
        self.expect_symbol("(")
        init: list[Stmt] = []
        if not self.peek().is_symbol(";"):
            if self.peek().text in _TYPE_STARTS and self.peek().kind is TokenKind.KEYWORD:
                init = self.var_decl()
            else:
                init = [self.assignment()]
        self.expect_symbol(";")
        cond: Expr = BoolLit(value=True, line=tok.line, col=tok.col)
        if not self.peek().is_symbol(";"):
            cond = self.expression()
        self.expect_symbol(";")
        update: list[Stmt] = []
        if not self.peek().is_symbol(")"):
            update = [self.assignment()]
        self.expect_symbol(")")
        body = self.block()
        loop = While(cond=cond, body=body + tuple(update), line=tok.line, col=tok.col)
        return init + [loop]

    def var_decl(self) -> list[Stmt]:
        start = self.peek()
        annotated = self.annotated_type()
        name_tok = self.expect_ident("variable name")
        decl = Decl(annotated=annotated, name=name_tok.text, line=start.line, col=start.col)
        if self.match_symbol("="):
            value = self.expression()
            target = Ident(name=name_tok.text, line=name_tok.line, col=name_tok.col)
            return [decl, Assign(target=target, value=value, line=start.line, col=start.col)]
        return [decl]

    def assignment(self) -> Stmt:
        start = self.peek()
        target = self.expression()
        if not isinstance(target, (Ident, Index)):
            raise self.error("left side of an assignment must be a variable or index", start)
        tok = self.peek()
        if tok.is_symbol("="):
            self.advance()
            return Assign(target=target, value=self.expression(), line=start.line, col=start.col)
        for op_sym, op in (("+=", "+"), ("-=", "-"), ("*=", "*")):
            if tok.is_symbol(op_sym):
                self.advance()
                value = NativeApply(
                    op=op, args=(target, self.expression()), line=tok.line, col=tok.col
                )
                return Assign(target=target, value=value, line=start.line, col=start.col)
        for op_sym, op in (("++", "+"), ("--", "-")):
            if tok.is_symbol(op_sym):
                self.advance()
                one = IntLit(value=1, line=tok.line, col=tok.col)
                value = NativeApply(op=op, args=(target, one), line=tok.line, col=tok.col)
                return Assign(target=target, value=value, line=start.line, col=start.col)
        raise self.error(f"expected an assignment operator, found {tok.text!r}")

    # -- expressions --------------------------------------------------------

    def expression(self) -> Expr:
        return self.ternary()

    def ternary(self) -> Expr:
        cond = self.binary(0)
        if self.peek().is_symbol("?"):
            tok = self.advance()
            then = self.expression()
            self.expect_symbol(":")
            other = self.ternary()
            return Ternary(cond=cond, then=then, other=other, line=tok.line, col=tok.col)
        return cond

    _BINARY_LEVELS = [
        ["||"],
        ["&&"],
        ["==", "!="],
        ["<", "<=", ">", ">="],
        ["+", "-"],
        ["*", "/", "%"],
    ]

    def binary(self, level: int) -> Expr:
        if level >= len(self._BINARY_LEVELS):
            return self.unary()
        expr = self.binary(level + 1)
        while True:
            tok = self.peek()
            if tok.kind is TokenKind.SYMBOL and tok.text in self._BINARY_LEVELS[level]:
                self.advance()
                rhs = self.binary(level + 1)
                expr = NativeApply(op=tok.text, args=(expr, rhs), line=tok.line, col=tok.col)
            else:
                return expr

    def unary(self) -> Expr:
        tok = self.peek()
        if tok.is_symbol("!") or tok.is_symbol("-"):
            self.advance()
            operand = self.unary()
            op = "!" if tok.text == "!" else "neg"
            return NativeApply(op=op, args=(operand,), line=tok.line, col=tok.col)
        return self.postfix()

    def postfix(self) -> Expr:
        expr = self.primary()
        while True:
            tok = self.peek()
            if tok.is_symbol("["):
                self.advance()
                index = self.expression()
                self.expect_symbol("]")
                expr = Index(base=expr, index=index, line=tok.line, col=tok.col)
            elif tok.is_symbol("."):
                self.advance()
                member = self.expect_ident("member name")
                if member.text != "length":
                    raise self.error(f"unknown member {member.text!r}", member)
                expr = Length(base=expr, line=tok.line, col=tok.col)
            else:
                return expr

    def primary(self) -> Expr:
        tok = self.peek()
        if tok.is_symbol("("):
            self.advance()
            expr = self.expression()
            self.expect_symbol(")")
            return expr
        if tok.kind is TokenKind.NUMBER:
            self.advance()
            return IntLit(value=int(tok.text), line=tok.line, col=tok.col)
        if tok.is_keyword("true") or tok.is_keyword("false"):
            self.advance()
            return BoolLit(value=tok.text == "true", line=tok.line, col=tok.col)
        if tok.is_keyword("me"):
            self.advance()
            return MeExpr(line=tok.line, col=tok.col)
        if tok.is_keyword("reveal"):
            self.advance()
            self.expect_symbol("(")
            value = self.expression()
            self.expect_symbol(",")
            target = self.owner_name()
            self.expect_symbol(")")
            return Reveal(value=value, target=target, line=tok.line, col=tok.col)
        if tok.kind is TokenKind.IDENT:
            self.advance()
            return Ident(name=tok.text, line=tok.line, col=tok.col)
        raise self.error(f"expected an expression, found {tok.text!r}")


def parse_contract(source: str, path: str = "<input>") -> Contract:
    """Parse a contract source string into a syntax tree."""
    return _Parser(tokenize(source, path), path).contract()
