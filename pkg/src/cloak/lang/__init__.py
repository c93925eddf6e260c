"""Source language support: tokens, syntax tree, parser, printer."""

from .nodes import (
    AnnotatedType,
    ArrayType,
    Assign,
    BoolLit,
    Contract,
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
    While,
)
from .parser import parse_contract
from .printer import expr_text, print_contract
from .tokens import Token, TokenKind, tokenize

__all__ = [
    "AnnotatedType",
    "ArrayType",
    "Assign",
    "BoolLit",
    "Contract",
    "Decl",
    "Expr",
    "FunctionDecl",
    "Ident",
    "If",
    "Index",
    "IntLit",
    "Length",
    "MappingType",
    "MeExpr",
    "NativeApply",
    "Owner",
    "OWNER_ALL",
    "OWNER_ME",
    "OWNER_TEE",
    "Param",
    "PrimType",
    "Require",
    "Return",
    "Reveal",
    "StateVar",
    "Stmt",
    "Ternary",
    "While",
    "parse_contract",
    "print_contract",
    "expr_text",
    "Token",
    "TokenKind",
    "tokenize",
]
