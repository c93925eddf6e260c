"""Render a syntax tree back to source text.

Printing is canonical rather than faithful to the original spelling:
``uint`` comes out as ``uint256``, sugar stays desugared, and owner
``all`` is left implicit.  Re-parsing printed output yields a tree equal
to the one printed, which makes the form safe to hash and diff.
"""

from __future__ import annotations

from .nodes import (
    AnnotatedType,
    ArrayType,
    Assign,
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
    OWNER_ALL,
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

_INDENT = "    "

# Binding strength per operator; unary and postfix sit above all of these.
_PRECEDENCE = {
    "||": 2,
    "&&": 3,
    "==": 4,
    "!=": 4,
    "<": 5,
    "<=": 5,
    ">": 5,
    ">=": 5,
    "+": 6,
    "-": 6,
    "*": 7,
    "/": 7,
    "%": 7,
}
_UNARY = 8
_POSTFIX = 9


def expr_text(expr: Expr) -> str:
    """Single-line rendering of an expression with minimal parentheses."""
    return _expr(expr, 0)


def _wrap(text: str, prec: int, required: int) -> str:
    return f"({text})" if prec < required else text


def _expr(expr: Expr, required: int) -> str:
    if isinstance(expr, IntLit):
        return str(expr.value)
    if isinstance(expr, BoolLit):
        return "true" if expr.value else "false"
    if isinstance(expr, Ident):
        return expr.name
    if isinstance(expr, MeExpr):
        return "me"
    if isinstance(expr, Index):
        base = _expr(expr.base, _POSTFIX)
        return f"{base}[{_expr(expr.index, 0)}]"
    if isinstance(expr, Length):
        return f"{_expr(expr.base, _POSTFIX)}.length"
    if isinstance(expr, Reveal):
        return f"reveal({_expr(expr.value, 0)}, {expr.target})"
    if isinstance(expr, Ternary):
        text = f"{_expr(expr.cond, 2)} ? {_expr(expr.then, 0)} : {_expr(expr.other, 1)}"
        return _wrap(text, 1, required)
    if isinstance(expr, NativeApply):
        if len(expr.args) == 1:
            sym = "-" if expr.op == "neg" else expr.op
            return _wrap(f"{sym}{_expr(expr.args[0], _UNARY)}", _UNARY, required)
        prec = _PRECEDENCE[expr.op]
        lhs = _expr(expr.args[0], prec)
        rhs = _expr(expr.args[1], prec + 1)
        return _wrap(f"{lhs} {expr.op} {rhs}", prec, required)
    raise TypeError(f"cannot print expression {expr!r}")


def _data_type(data: DataType) -> str:
    if isinstance(data, PrimType):
        return data.name
    if isinstance(data, MappingType):
        key = data.key.name
        if data.key_tag is not None:
            key = f"{key} !{data.key_tag}"
        return f"mapping({key} => {_annotated(data.value)})"
    if isinstance(data, ArrayType):
        if data.addr_tag is not None:
            return f"{data.elem.data.name}[!{data.addr_tag}]"
        inner = "" if data.elem.owner == OWNER_ALL else f"@{data.elem.owner}"
        return f"{_data_type(data.elem.data)}[{inner}]"
    raise TypeError(f"cannot print type {data!r}")


def _annotated(annotated: AnnotatedType) -> str:
    text = _data_type(annotated.data)
    if annotated.owner != OWNER_ALL:
        text += f" @{annotated.owner}"
    return text


def _param(param: Param) -> str:
    return f"{_annotated(param.annotated)} {param.name}"


def _stmt(stmt: Stmt, depth: int) -> list[str]:
    pad = _INDENT * depth
    if isinstance(stmt, Decl):
        return [f"{pad}{_annotated(stmt.annotated)} {stmt.name};"]
    if isinstance(stmt, Assign):
        return [f"{pad}{_expr(stmt.target, 0)} = {_expr(stmt.value, 0)};"]
    if isinstance(stmt, Require):
        return [f"{pad}require({_expr(stmt.cond, 0)});"]
    if isinstance(stmt, Return):
        if stmt.values:
            return [f"{pad}return {', '.join(_expr(v, 0) for v in stmt.values)};"]
        return [f"{pad}return;"]
    if isinstance(stmt, If):
        lines = [f"{pad}if ({_expr(stmt.cond, 0)}) {{"]
        for inner in stmt.then:
            lines.extend(_stmt(inner, depth + 1))
        if stmt.other:
            lines.append(f"{pad}}} else {{")
            for inner in stmt.other:
                lines.extend(_stmt(inner, depth + 1))
        lines.append(f"{pad}}}")
        return lines
    if isinstance(stmt, While):
        lines = [f"{pad}while ({_expr(stmt.cond, 0)}) {{"]
        for inner in stmt.body:
            lines.extend(_stmt(inner, depth + 1))
        lines.append(f"{pad}}}")
        return lines
    raise TypeError(f"cannot print statement {stmt!r}")


def _function(fn: FunctionDecl) -> list[str]:
    params = ", ".join(_param(p) for p in fn.params)
    head = f"{_INDENT}function {fn.name}({params}) public"
    if fn.returns:
        head += f" returns ({', '.join(_param(r) for r in fn.returns)})"
    lines = [head + " {"]
    for stmt in fn.body:
        lines.extend(_stmt(stmt, 2))
    lines.append(f"{_INDENT}}}")
    return lines


def print_contract(contract: Contract) -> str:
    """Render a contract as canonical source text ending in a newline."""
    lines = [f"contract {contract.name} {{"]
    for var in contract.state_vars:
        final = "final " if var.is_final else ""
        lines.append(f"{_INDENT}{final}{_annotated(var.annotated)} {var.name};")
    for index, fn in enumerate(contract.functions):
        if contract.state_vars or index > 0:
            lines.append("")
        lines.extend(_function(fn))
    lines.append("}")
    return "\n".join(lines) + "\n"
