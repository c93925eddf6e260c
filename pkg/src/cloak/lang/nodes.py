"""Syntax tree for annotated contracts.

Nodes compare structurally: source positions are carried for diagnostics
but excluded from equality and from the canonical dictionary form, so two
parses of differently formatted but identical programs are equal and hash
identically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Union


@dataclass(frozen=True)
class Owner:
    """Ownership label attached to a type or used as a reveal target.

    ``kind`` is one of all, tee, me, named; ``name`` is set only for
    named owners and refers to an address-typed variable or tag in scope.
    """

    kind: str
    name: str | None = None

    def to_dict(self) -> dict[str, Any]:
        if self.kind == "named":
            return {"kind": "named", "id": self.name}
        return {"kind": self.kind}

    def __str__(self) -> str:
        return self.name if self.kind == "named" else self.kind


OWNER_ALL = Owner("all")
OWNER_TEE = Owner("tee")
OWNER_ME = Owner("me")


# ---------------------------------------------------------------------------
# Data types


@dataclass(frozen=True)
class PrimType:
    """Primitive type: bool, uint256, address, or bin (opaque bytes)."""

    name: str

    def to_dict(self) -> dict[str, Any]:
        return {"type": self.name}

    def __str__(self) -> str:
        return self.name


BOOL = PrimType("bool")
UINT = PrimType("uint256")
ADDRESS = PrimType("address")
BIN = PrimType("bin")


@dataclass(frozen=True)
class MappingType:
    """Mapping from a primitive key to an annotated value type.

    A named mapping (``key_tag`` set) binds the key to a tag so value
    annotations can name the key as their owner; its key must be address.
    """

    key: PrimType
    value: "AnnotatedType"
    key_tag: str | None = None

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "type": "mapping",
            "key": self.key.to_dict(),
            "value": self.value.to_dict(),
        }
        if self.key_tag is not None:
            out["key_tag"] = self.key_tag
        return out


@dataclass(frozen=True)
class ArrayType:
    """Dynamic array.  ``addr_tag`` marks an address array whose elements
    name the owners referenced by sibling arrays annotated with the tag."""

    elem: "AnnotatedType"
    addr_tag: str | None = None

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"type": "array", "elem": self.elem.to_dict()}
        if self.addr_tag is not None:
            out["addr_tag"] = self.addr_tag
        return out


DataType = Union[PrimType, MappingType, ArrayType]


@dataclass(frozen=True)
class AnnotatedType:
    """A data type paired with an explicit owner."""

    data: DataType
    owner: Owner = OWNER_ALL

    def to_dict(self) -> dict[str, Any]:
        return {"data": self.data.to_dict(), "owner": self.owner.to_dict()}


# ---------------------------------------------------------------------------
# Expressions


@dataclass(frozen=True)
class _Node:
    line: int = field(default=0, compare=False, kw_only=True)
    col: int = field(default=0, compare=False, kw_only=True)


@dataclass(frozen=True)
class IntLit(_Node):
    value: int

    def to_dict(self) -> dict[str, Any]:
        return {"node": "int", "value": str(self.value)}


@dataclass(frozen=True)
class BoolLit(_Node):
    value: bool

    def to_dict(self) -> dict[str, Any]:
        return {"node": "bool", "value": self.value}


@dataclass(frozen=True)
class Ident(_Node):
    name: str

    def to_dict(self) -> dict[str, Any]:
        return {"node": "ident", "name": self.name}


@dataclass(frozen=True)
class MeExpr(_Node):
    """The caller's address."""

    def to_dict(self) -> dict[str, Any]:
        return {"node": "me"}


@dataclass(frozen=True)
class Index(_Node):
    base: "Expr"
    index: "Expr"

    def to_dict(self) -> dict[str, Any]:
        return {"node": "index", "base": self.base.to_dict(), "index": self.index.to_dict()}


@dataclass(frozen=True)
class Length(_Node):
    base: "Expr"

    def to_dict(self) -> dict[str, Any]:
        return {"node": "length", "base": self.base.to_dict()}


@dataclass(frozen=True)
class NativeApply(_Node):
    """Built-in operator application; ``op`` is the surface spelling."""

    op: str
    args: tuple["Expr", ...]

    def to_dict(self) -> dict[str, Any]:
        return {"node": "native", "op": self.op, "args": [a.to_dict() for a in self.args]}


@dataclass(frozen=True)
class Ternary(_Node):
    cond: "Expr"
    then: "Expr"
    other: "Expr"

    def to_dict(self) -> dict[str, Any]:
        return {
            "node": "ternary",
            "cond": self.cond.to_dict(),
            "then": self.then.to_dict(),
            "other": self.other.to_dict(),
        }


@dataclass(frozen=True)
class Reveal(_Node):
    """Declassification: re-labels ``value`` to ``target`` ownership."""

    value: "Expr"
    target: Owner

    def to_dict(self) -> dict[str, Any]:
        return {"node": "reveal", "value": self.value.to_dict(), "target": self.target.to_dict()}


Expr = Union[IntLit, BoolLit, Ident, MeExpr, Index, Length, NativeApply, Ternary, Reveal]


# ---------------------------------------------------------------------------
# Statements


@dataclass(frozen=True)
class Decl(_Node):
    annotated: AnnotatedType
    name: str

    def to_dict(self) -> dict[str, Any]:
        return {"node": "decl", "type": self.annotated.to_dict(), "name": self.name}


@dataclass(frozen=True)
class Assign(_Node):
    target: Expr
    value: Expr

    def to_dict(self) -> dict[str, Any]:
        return {"node": "assign", "target": self.target.to_dict(), "value": self.value.to_dict()}


@dataclass(frozen=True)
class Require(_Node):
    cond: Expr

    def to_dict(self) -> dict[str, Any]:
        return {"node": "require", "cond": self.cond.to_dict()}


@dataclass(frozen=True)
class If(_Node):
    cond: Expr
    then: tuple["Stmt", ...]
    other: tuple["Stmt", ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "node": "if",
            "cond": self.cond.to_dict(),
            "then": [s.to_dict() for s in self.then],
            "else": [s.to_dict() for s in self.other],
        }


@dataclass(frozen=True)
class While(_Node):
    cond: Expr
    body: tuple["Stmt", ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "node": "while",
            "cond": self.cond.to_dict(),
            "body": [s.to_dict() for s in self.body],
        }


@dataclass(frozen=True)
class Return(_Node):
    values: tuple[Expr, ...]

    def to_dict(self) -> dict[str, Any]:
        return {"node": "return", "values": [v.to_dict() for v in self.values]}


Stmt = Union[Decl, Assign, Require, If, While, Return]


# ---------------------------------------------------------------------------
# Declarations


@dataclass(frozen=True)
class Param(_Node):
    annotated: AnnotatedType
    name: str

    def to_dict(self) -> dict[str, Any]:
        return {"type": self.annotated.to_dict(), "name": self.name}


@dataclass(frozen=True)
class StateVar(_Node):
    annotated: AnnotatedType
    name: str
    is_final: bool = False

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"type": self.annotated.to_dict(), "name": self.name}
        if self.is_final:
            out["final"] = True
        return out


@dataclass(frozen=True)
class FunctionDecl(_Node):
    name: str
    params: tuple[Param, ...]
    returns: tuple[Param, ...]
    body: tuple[Stmt, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "params": [p.to_dict() for p in self.params],
            "returns": [r.to_dict() for r in self.returns],
            "body": [s.to_dict() for s in self.body],
        }


@dataclass(frozen=True)
class Contract(_Node):
    name: str
    state_vars: tuple[StateVar, ...]
    functions: tuple[FunctionDecl, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "contract": self.name,
            "state": [v.to_dict() for v in self.state_vars],
            "functions": [f.to_dict() for f in self.functions],
        }

    def function(self, name: str) -> FunctionDecl:
        for fn in self.functions:
            if fn.name == name:
                return fn
        raise KeyError(name)

    def state_var(self, name: str) -> StateVar | None:
        for var in self.state_vars:
            if var.name == name:
                return var
        return None
