"""Ownership-aware type checking and function classification.

Beyond ordinary data-type checking, every expression is labelled with the
set of owners whose private data feeds it.  Owners are identity atoms: the
caller, the address held by a specific variable, or an element of a tagged
address array.  A union-find structure coarsens atoms when the program
proves two addresses equal (an equality guard, or copying a final address
state variable), which can only shrink a function's owner set.

An assignment is legal when the source is public, when both sides share an
owner atom, or in two enclave-resolved cases that are reported as notes:
the assignment sits under a condition over private data, or the source is
an operator application over operands that include the target's owner.
``reveal`` is the only way to re-label data explicitly.

Each function is then classified from the union of owner sets over its
parameters, returns and body expressions:

* all owners are ``all``                      -> public, runs on chain
* one private owner and no enclave owner      -> private, single party
* otherwise                                   -> multi-party transaction
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .lang.nodes import (
    ADDRESS,
    AnnotatedType,
    ArrayType,
    Assign,
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
    PrimType,
    Require,
    Return,
    Reveal,
    Stmt,
    Ternary,
    UINT,
    While,
)
from .lang.printer import expr_text

UINT_MAX = 2**256 - 1

PUT = "PUT"
PRT = "PRT"
MPT = "MPT"

# Atom forms:
#   ("all",) / ("tee",)            special, never merged
#   ("caller",)                    the transaction caller (owner "me")
#   ("var", scope, name)           address held by a variable
#   ("elem", tag, index_text)      address at a tagged-array position
#   ("expr", text)                 any other address expression
Atom = tuple

ALL_ATOM: Atom = ("all",)
TEE_ATOM: Atom = ("tee",)
CALLER_ATOM: Atom = ("caller",)


def atom_text(atom: Atom) -> str:
    if atom == ALL_ATOM:
        return "all"
    if atom == TEE_ATOM:
        return "tee"
    if atom == CALLER_ATOM:
        return "me"
    if atom[0] == "var":
        return f"id:{atom[1]}:{atom[2]}"
    if atom[0] == "elem":
        return f"elem:{atom[1]}:{atom[2]}"
    return f"expr:{atom[1]}"


class OwnerUnion:
    """Union-find over identity atoms; ``all`` and ``tee`` stay apart."""

    def __init__(self) -> None:
        self._parent: dict[Atom, Atom] = {}

    def find(self, atom: Atom) -> Atom:
        parent = self._parent.get(atom, atom)
        if parent == atom:
            return atom
        root = self.find(parent)
        self._parent[atom] = root
        return root

    def union(self, a: Atom, b: Atom) -> None:
        if a in (ALL_ATOM, TEE_ATOM) or b in (ALL_ATOM, TEE_ATOM):
            return
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # deterministic orientation keeps reprs stable across runs
            lo, hi = sorted((ra, rb))
            self._parent[hi] = lo

    def resolve(self, atoms: frozenset[Atom]) -> frozenset[Atom]:
        return frozenset(self.find(a) for a in atoms)


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # error | warning | info
    code: str
    line: int
    col: int
    message: str

    def render(self, path: str = "<input>") -> str:
        return f"{path}:{self.line}:{self.col}: {self.severity}: {self.message} [{self.code}]"


@dataclass(frozen=True)
class RevealSite:
    line: int
    col: int
    source_owners: tuple[str, ...]
    target: Owner


@dataclass(frozen=True)
class AssignCheck:
    """Record of one assignment decision, for audits and tests."""

    line: int
    col: int
    target_text: str
    lhs_owners: tuple[str, ...]
    rhs_owners: tuple[str, ...]
    accepted: bool
    rule: str  # public | same-owner | private-branch | operand-mix | rejected


@dataclass
class CheckedFunction:
    decl: FunctionDecl
    kind: str = PUT
    owner_set: tuple[str, ...] = ()
    reads: tuple[str, ...] = ()
    mutates: tuple[str, ...] = ()
    reveal_sites: tuple[RevealSite, ...] = ()
    assign_checks: tuple[AssignCheck, ...] = ()
    expr_owners: dict = field(default_factory=dict)
    tag_groups: dict = field(default_factory=dict)


@dataclass
class CheckedContract:
    contract: Contract
    functions: dict[str, CheckedFunction]
    diagnostics: list[Diagnostic]

    @property
    def errors(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.severity == "error"]

    @property
    def ok(self) -> bool:
        return not self.errors

    def kind_of(self, name: str) -> str:
        return self.functions[name].kind


class _Scope:
    """Name environment for one function, layered over contract state."""

    def __init__(self, state: dict[str, AnnotatedType], final_names: set[str]):
        self.state = state
        self.final_names = final_names
        self.local: dict[str, AnnotatedType] = {}

    def lookup(self, name: str) -> tuple[AnnotatedType, str] | None:
        if name in self.local:
            return self.local[name], "local"
        if name in self.state:
            return self.state[name], "state"
        return None


class _FunctionChecker:
    def __init__(self, owner: "_ContractChecker", fn: FunctionDecl):
        self.c = owner
        self.fn = fn
        self.scope = _Scope(owner.state_types, owner.final_names)
        self.union = OwnerUnion()
        self.collected: list[Atom] = []
        self.has_public_expr = False
        self.reads: set[str] = set()
        self.mutates: set[str] = set()
        self.reveal_sites: list[RevealSite] = []
        self.assign_checks: list[AssignCheck] = []
        self.expr_owners: dict = {}
        self.cond_stack: list[frozenset[Atom]] = []
        self.tag_groups: dict[str, dict] = {}

    # -- diagnostics --------------------------------------------------------

    def error(self, code: str, node, message: str) -> None:
        self.c.diag("error", code, node, message)

    def note(self, code: str, node, message: str) -> None:
        self.c.diag("info", code, node, message)

    # -- owner resolution ---------------------------------------------------

    def var_atom(self, name: str, where: str) -> Atom:
        return ("var", where, name)

    def resolve_owner(self, owner: Owner, node, key_subst: Atom | None = None) -> frozenset[Atom]:
        """Turn a syntactic owner into a set of identity atoms."""
        if owner.kind == "all":
            return frozenset()
        if owner.kind == "tee":
            return frozenset({TEE_ATOM})
        if owner.kind == "me":
            return frozenset({CALLER_ATOM})
        name = owner.name or ""
        if key_subst is not None:
            return frozenset({key_subst})
        if name in self.tag_groups:
            return frozenset({("elem", name, "*")})
        found = self.scope.lookup(name)
        if found is None:
            self.error("type", node, f"unknown owner {name!r}")
            return frozenset()
        annotated, where = found
        if annotated.data != ADDRESS:
            self.error("type", node, f"owner {name!r} is not address-typed")
            return frozenset()
        return frozenset({self.var_atom(name, where)})

    def identity(self, expr: Expr) -> Atom:
        """Atom for the address a given address-typed expression holds."""
        if isinstance(expr, MeExpr):
            return CALLER_ATOM
        if isinstance(expr, Ident):
            found = self.scope.lookup(expr.name)
            if found is not None:
                return self.var_atom(expr.name, found[1])
        if isinstance(expr, Index) and isinstance(expr.base, Ident):
            found = self.scope.lookup(expr.base.name)
            if found is not None:
                data = found[0].data
                if isinstance(data, ArrayType) and data.addr_tag is not None:
                    return ("elem", data.addr_tag, expr_text(expr.index))
        return ("expr", expr_text(expr))

    # -- expression typing --------------------------------------------------

    def record(self, expr: Expr, data: DataType, owners: frozenset[Atom]) -> tuple:
        owners = self.union.resolve(owners)
        if owners:
            self.collected.extend(owners)
        else:
            self.has_public_expr = True
        key = (expr.line, expr.col, expr_text(expr))
        self.expr_owners[key] = tuple(sorted(atom_text(a) for a in owners)) or ("all",)
        return data, owners

    def type_expr(self, expr: Expr) -> tuple[DataType, frozenset[Atom]]:
        if isinstance(expr, IntLit):
            if expr.value > UINT_MAX:
                self.error("type", expr, "integer literal exceeds uint256 range")
            return self.record(expr, UINT, frozenset())
        if isinstance(expr, BoolLit):
            return self.record(expr, BOOL, frozenset())
        if isinstance(expr, MeExpr):
            return self.record(expr, ADDRESS, frozenset())
        if isinstance(expr, Ident):
            found = self.scope.lookup(expr.name)
            if found is None:
                self.error("type", expr, f"unknown name {expr.name!r}")
                return self.record(expr, UINT, frozenset())
            annotated, where = found
            if where == "state":
                self.reads.add(expr.name)
            owners = self.resolve_owner(annotated.owner, expr)
            return self.record(expr, annotated.data, owners)
        if isinstance(expr, Index):
            return self.type_index(expr)
        if isinstance(expr, Length):
            base_t, _ = self.type_expr(expr.base)
            if not isinstance(base_t, ArrayType):
                self.error("type", expr, "only arrays have a length")
            return self.record(expr, UINT, frozenset())
        if isinstance(expr, Reveal):
            value_t, value_owners = self.type_expr(expr.value)
            target = self.resolve_owner(expr.target, expr)
            self.reveal_sites.append(
                RevealSite(
                    line=expr.line,
                    col=expr.col,
                    source_owners=tuple(sorted(atom_text(a) for a in value_owners)),
                    target=expr.target,
                )
            )
            return self.record(expr, value_t, target)
        if isinstance(expr, Ternary):
            cond_t, cond_owners = self.type_expr(expr.cond)
            if cond_t != BOOL:
                self.error("type", expr, "condition must be bool")
            then_t, then_o = self.type_expr(expr.then)
            other_t, other_o = self.type_expr(expr.other)
            if then_t != other_t:
                self.error("type", expr, "ternary branches have different types")
            return self.record(expr, then_t, cond_owners | then_o | other_o)
        if isinstance(expr, NativeApply):
            return self.type_native(expr)
        raise TypeError(f"unhandled expression {expr!r}")

    def type_index(self, expr: Index) -> tuple:
        base_t, base_owners = self.type_expr(expr.base)
        index_t, index_owners = self.type_expr(expr.index)
        if isinstance(base_t, MappingType):
            if index_t != base_t.key:
                self.error("type", expr, "mapping index has the wrong key type")
            value = base_t.value
            if base_t.key_tag is not None:
                owners = self.resolve_owner(
                    value.owner, expr, key_subst=self.identity(expr.index)
                )
            else:
                owners = self.resolve_owner(value.owner, expr)
            return self.record(expr, value.data, owners | index_owners)
        if isinstance(base_t, ArrayType):
            if index_t != UINT:
                self.error("type", expr, "array index must be uint256")
            elem = base_t.elem
            if elem.owner.kind == "named" and elem.owner.name in self.tag_groups:
                owners = frozenset({("elem", elem.owner.name, expr_text(expr.index))})
            else:
                owners = self.resolve_owner(elem.owner, expr)
            return self.record(expr, elem.data, owners | index_owners)
        self.error("type", expr, "only arrays and mappings can be indexed")
        return self.record(expr, UINT, frozenset())

    _ARITH = {"+", "-", "*", "/", "%"}
    _COMPARE = {"<", "<=", ">", ">="}
    _EQ = {"==", "!="}
    _LOGIC = {"&&", "||"}

    def type_native(self, expr: NativeApply) -> tuple:
        arg_types = []
        owners: frozenset[Atom] = frozenset()
        for arg in expr.args:
            data, arg_owners = self.type_expr(arg)
            arg_types.append(data)
            owners = owners | arg_owners
        op = expr.op
        if op in ("!",):
            if arg_types[0] != BOOL:
                self.error("type", expr, "'!' needs a bool operand")
            result: DataType = BOOL
        elif op == "neg":
            if arg_types[0] != UINT:
                self.error("type", expr, "negation needs a uint256 operand")
            result = UINT
        elif op in self._ARITH:
            if arg_types[0] != UINT or arg_types[1] != UINT:
                self.error("type", expr, f"'{op}' needs uint256 operands")
            result = UINT
        elif op in self._COMPARE:
            if arg_types[0] != UINT or arg_types[1] != UINT:
                self.error("type", expr, f"'{op}' needs uint256 operands")
            result = BOOL
        elif op in self._EQ:
            if arg_types[0] != arg_types[1] or not isinstance(arg_types[0], PrimType):
                self.error("type", expr, f"'{op}' needs matching primitive operands")
            result = BOOL
        elif op in self._LOGIC:
            if arg_types[0] != BOOL or arg_types[1] != BOOL:
                self.error("type", expr, f"'{op}' needs bool operands")
            result = BOOL
        else:
            self.error("type", expr, f"unknown operator {op!r}")
            result = UINT
        resolved = self.union.resolve(owners)
        if len(resolved - {TEE_ATOM}) > 1:
            self.note(
                "mixed-op",
                expr,
                f"'{op}' combines data of several owners; the enclave computes it",
            )
        return self.record(expr, result, owners)

    # -- statements ---------------------------------------------------------

    def check_block(self, stmts: tuple[Stmt, ...]) -> None:
        for stmt in stmts:
            self.check_stmt(stmt)

    def check_stmt(self, stmt: Stmt) -> None:
        if isinstance(stmt, Decl):
            self.check_decl(stmt)
        elif isinstance(stmt, Assign):
            self.check_assign(stmt)
        elif isinstance(stmt, Require):
            cond_t, _ = self.type_expr(stmt.cond)
            if cond_t != BOOL:
                self.error("type", stmt, "require needs a bool condition")
            self.apply_equality_merge(stmt.cond)
        elif isinstance(stmt, If):
            cond_t, cond_owners = self.type_expr(stmt.cond)
            if cond_t != BOOL:
                self.error("type", stmt, "if needs a bool condition")
            self.cond_stack.append(cond_owners)
            self.check_block(stmt.then)
            self.check_block(stmt.other)
            self.cond_stack.pop()
        elif isinstance(stmt, While):
            cond_t, cond_owners = self.type_expr(stmt.cond)
            if cond_t != BOOL:
                self.error("type", stmt, "while needs a bool condition")
            self.cond_stack.append(cond_owners)
            self.check_block(stmt.body)
            self.cond_stack.pop()
        elif isinstance(stmt, Return):
            self.check_return(stmt)
        else:
            raise TypeError(f"unhandled statement {stmt!r}")

    def check_decl(self, stmt: Decl) -> None:
        if isinstance(stmt.annotated.data, MappingType):
            self.error("type", stmt, "mappings can only be state variables")
            return
        self.resolve_owner(stmt.annotated.owner, stmt)
        existing = self.scope.local.get(stmt.name)
        if existing is not None:
            if existing != stmt.annotated:
                self.error("type", stmt, f"{stmt.name!r} already declared with another type")
            return
        if stmt.name in self.scope.state:
            self.note("shadow", stmt, f"local {stmt.name!r} shadows a state variable")
        self.scope.local[stmt.name] = stmt.annotated

    def check_assign(self, stmt: Assign) -> None:
        target = stmt.target
        root = _root_name(target)
        if root is not None:
            found = self.scope.lookup(root)
            if found is not None and found[1] == "state":
                if root in self.scope.final_names:
                    self.error("type", stmt, f"cannot assign to final state variable {root!r}")
                self.mutates.add(root)
        lhs_t, lhs_owners = self.type_expr(target)
        rhs_t, rhs_owners = self.type_expr(stmt.value)
        if isinstance(lhs_t, (MappingType, ArrayType)) or isinstance(rhs_t, (MappingType, ArrayType)):
            if not (isinstance(lhs_t, ArrayType) and lhs_t == rhs_t):
                self.error("type", stmt, "containers cannot be assigned as a whole")
                return
        elif lhs_t != rhs_t:
            self.error("type", stmt, f"cannot assign {rhs_t} to {lhs_t}")
        self.check_flow(stmt, lhs_owners, rhs_owners)
        self.apply_final_copy_merge(stmt)

    def check_flow(self, stmt: Assign, lhs_owners: frozenset, rhs_owners: frozenset) -> None:
        """Apply the ownership assignment rule and record the decision."""
        lhs = self.union.resolve(lhs_owners)
        rhs = self.union.resolve(rhs_owners)
        rule = None
        if not rhs:
            rule = "public"
        elif rhs == lhs:
            rule = "same-owner"
        elif any(self.union.resolve(c) for c in self.cond_stack):
            rule = "private-branch"
            self.note(
                "implicit-flow",
                stmt,
                "assignment under a condition over private data; owners mix inside the enclave",
            )
        elif isinstance(stmt.value, NativeApply) and lhs <= rhs:
            rule = "operand-mix"
            self.note(
                "implicit-flow",
                stmt,
                "assigned expression combines the target owner's data with others",
            )
        accepted = rule is not None
        if not accepted:
            rule = "rejected"
            self.error(
                "privacy",
                stmt,
                "assignment would move private data to a different owner; use reveal",
            )
        self.assign_checks.append(
            AssignCheck(
                line=stmt.line,
                col=stmt.col,
                target_text=expr_text(stmt.target),
                lhs_owners=tuple(sorted(atom_text(a) for a in lhs)),
                rhs_owners=tuple(sorted(atom_text(a) for a in rhs)),
                accepted=accepted,
                rule=rule,
            )
        )

    def check_return(self, stmt: Return) -> None:
        returns = self.fn.returns
        if len(stmt.values) != len(returns):
            self.error(
                "type",
                stmt,
                f"return gives {len(stmt.values)} values, function declares {len(returns)}",
            )
            for value in stmt.values:
                self.type_expr(value)
            return
        for value, ret in zip(stmt.values, returns):
            value_t, value_owners = self.type_expr(value)
            if value_t != ret.annotated.data:
                self.error("type", stmt, f"return value type {value_t} does not match {ret.name!r}")
            target = Ident(name=ret.name, line=stmt.line, col=stmt.col)
            lhs_owners = self.resolve_owner(ret.annotated.owner, stmt)
            self.check_flow(
                Assign(target=target, value=value, line=stmt.line, col=stmt.col),
                lhs_owners,
                value_owners,
            )

    # -- merge sources ------------------------------------------------------

    def apply_equality_merge(self, cond: Expr) -> None:
        """require(a == b) over addresses proves the identities equal."""
        if isinstance(cond, NativeApply) and cond.op == "&&":
            self.apply_equality_merge(cond.args[0])
            self.apply_equality_merge(cond.args[1])
            return
        if not (isinstance(cond, NativeApply) and cond.op == "=="):
            return
        lhs, rhs = cond.args
        if self.static_type(lhs) == ADDRESS and self.static_type(rhs) == ADDRESS:
            self.union.union(self.identity(lhs), self.identity(rhs))

    def apply_final_copy_merge(self, stmt: Assign) -> None:
        """Copying a final address state variable carries its identity."""
        if not isinstance(stmt.target, Ident):
            return
        if self.static_type(stmt.target) != ADDRESS or self.static_type(stmt.value) != ADDRESS:
            return
        for side in (stmt.target, stmt.value):
            if isinstance(side, Ident):
                found = self.scope.lookup(side.name)
                if found and found[1] == "state" and side.name in self.scope.final_names:
                    self.union.union(self.identity(stmt.target), self.identity(stmt.value))
                    return

    def static_type(self, expr: Expr) -> DataType | None:
        """Best-effort data type without emitting diagnostics."""
        if isinstance(expr, MeExpr):
            return ADDRESS
        if isinstance(expr, Ident):
            found = self.scope.lookup(expr.name)
            return found[0].data if found else None
        if isinstance(expr, Index):
            base = self.static_type(expr.base)
            if isinstance(base, MappingType):
                return base.value.data
            if isinstance(base, ArrayType):
                return base.elem.data
        return None

    # -- driver -------------------------------------------------------------

    def run(self) -> CheckedFunction:
        self.collect_tags()
        for param in list(self.fn.params) + list(self.fn.returns):
            if param.name in self.scope.local:
                self.error("type", param, f"duplicate parameter name {param.name!r}")
                continue
            if isinstance(param.annotated.data, MappingType):
                self.error("type", param, "mappings cannot be parameters")
            if param.name in self.scope.state:
                self.note("shadow", param, f"parameter {param.name!r} shadows a state variable")
            self.scope.local[param.name] = param.annotated
            owners = self.declared_owners(param.annotated, param)
            if owners:
                self.collected.extend(owners)
            else:
                self.has_public_expr = True
        self.check_block(self.fn.body)
        return self.finish()

    def collect_tags(self) -> None:
        for param in self.fn.params:
            data = param.annotated.data
            if isinstance(data, ArrayType) and data.addr_tag is not None:
                tag = data.addr_tag
                if tag in self.tag_groups:
                    self.error("type", param, f"tag {tag!r} declared twice")
                    continue
                self.tag_groups[tag] = {"addr_array": param.name, "data_arrays": []}
        for param in self.fn.params:
            data = param.annotated.data
            if (
                isinstance(data, ArrayType)
                and data.addr_tag is None
                and data.elem.owner.kind == "named"
            ):
                tag = data.elem.owner.name
                if tag in self.tag_groups:
                    self.tag_groups[tag]["data_arrays"].append(param.name)
                elif self.scope.lookup(tag or "") is None:
                    self.error(
                        "type",
                        param,
                        f"array owner tag {tag!r} has no matching address array",
                    )

    def declared_owners(self, annotated: AnnotatedType, node) -> frozenset[Atom]:
        """Owner atoms contributed by a declared parameter or return type."""
        data = annotated.data
        if isinstance(data, ArrayType) and data.addr_tag is None:
            elem_owner = data.elem.owner
            if elem_owner.kind == "named" and elem_owner.name in self.tag_groups:
                return frozenset({("elem", elem_owner.name, "*")})
            return self.resolve_owner(elem_owner, node)
        return self.resolve_owner(annotated.owner, node)

    def finish(self) -> CheckedFunction:
        final_atoms = {self.union.find(a) for a in self.collected}
        owner_set = set()
        if self.has_public_expr:
            owner_set.add("all")
        owner_set.update(atom_text(a) for a in final_atoms)
        private = {a for a in final_atoms if a != TEE_ATOM}
        has_family = any(a[0] == "elem" for a in private)
        if TEE_ATOM in final_atoms or has_family or len(private) >= 2:
            kind = MPT
        elif len(private) == 1:
            kind = PRT
        else:
            kind = PUT
        return CheckedFunction(
            decl=self.fn,
            kind=kind,
            owner_set=tuple(sorted(owner_set)),
            reads=tuple(sorted(self.reads)),
            mutates=tuple(sorted(self.mutates)),
            reveal_sites=tuple(self.reveal_sites),
            assign_checks=tuple(self.assign_checks),
            expr_owners=self.expr_owners,
            tag_groups=self.tag_groups,
        )


def _root_name(expr: Expr) -> str | None:
    while isinstance(expr, Index):
        expr = expr.base
    return expr.name if isinstance(expr, Ident) else None


class _ContractChecker:
    def __init__(self, contract: Contract):
        self.contract = contract
        self.diagnostics: list[Diagnostic] = []
        self.state_types: dict[str, AnnotatedType] = {}
        self.final_names: set[str] = set()

    def diag(self, severity: str, code: str, node, message: str) -> None:
        line = getattr(node, "line", 0)
        col = getattr(node, "col", 0)
        self.diagnostics.append(Diagnostic(severity, code, line, col, message))

    def run(self) -> CheckedContract:
        for var in self.contract.state_vars:
            if var.name in self.state_types:
                self.diag("error", "type", var, f"duplicate state variable {var.name!r}")
                continue
            self.validate_state_type(var)
            self.state_types[var.name] = var.annotated
            if var.is_final:
                self.final_names.add(var.name)
        functions: dict[str, CheckedFunction] = {}
        seen: set[str] = set()
        for fn in self.contract.functions:
            if fn.name in seen:
                self.diag("error", "type", fn, f"duplicate function {fn.name!r}")
                continue
            seen.add(fn.name)
            checker = _FunctionChecker(self, fn)
            functions[fn.name] = checker.run()
        return CheckedContract(
            contract=self.contract, functions=functions, diagnostics=self.diagnostics
        )

    def validate_state_type(self, var) -> None:
        data = var.annotated.data
        if isinstance(data, MappingType):
            if data.key_tag is None and data.value.owner.kind == "named":
                name = data.value.owner.name
                target = self.state_types.get(name or "")
                if target is None or target.data != ADDRESS:
                    self.diag(
                        "error",
                        "type",
                        var,
                        f"mapping value owner {name!r} must be an address state variable",
                    )
        if isinstance(data, ArrayType) and data.addr_tag is not None:
            self.diag("error", "type", var, "tagged address arrays are parameter-only")
        owner = var.annotated.owner
        if owner.kind == "named":
            target = self.state_types.get(owner.name or "")
            if target is None or target.data != ADDRESS:
                self.diag(
                    "error",
                    "type",
                    var,
                    f"owner {owner.name!r} must be an address state variable declared earlier",
                )
            elif owner.name not in self.final_names:
                self.diag(
                    "error",
                    "type",
                    var,
                    f"owner {owner.name!r} must be final to own state",
                )
        if owner.kind == "me":
            self.diag("error", "type", var, "state variables cannot be owned by 'me'")


def check_contract(contract: Contract) -> CheckedContract:
    """Check a parsed contract; problems land in ``diagnostics``."""
    return _ContractChecker(contract).run()
