"""Deterministic execution of contract functions over a cell store.

Arithmetic is checked uint256: overflow, underflow, and division by zero
abort execution, as does a failed ``require``.  Aborts leave the caller's
state untouched because execution always works on a copy.  A step budget
bounds loops so a runaway program aborts instead of hanging the enclave.

The second half of the module splits a finished execution's outputs into
per-owner slices: every mutated state cell and every return value is
routed to its policy owner, resolved against the runtime values of the
owner variables.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .errors import ExecAbort, PolicyError
from .lang.nodes import (
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
    Owner,
    PrimType,
    Require,
    Return,
    Reveal,
    Stmt,
    Ternary,
    While,
)

UINT_MAX = 2**256 - 1
STEP_BUDGET = 1_000_000

ZERO_ADDRESS = "00" * 20

Value = Any  # int | bool | str (address/bin hex) | list


def default_value(data: DataType) -> Value:
    if isinstance(data, PrimType):
        if data.name == "uint256":
            return 0
        if data.name == "bool":
            return False
        if data.name == "address":
            return ZERO_ADDRESS
        if data.name == "bin":
            return ""
        raise TypeError(f"no default for {data}")
    if isinstance(data, ArrayType):
        return []
    raise TypeError(f"no default for {data}")


def key_text(value: Value) -> str:
    """Canonical text for a mapping key, used inside cell identifiers."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return value
    raise TypeError(f"bad mapping key {value!r}")


def cell_id(var: str, key: Value | None = None) -> str:
    return var if key is None else f"{var}[{key_text(key)}]"


def split_cell_id(cell: str) -> tuple[str, str | None]:
    if cell.endswith("]") and "[" in cell:
        var, _, rest = cell.partition("[")
        return var, rest[:-1]
    return cell, None


class StateStore:
    """Flat map from cell identifiers to values.

    Scalar state variables use their own name as cell id, container
    entries use ``name[key]``.  Reads of absent cells yield the type's
    default without materializing it; every access is recorded.
    """

    def __init__(self, types: dict[str, AnnotatedType], cells: dict[str, Value] | None = None):
        self.types = types
        self.cells: dict[str, Value] = dict(cells or {})
        self.reads: set[str] = set()
        self.writes: set[str] = set()

    def copy(self) -> "StateStore":
        return StateStore(self.types, self.cells)

    def _value_type(self, var: str) -> DataType:
        annotated = self.types[var]
        data = annotated.data
        if isinstance(data, MappingType):
            return data.value.data
        if isinstance(data, ArrayType):
            return data.elem.data
        return data

    def read(self, var: str, key: Value | None = None) -> Value:
        cid = cell_id(var, key)
        self.reads.add(cid)
        if cid in self.cells:
            return self.cells[cid]
        return default_value(self._value_type(var) if key is not None else self.types[var].data)

    def write(self, var: str, value: Value, key: Value | None = None) -> None:
        cid = cell_id(var, key)
        self.writes.add(cid)
        self.cells[cid] = value


@dataclass
class ExecResult:
    state: StateStore
    returns: dict[str, Value]
    frame: dict[str, Value]
    frame_types: dict[str, AnnotatedType]
    reads: set[str] = field(default_factory=set)
    writes: set[str] = field(default_factory=set)


class _ReturnSignal(Exception):
    pass


class _Executor:
    def __init__(self, contract: Contract, fn: FunctionDecl, state: StateStore, caller: str,
                 step_budget: int):
        self.contract = contract
        self.fn = fn
        self.state = state
        self.caller = caller
        self.frame: dict[str, Value] = {}
        self.frame_types: dict[str, AnnotatedType] = {}
        self.budget = step_budget

    def spend(self) -> None:
        self.budget -= 1
        if self.budget < 0:
            raise ExecAbort(ExecAbort.STEP_BUDGET, f"exceeded {STEP_BUDGET} steps")

    # -- expressions --------------------------------------------------------

    def eval(self, expr: Expr) -> Value:
        if isinstance(expr, IntLit):
            return expr.value
        if isinstance(expr, BoolLit):
            return expr.value
        if isinstance(expr, MeExpr):
            return self.caller
        if isinstance(expr, Ident):
            if expr.name in self.frame:
                return self.frame[expr.name]
            if expr.name in self.state.types:
                return self.state.read(expr.name)
            raise ExecAbort(ExecAbort.TYPE_MISMATCH, f"unknown name {expr.name!r}")
        if isinstance(expr, Index):
            return self.eval_index(expr)
        if isinstance(expr, Length):
            base = self.eval(expr.base)
            if not isinstance(base, list):
                raise ExecAbort(ExecAbort.TYPE_MISMATCH, "length of a non-array")
            return len(base)
        if isinstance(expr, Reveal):
            return self.eval(expr.value)
        if isinstance(expr, Ternary):
            return self.eval(expr.then) if self.require_bool(expr.cond) else self.eval(expr.other)
        if isinstance(expr, NativeApply):
            return self.eval_native(expr)
        raise ExecAbort(ExecAbort.TYPE_MISMATCH, f"cannot evaluate {expr!r}")

    def eval_index(self, expr: Index) -> Value:
        if self.is_mapping(expr.base):
            var = expr.base.name  # checker guarantees mappings are bare state names
            return self.state.read(var, self.eval(expr.index))
        base = self.eval(expr.base)
        index = self.eval(expr.index)
        if not isinstance(base, list) or isinstance(index, bool) or not isinstance(index, int):
            raise ExecAbort(ExecAbort.TYPE_MISMATCH, "bad array indexing")
        if not 0 <= index < len(base):
            raise ExecAbort(ExecAbort.TYPE_MISMATCH, f"index {index} out of bounds")
        return base[index]

    def is_mapping(self, expr: Expr) -> bool:
        if not isinstance(expr, Ident):
            return False
        if expr.name in self.frame:
            return False
        annotated = self.state.types.get(expr.name)
        return annotated is not None and isinstance(annotated.data, MappingType)

    def require_bool(self, expr: Expr) -> bool:
        value = self.eval(expr)
        if not isinstance(value, bool):
            raise ExecAbort(ExecAbort.TYPE_MISMATCH, "condition is not a bool")
        return value

    def eval_native(self, expr: NativeApply) -> Value:
        op = expr.op
        if op == "&&":
            return self.require_bool(expr.args[0]) and self.require_bool(expr.args[1])
        if op == "||":
            return self.require_bool(expr.args[0]) or self.require_bool(expr.args[1])
        if op == "!":
            return not self.require_bool(expr.args[0])
        args = [self.eval(a) for a in expr.args]
        if op == "neg":
            return self.checked(0 - args[0])
        if op in ("==", "!="):
            equal = args[0] == args[1]
            return equal if op == "==" else not equal
        a, b = args
        if isinstance(a, bool) or isinstance(b, bool) or not (
            isinstance(a, int) and isinstance(b, int)
        ):
            raise ExecAbort(ExecAbort.TYPE_MISMATCH, f"'{op}' needs uint256 operands")
        if op == "<":
            return a < b
        if op == "<=":
            return a <= b
        if op == ">":
            return a > b
        if op == ">=":
            return a >= b
        if op == "+":
            return self.checked(a + b)
        if op == "-":
            return self.checked(a - b)
        if op == "*":
            return self.checked(a * b)
        if op == "/":
            if b == 0:
                raise ExecAbort(ExecAbort.OVERFLOW, "division by zero")
            return a // b
        if op == "%":
            if b == 0:
                raise ExecAbort(ExecAbort.OVERFLOW, "modulo by zero")
            return a % b
        raise ExecAbort(ExecAbort.TYPE_MISMATCH, f"unknown operator {op!r}")

    @staticmethod
    def checked(value: int) -> int:
        if not 0 <= value <= UINT_MAX:
            raise ExecAbort(ExecAbort.OVERFLOW, "uint256 out of range")
        return value

    # -- statements ---------------------------------------------------------

    def run_block(self, stmts: tuple[Stmt, ...]) -> None:
        for stmt in stmts:
            self.run_stmt(stmt)

    def run_stmt(self, stmt: Stmt) -> None:
        self.spend()
        if isinstance(stmt, Decl):
            self.frame[stmt.name] = default_value(stmt.annotated.data)
            self.frame_types[stmt.name] = stmt.annotated
        elif isinstance(stmt, Assign):
            self.assign(stmt.target, self.eval(stmt.value))
        elif isinstance(stmt, Require):
            if not self.require_bool(stmt.cond):
                raise ExecAbort(ExecAbort.REQUIRE_FAILED, "require(false)")
        elif isinstance(stmt, If):
            if self.require_bool(stmt.cond):
                self.run_block(stmt.then)
            else:
                self.run_block(stmt.other)
        elif isinstance(stmt, While):
            while self.require_bool(stmt.cond):
                self.spend()
                self.run_block(stmt.body)
        elif isinstance(stmt, Return):
            values = [self.eval(v) for v in stmt.values]
            for value, ret in zip(values, self.fn.returns):
                self.frame[ret.name] = value
            raise _ReturnSignal()
        else:
            raise ExecAbort(ExecAbort.TYPE_MISMATCH, f"cannot execute {stmt!r}")

    def assign(self, target: Expr, value: Value) -> None:
        if isinstance(target, Ident):
            if target.name in self.frame:
                self.frame[target.name] = value
            elif target.name in self.state.types:
                self.state.write(target.name, value)
            else:
                raise ExecAbort(ExecAbort.TYPE_MISMATCH, f"unknown target {target.name!r}")
            return
        if isinstance(target, Index):
            if self.is_mapping(target.base):
                self.state.write(target.base.name, value, key=self.eval(target.index))
                return
            base = self.eval(target.base)
            index = self.eval(target.index)
            if not isinstance(base, list) or isinstance(index, bool) or not isinstance(index, int):
                raise ExecAbort(ExecAbort.TYPE_MISMATCH, "bad array assignment")
            if not 0 <= index < len(base):
                raise ExecAbort(ExecAbort.TYPE_MISMATCH, f"index {index} out of bounds")
            base[index] = value
            return
        raise ExecAbort(ExecAbort.TYPE_MISMATCH, "assignment target is not a location")


def exec_function(
    contract: Contract,
    fn_name: str,
    params: dict[str, Value],
    state: StateStore,
    caller: str,
    step_budget: int = STEP_BUDGET,
) -> ExecResult:
    """Run one function call; aborts raise and leave ``state`` unchanged."""
    fn = contract.function(fn_name)
    work = state.copy()
    runner = _Executor(contract, fn, work, caller, step_budget)
    for param in fn.params:
        if param.name not in params:
            raise ExecAbort(ExecAbort.TYPE_MISMATCH, f"missing parameter {param.name!r}")
        value = params[param.name]
        runner.frame[param.name] = list(value) if isinstance(value, list) else value
        runner.frame_types[param.name] = param.annotated
    for ret in fn.returns:
        runner.frame[ret.name] = default_value(ret.annotated.data)
        runner.frame_types[ret.name] = ret.annotated
    try:
        runner.run_block(fn.body)
    except _ReturnSignal:
        pass
    returns = {ret.name: runner.frame[ret.name] for ret in fn.returns}
    return ExecResult(
        state=work, returns=returns, frame=dict(runner.frame),
        frame_types=dict(runner.frame_types),
        reads=set(work.reads), writes=set(work.writes),
    )


# ---------------------------------------------------------------------------
# Output partitioning


PUBLIC_SLICE = "public"
TEE_SLICE = "tee"


def build_runtime_owners(result: ExecResult, caller: str) -> dict[str, str]:
    """Map owner names to concrete addresses after an execution.

    Owner annotations name address variables; their runtime values are in
    the call frame (parameters, returns, locals) or in state scalars.
    """
    owners: dict[str, str] = {"me": caller}
    for name, value in result.frame.items():
        annotated = result.frame_types.get(name)
        if annotated is not None and annotated.data == PrimType("address"):
            owners[name] = value
    for var, annotated in result.state.types.items():
        if annotated.data == PrimType("address") and var not in result.frame:
            owners[var] = result.state.read(var)
    return owners


def _owner_address(owner: Owner, runtime_owners: dict[str, str]) -> str:
    """Resolve an owner annotation to an address, public, or tee marker."""
    if owner.kind == "all":
        return PUBLIC_SLICE
    if owner.kind == "tee":
        return TEE_SLICE
    if owner.kind == "me":
        addr = runtime_owners.get("me")
    else:
        addr = runtime_owners.get(owner.name or "")
    if addr is None or addr == ZERO_ADDRESS:
        raise PolicyError(f"owner {owner} does not resolve to a usable address")
    return addr


def cell_owner(
    cell: str, state_types: dict[str, AnnotatedType], runtime_owners: dict[str, str]
) -> str:
    """Owner address (or slice marker) for one state cell."""
    var, key = split_cell_id(cell)
    annotated = state_types.get(var)
    if annotated is None:
        raise PolicyError(f"cell {cell!r} has no declared variable")
    data = annotated.data
    if isinstance(data, MappingType):
        if data.key_tag is not None and data.value.owner == Owner("named", data.key_tag):
            if key is None or len(key) != 40:
                raise PolicyError(f"cell {cell!r} lacks an address key")
            return key
        return _owner_address(data.value.owner, runtime_owners)
    if isinstance(data, ArrayType):
        return _owner_address(data.elem.owner, runtime_owners)
    return _owner_address(annotated.owner, runtime_owners)


@dataclass
class OutputPartition:
    """Execution outputs split by recipient.

    ``public`` is readable by everyone, ``tee`` never leaves the enclave,
    and ``private`` maps each owner address to its state and return slices.
    """

    public: dict = field(default_factory=lambda: {"state": {}, "returns": {}})
    tee: dict = field(default_factory=lambda: {"state": {}, "returns": {}})
    private: dict = field(default_factory=dict)

    def slice_for(self, addr: str) -> dict:
        if addr == PUBLIC_SLICE:
            return self.public
        if addr == TEE_SLICE:
            return self.tee
        return self.private.setdefault(addr, {"state": {}, "returns": {}})


def partition_outputs(
    fn: FunctionDecl,
    state_types: dict[str, AnnotatedType],
    result_state: StateStore,
    mutated_cells: set[str],
    returns: dict[str, Value],
    runtime_owners: dict[str, str],
) -> OutputPartition:
    """Route mutated state cells and returns to their runtime owners."""
    partition = OutputPartition()
    for cell in sorted(mutated_cells):
        owner = cell_owner(cell, state_types, runtime_owners)
        var, key = split_cell_id(cell)
        value = result_state.read(var) if key is None else result_state.cells[cell]
        partition.slice_for(owner)["state"][cell] = value
    for ret in fn.returns:
        owner = _owner_address(ret.annotated.owner, runtime_owners)
        partition.slice_for(owner)["returns"][ret.name] = returns[ret.name]
    return partition
