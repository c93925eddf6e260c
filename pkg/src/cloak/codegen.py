"""Artifact generation from a checked contract.

Three artifacts come out of a successful check:

* the privacy policy: per-variable ownership plus, for every function,
  its classification, parameter/read/mutate/return sets and declared
  declassification points;
* the private contract: the same program with every ownership annotation
  erased and every chain-executable (fully public) function removed,
  which is the code the enclave runs and whose hash the chain pins;
* the verifier descriptor: code hash, policy hash, enclave address and
  the state layout the on-chain verifier uses to order state cells.

Hashes are taken over canonical JSON, so formatting never shifts them.
"""

from __future__ import annotations

from dataclasses import dataclass

from .cryptobox import hash_json
from .errors import CheckError
from .lang.nodes import (
    AnnotatedType,
    ArrayType,
    Contract,
    FunctionDecl,
    MappingType,
    OWNER_ALL,
    Param,
    StateVar,
)
from .lang.parser import parse_contract
from .lang.printer import print_contract
from .typecheck import PUT, CheckedContract, check_contract


def generate_policy(checked: CheckedContract) -> dict:
    """Build the JSON-shaped privacy policy for a checked contract."""
    contract = checked.contract
    states = [
        {"id": var.name, "type": var.annotated.to_dict(), "final": var.is_final}
        for var in contract.state_vars
    ]
    state_types = {var.name: var.annotated for var in contract.state_vars}
    functions = []
    for fn in contract.functions:
        info = checked.functions[fn.name]
        functions.append(
            {
                "id": fn.name,
                "kind": info.kind,
                "params": [
                    {"id": p.name, "type": p.annotated.to_dict()} for p in fn.params
                ],
                "reads": [
                    {"id": name, "type": state_types[name].to_dict()}
                    for name in info.reads
                ],
                "mutates": [
                    {"id": name, "type": state_types[name].to_dict()}
                    for name in info.mutates
                ],
                "returns": [
                    {"id": r.name, "type": r.annotated.to_dict()} for r in fn.returns
                ],
                "declassifications": [
                    {
                        "line": site.line,
                        "col": site.col,
                        "target": site.target.to_dict(),
                    }
                    for site in info.reveal_sites
                ],
            }
        )
    return {"contract": contract.name, "states": states, "functions": functions}


def _erase(annotated: AnnotatedType) -> AnnotatedType:
    data = annotated.data
    if isinstance(data, MappingType):
        data = MappingType(key=data.key, value=_erase(data.value), key_tag=None)
    elif isinstance(data, ArrayType):
        data = ArrayType(elem=_erase(data.elem), addr_tag=None)
    return AnnotatedType(data=data, owner=OWNER_ALL)


def generate_private_contract(contract: Contract, kinds: dict[str, str]) -> Contract:
    """Erase annotations and drop the functions classified fully public.

    ``kinds`` is consulted by name, so applying the transform to its own
    output (with the same table) changes nothing.
    """
    state_vars = tuple(
        StateVar(
            annotated=_erase(var.annotated),
            name=var.name,
            is_final=var.is_final,
            line=var.line,
            col=var.col,
        )
        for var in contract.state_vars
    )
    functions = []
    for fn in contract.functions:
        if kinds.get(fn.name) == PUT:
            continue
        functions.append(
            FunctionDecl(
                name=fn.name,
                params=tuple(_erase_param(p) for p in fn.params),
                returns=tuple(_erase_param(r) for r in fn.returns),
                body=fn.body,
                line=fn.line,
                col=fn.col,
            )
        )
    return Contract(
        name=contract.name,
        state_vars=state_vars,
        functions=tuple(functions),
        line=contract.line,
        col=contract.col,
    )


def _erase_param(param: Param) -> Param:
    return Param(
        annotated=_erase(param.annotated), name=param.name, line=param.line, col=param.col
    )


def generate_state_layout(contract: Contract) -> list[dict]:
    """Ordered cell layout: one entry per scalar, one family per container."""
    layout = []
    for var in contract.state_vars:
        if isinstance(var.annotated.data, MappingType):
            kind = "mapping"
        elif isinstance(var.annotated.data, ArrayType):
            kind = "array"
        else:
            kind = "scalar"
        layout.append({"id": var.name, "kind": kind, "type": var.annotated.to_dict()})
    return layout


@dataclass(frozen=True)
class CompiledContract:
    """Everything the toolchain derives from one source file."""

    source_path: str
    checked: CheckedContract
    policy: dict
    private_ast: Contract
    private_source: str
    state_layout: list
    code_hash: str
    policy_hash: str

    @property
    def contract(self) -> Contract:
        return self.checked.contract

    def verifier_descriptor(self, enclave_addr: str) -> dict:
        return {
            "h_f": self.code_hash,
            "h_p": self.policy_hash,
            "adr_e": enclave_addr,
            "state_layout": self.state_layout,
        }


def compile_source(source: str, path: str = "<input>") -> CompiledContract:
    """Parse, check and lower a contract; raises CheckError on any error."""
    contract = parse_contract(source, path)
    checked = check_contract(contract)
    if not checked.ok:
        first = checked.errors[0]
        raise CheckError(first.message, first.line, first.col, path)
    kinds = {name: fn.kind for name, fn in checked.functions.items()}
    policy = generate_policy(checked)
    private_ast = generate_private_contract(contract, kinds)
    return CompiledContract(
        source_path=path,
        checked=checked,
        policy=policy,
        private_ast=private_ast,
        private_source=print_contract(private_ast),
        state_layout=generate_state_layout(contract),
        code_hash=hash_json(private_ast.to_dict()),
        policy_hash=hash_json(policy),
    )
