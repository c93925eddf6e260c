"""Single-node blockchain simulation hosting the coordination service.

The chain mines one block per call, executing queued transactions in
arrival order.  A built-in service holds registered public keys and
collateral, tracks multi-party transaction proposals through the
``SETTLE -> COMPLETE | ABORT | TIMEOUT`` lifecycle, and redistributes the
escrowed pool exactly on every terminal transition.  Contract state lives
in verifier instances: per-cell commitments whose digest the enclave's
completion proof must reproduce.

Publication proofs let the enclave check chain facts without trusting its
host: a hash-linked header path from the last verified checkpoint either
to one included transaction, or (as a full transcript) over a whole block
window.  Forging a competing header chain is out of scope here, matching
a consensus layer assumed immutable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .cryptobox import addr_of_pk, hash_bytes, hash_json, sign, verify_sig
from .encoding import canonical_json, from_hex
from .errors import EnclaveError, Revert

# Transaction kinds.  The names are part of the trace format.
TX_PK = "TX_pk"
TX_COL = "TX_col"
TX_P = "TX_p"
TX_CHA = "TX_cha"
TX_RES = "TX_res"
TX_PNS = "TX_pns"
TX_COM = "TX_com"
TX_OUT = "TX_out"
DEPLOY = "Deploy"

SETTLE = "SETTLE"
COMPLETE = "COMPLETE"
ABORT = "ABORT"
TIMEOUT = "TIMEOUT"

GENESIS_PARENT = "00" * 32


@dataclass(frozen=True)
class Transaction:
    kind: str
    sender: str
    nonce: int
    payload: dict
    signature: str

    def signing_bytes(self) -> bytes:
        return canonical_json(
            {"kind": self.kind, "sender": self.sender, "nonce": self.nonce, "payload": self.payload}
        )

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "sender": self.sender,
            "nonce": self.nonce,
            "payload": self.payload,
            "signature": self.signature,
        }

    @staticmethod
    def from_dict(data: dict) -> "Transaction":
        return Transaction(
            kind=data["kind"],
            sender=data["sender"],
            nonce=data["nonce"],
            payload=data["payload"],
            signature=data["signature"],
        )

    @property
    def id(self) -> str:
        return hash_json(self.to_dict())


def build_tx(kind: str, sk: bytes, sender: str, nonce: int, payload: dict) -> Transaction:
    unsigned = Transaction(kind=kind, sender=sender, nonce=nonce, payload=payload, signature="")
    return Transaction(
        kind=kind,
        sender=sender,
        nonce=nonce,
        payload=payload,
        signature=sign(sk, unsigned.signing_bytes()).hex(),
    )


@dataclass(frozen=True)
class Block:
    height: int
    parent: str
    txs: tuple[Transaction, ...]
    hash: str


def block_hash(parent: str, height: int, tx_ids: list[str]) -> str:
    body = from_hex(parent) + height.to_bytes(8, "big") + b"".join(from_hex(t) for t in tx_ids)
    return hash_bytes(body).hex()


def genesis_hash() -> str:
    """Hash of the empty genesis block; the same for every chain."""
    return block_hash(GENESIS_PARENT, 0, [])


# ---------------------------------------------------------------------------
# Verifier instances


def plain_entry(value: Any) -> dict:
    return {"kind": "plain", "value": value}


def enc_entry(ct_hex: str, owner: str) -> dict:
    return {"kind": "enc", "ct": ct_hex, "owner": owner}


@dataclass
class VerifierInstance:
    """On-chain state commitments for one deployed contract."""

    addr: str
    descriptor: dict
    current: dict[str, dict] = field(default_factory=dict)

    def serialize(self) -> list:
        """State cells as an ordered, canonical ``[cell, entry]`` list."""
        out: list = []
        for item in self.descriptor["state_layout"]:
            name = item["id"]
            if item["kind"] == "scalar":
                if name in self.current:
                    out.append([name, self.current[name]])
            else:
                prefix = name + "["
                for cell in sorted(c for c in self.current if c.startswith(prefix)):
                    out.append([cell, self.current[cell]])
        return out

    def state_digest(self) -> str:
        return hash_json(self.serialize())


def make_verifier(addr: str, descriptor: dict, initial_state: list | None = None) -> VerifierInstance:
    instance = VerifierInstance(addr=addr, descriptor=descriptor)
    for item in descriptor["state_layout"]:
        if item["kind"] == "scalar":
            instance.current[item["id"]] = plain_entry(_default_from_layout(item))
    for cell, value in initial_state or []:
        instance.current[cell] = plain_entry(value)
    return instance


def _default_from_layout(item: dict) -> Any:
    name = item["type"]["data"]["type"]
    defaults = {"uint256": 0, "bool": False, "address": "00" * 20, "bin": ""}
    if name not in defaults:
        raise Revert("BadLayout")
    return defaults[name]


def verifier_verify(
    instance: VerifierInstance, proof: dict, h_cx: list, c_s2: list, c_r: list
) -> bool:
    """Check a completion proof against this verifier's pinned hashes."""
    expected = {
        "code_hash": instance.descriptor["h_f"],
        "policy_hash": instance.descriptor["h_p"],
        "inputs_hash": hash_json(h_cx),
        "old_state_hash": instance.state_digest(),
        "new_state_hash": hash_json(c_s2),
        "returns_hash": hash_json(c_r),
    }
    return proof == expected


def set_new_states(instance: VerifierInstance, c_s2: list, origin: str) -> None:
    if origin != instance.descriptor["adr_e"]:
        raise Revert("BadSender")
    known = {item["id"] for item in instance.descriptor["state_layout"]}
    for cell, entry in c_s2:
        var = cell.split("[", 1)[0]
        if var not in known:
            raise Revert("BadState")
        instance.current[cell] = entry


# ---------------------------------------------------------------------------
# Refund arithmetic


def split_pool(pool: int, share: Fraction, recipients: list[str]) -> dict[str, int]:
    """Credit ``share`` (floored) per recipient; remainder to the first.

    The credited total always equals ``pool`` exactly.
    """
    credits = {addr: int(share) for addr in recipients}
    remainder = pool - sum(credits.values())
    if recipients:
        credits[recipients[0]] += remainder
    elif remainder:
        raise AssertionError("refund pool with no recipients")
    assert sum(credits.values()) == pool
    return credits


def punish_share(collateral: int, n_parties: int, n_malicious: int) -> Fraction:
    return Fraction(collateral) * (1 + Fraction(n_malicious, n_parties - n_malicious + 1))

def timeout_share(collateral: int, n_parties: int) -> Fraction:
    return Fraction(collateral) * (1 + Fraction(1, n_parties))


# ---------------------------------------------------------------------------
# The chain


class Chain:
    """Deterministic one-chain ledger with the coordination service built in."""

    def __init__(self, enclave_pk: bytes, enclave_addr: str, executor_addr: str):
        self.enclave_pk = enclave_pk
        self.enclave_addr = enclave_addr
        self.executor_addr = executor_addr
        genesis = Block(height=0, parent=GENESIS_PARENT, txs=(), hash=block_hash(GENESIS_PARENT, 0, []))
        self.blocks: list[Block] = [genesis]
        self.mempool: list[Transaction] = []
        self.trace: list[dict] = []
        self.tx_status: dict[str, str] = {}
        self.coins: dict[str, int] = {}
        self.registered: dict[str, str] = {}
        self.proposals: dict[str, dict] = {}
        self.verifiers: dict[str, VerifierInstance] = {}
        self.warnings: list[str] = []
        self.coin_history: list[tuple[int, dict[str, int]]] = [(0, {})]

    # -- read side ----------------------------------------------------------

    @property
    def height(self) -> int:
        return self.blocks[-1].height

    @property
    def head_hash(self) -> str:
        return self.blocks[-1].hash

    @property
    def genesis_hash(self) -> str:
        return self.blocks[0].hash

    def proposal(self, id_p: str) -> dict | None:
        return self.proposals.get(id_p)

    def find_txs(self, kind: str | None = None, id_p: str | None = None,
                 status: str | None = "ok") -> list[tuple[int, Transaction]]:
        found = []
        for block in self.blocks:
            for tx in block.txs:
                if kind is not None and tx.kind != kind:
                    continue
                if id_p is not None and tx.payload.get("id_p") != id_p:
                    continue
                if status is not None and self.tx_status.get(tx.id) != status:
                    continue
                found.append((block.height, tx))
        return found

    def registered_pk(self, addr: str) -> bytes | None:
        if addr == self.enclave_addr:
            return self.enclave_pk
        hexpk = self.registered.get(addr)
        return from_hex(hexpk) if hexpk else None

    # -- write side ---------------------------------------------------------

    def submit(self, tx: Transaction) -> str:
        """Queue a transaction; bad signatures are rejected immediately."""
        if tx.kind == TX_PK:
            pk = from_hex(tx.payload.get("pk", ""))
            if addr_of_pk(pk) != tx.sender or not verify_sig(pk, tx.signing_bytes(), from_hex(tx.signature)):
                raise Revert("InvalidSignature")
        else:
            pk = self.registered_pk(tx.sender)
            if pk is None or not verify_sig(pk, tx.signing_bytes(), from_hex(tx.signature)):
                raise Revert("InvalidSignature")
        self.mempool.append(tx)
        return tx.id

    def mine_block(self) -> Block:
        height = self.height + 1
        txs = tuple(self.mempool)
        self.mempool = []
        for tx in txs:
            try:
                self._apply(tx, height)
                status = "ok"
            except Revert as revert:
                status = f"revert:{revert.reason}"
            self.tx_status[tx.id] = status
            self.trace.append(
                {
                    "height": height,
                    "kind": tx.kind,
                    "sender": tx.sender,
                    "status": status,
                    "payload": hash_json(tx.payload),
                }
            )
        block = Block(
            height=height,
            parent=self.head_hash,
            txs=txs,
            hash=block_hash(self.head_hash, height, [t.id for t in txs]),
        )
        self.blocks.append(block)
        self.coin_history.append((height, dict(self.coins)))
        return block

    # -- service operations -------------------------------------------------

    def _apply(self, tx: Transaction, height: int) -> None:
        handlers = {
            TX_PK: self._op_register,
            TX_COL: self._op_deposit,
            DEPLOY: self._op_deploy,
            TX_P: self._op_propose,
            TX_CHA: self._op_challenge,
            TX_RES: self._op_response,
            TX_PNS: self._op_punish,
            TX_COM: self._op_complete,
            TX_OUT: self._op_timeout,
        }
        handler = handlers.get(tx.kind)
        if handler is None:
            raise Revert("UnknownKind")
        handler(tx, height)

    def _op_register(self, tx: Transaction, height: int) -> None:
        if tx.sender in self.registered:
            self.warnings.append(f"re-registering key for {tx.sender}")
        self.registered[tx.sender] = tx.payload["pk"]

    def _op_deposit(self, tx: Transaction, height: int) -> None:
        amount = tx.payload.get("amount")
        if not isinstance(amount, int) or amount <= 0:
            raise Revert("BadAmount")
        self.coins[tx.sender] = self.coins.get(tx.sender, 0) + amount

    def _op_deploy(self, tx: Transaction, height: int) -> None:
        descriptor = tx.payload.get("descriptor")
        if not isinstance(descriptor, dict) or "h_f" not in descriptor:
            raise Revert("BadDescriptor")
        addr = hash_bytes(b"verifier:" + from_hex(tx.id))[-20:].hex()
        self.verifiers[addr] = make_verifier(addr, descriptor, tx.payload.get("initial_state"))

    def _proposal_for(self, tx: Transaction, want_status: str = SETTLE) -> dict:
        record = self.proposals.get(tx.payload.get("id_p", ""))
        if record is None or record["status"] != want_status:
            raise Revert("BadStatus")
        return record

    def _op_propose(self, tx: Transaction, height: int) -> None:
        if tx.sender != self.enclave_addr:
            raise Revert("BadSender")
        p = tx.payload
        id_p = p.get("id_p", "")
        if id_p in self.proposals:
            raise Revert("DuplicateProposal")
        if p.get("adr_v") not in self.verifiers:
            raise Revert("UnknownVerifier")
        parties = list(p.get("parties", []))
        q = p.get("collateral")
        if not parties or not isinstance(q, int) or q <= 0:
            raise Revert("BadProposal")
        if len(p.get("h_cx", [])) != len(parties):
            raise Revert("BadProposal")
        debtors = parties + [self.executor_addr]
        for addr in debtors:
            if self.coins.get(addr, 0) < q:
                raise Revert("InsufficientCollateral")
        for addr in debtors:
            self.coins[addr] -= q
        self.proposals[id_p] = {
            "id_p": id_p,
            "adr_v": p["adr_v"],
            "fn": p.get("fn"),
            "parties": parties,
            "h_cx": list(p["h_cx"]),
            "collateral": q,
            "response_window": p.get("response_window"),
            "complete_window": p.get("complete_window"),
            "h_cp": height,
            "status": SETTLE,
            "challenged": [],
        }

    def _op_challenge(self, tx: Transaction, height: int) -> None:
        if tx.sender != self.enclave_addr:
            raise Revert("BadSender")
        record = self._proposal_for(tx)
        suspects = list(tx.payload.get("suspects", []))
        if not suspects or any(addr not in record["parties"] for addr in suspects):
            raise Revert("BadChallenge")
        record["challenged"] = suspects

    def _op_response(self, tx: Transaction, height: int) -> None:
        record = self._proposal_for(tx)
        if tx.sender not in record["parties"]:
            raise Revert("BadSender")
        if not isinstance(tx.payload.get("blob"), str):
            raise Revert("BadResponse")

    def _op_punish(self, tx: Transaction, height: int) -> None:
        if tx.sender != self.enclave_addr:
            raise Revert("BadSender")
        record = self._proposal_for(tx)
        if height <= record["h_cp"] + record["response_window"]:
            raise Revert("TooEarly")
        malicious = list(tx.payload.get("malicious", []))
        if any(addr not in record["parties"] for addr in malicious):
            raise Revert("BadPunish")
        parties = record["parties"]
        q = record["collateral"]
        honest = [addr for addr in parties if addr not in malicious]
        recipients = honest + [self.executor_addr]
        share = punish_share(q, len(parties), len(malicious))
        for addr, credit in split_pool(q * (len(parties) + 1), share, recipients).items():
            self.coins[addr] = self.coins.get(addr, 0) + credit
        record["status"] = ABORT
        record["malicious"] = malicious
        record["refund_share"] = str(share)

    def _op_complete(self, tx: Transaction, height: int) -> None:
        if tx.sender != self.enclave_addr:
            raise Revert("BadSender")
        record = self._proposal_for(tx)
        instance = self.verifiers[record["adr_v"]]
        payload = tx.payload
        proof = payload.get("proof")
        c_s, c_s2, c_r = payload.get("c_s"), payload.get("c_s2"), payload.get("c_r")
        if not isinstance(proof, dict) or c_s is None or c_s2 is None or c_r is None:
            raise Revert("BadComplete")
        # the published old-state list must be the state being verified
        if c_s != instance.serialize():
            raise Revert("ProofRejected")
        if not verifier_verify(instance, proof, record["h_cx"], c_s2, c_r):
            raise Revert("ProofRejected")
        set_new_states(instance, c_s2, origin=tx.sender)
        q = record["collateral"]
        for addr in record["parties"] + [self.executor_addr]:
            self.coins[addr] = self.coins.get(addr, 0) + q
        record["status"] = COMPLETE
        record["complete_payload"] = payload

    def _op_timeout(self, tx: Transaction, height: int) -> None:
        record = self._proposal_for(tx)
        if tx.sender not in record["parties"]:
            raise Revert("BadSender")
        if height <= record["h_cp"] + record["complete_window"]:
            raise Revert("TooEarly")
        parties = record["parties"]
        q = record["collateral"]
        share = timeout_share(q, len(parties))
        for addr, credit in split_pool(q * (len(parties) + 1), share, parties).items():
            self.coins[addr] = self.coins.get(addr, 0) + credit
        record["status"] = TIMEOUT


# ---------------------------------------------------------------------------
# Publication proofs


def build_pop(chain: Chain, tx_id: str, checkpoint_hash: str) -> dict:
    """Header path from a checkpoint to the block including ``tx_id``."""
    cp_height = _height_of(chain, checkpoint_hash)
    target = None
    for block in chain.blocks:
        if any(tx.id == tx_id for tx in block.txs):
            target = block
            break
    if target is None or target.height <= cp_height:
        raise EnclaveError("BadPoP", "transaction not found beyond checkpoint")
    headers = []
    for block in chain.blocks[cp_height + 1 : target.height + 1]:
        headers.append({"height": block.height, "parent": block.parent, "hash": block.hash})
    tx_ids = [tx.id for tx in target.txs]
    return {
        "checkpoint": checkpoint_hash,
        "headers": headers,
        "inclusion": {"tx_id": tx_id, "tx_index": tx_ids.index(tx_id), "txids": tx_ids},
    }


def verify_pop(checkpoint_hash: str, tx: Transaction, pop: dict) -> tuple[int, str]:
    """Validate a publication proof; returns (height, block hash) of inclusion."""
    if pop.get("checkpoint") != checkpoint_hash:
        raise EnclaveError("BadPoP", "checkpoint mismatch")
    headers = pop.get("headers") or []
    prev = checkpoint_hash
    for header in headers:
        if header["parent"] != prev:
            raise EnclaveError("BadPoP", "broken header chain")
        prev = header["hash"]
    inclusion = pop.get("inclusion") or {}
    last = headers[-1] if headers else None
    if last is None:
        raise EnclaveError("BadPoP", "empty header chain")
    recomputed = block_hash(last["parent"], last["height"], inclusion.get("txids", []))
    if recomputed != last["hash"]:
        raise EnclaveError("BadPoP", "inclusion block hash mismatch")
    txids = inclusion["txids"]
    index = inclusion.get("tx_index", -1)
    if not 0 <= index < len(txids) or txids[index] != tx.id or inclusion.get("tx_id") != tx.id:
        raise EnclaveError("BadPoP", "transaction not in block")
    return last["height"], last["hash"]


def _height_of(chain: Chain, block_hash_hex: str) -> int:
    for block in chain.blocks:
        if block.hash == block_hash_hex:
            return block.height
    raise EnclaveError("BadPoP", "unknown checkpoint")


def build_transcript(chain: Chain, checkpoint_hash: str, through_height: int) -> dict:
    """Full blocks (checkpoint, through_height] for in-enclave scanning."""
    cp_height = _height_of(chain, checkpoint_hash)
    if through_height > chain.height:
        raise EnclaveError("BadPoP", "transcript beyond chain head")
    blocks = []
    for block in chain.blocks[cp_height + 1 : through_height + 1]:
        blocks.append(
            {
                "height": block.height,
                "parent": block.parent,
                "hash": block.hash,
                "txs": [tx.to_dict() for tx in block.txs],
            }
        )
    return {"checkpoint": checkpoint_hash, "blocks": blocks}


def verify_transcript(checkpoint_hash: str, transcript: dict) -> list[tuple[int, Transaction]]:
    """Validate a block transcript; returns (height, tx) pairs in order.

    Each block hash is recomputed from its transactions' content hashes,
    so no transaction can be added, dropped, or altered undetected.
    """
    if transcript.get("checkpoint") != checkpoint_hash:
        raise EnclaveError("BadPoP", "checkpoint mismatch")
    prev = checkpoint_hash
    found: list[tuple[int, Transaction]] = []
    for block in transcript.get("blocks", []):
        if block["parent"] != prev:
            raise EnclaveError("BadPoP", "broken header chain")
        txs = [Transaction.from_dict(t) for t in block["txs"]]
        recomputed = block_hash(block["parent"], block["height"], [t.id for t in txs])
        if recomputed != block["hash"]:
            raise EnclaveError("BadPoP", "block content mismatch")
        prev = block["hash"]
        found.extend((block["height"], tx) for tx in txs)
    return found
