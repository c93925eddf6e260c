"""Simulated trusted execution enclave running private contract functions.

The enclave is the only place plaintext private data exists.  It admits a
contract by compiling the source itself, so the code and policy hashes it
signs are its own, not the host's claim.  Per multi-party call it collects
acknowledgements, settles a proposal on chain, decrypts the parties'
input envelopes, checks every envelope against the commitment hashes the
proposal pinned, runs the function, and emits exactly one of a completion
(with a publicly checkable proof) or a punishment.

The host outside is untrusted: every chain fact the enclave relies on
arrives as a hash-linked publication proof rooted at the enclave's last
verified checkpoint, and lies about current contract state are caught by
the chain's own old-state binding when the completion proof is checked.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Any

from . import chainsim
from .chainsim import Transaction, build_tx, verify_pop, verify_transcript
from .codegen import CompiledContract, compile_source
from .cryptobox import (
    KeyPair,
    addr_of_pk,
    attest,
    commit,
    decrypt,
    hash_bytes,
    hash_json,
    keygen,
    open_commit,
)
from .encoding import canonical_json, from_canonical_json, from_hex
from .errors import CryptoError, EnclaveError, ExecAbort, PolicyError
from .interpreter import (
    StateStore,
    build_runtime_owners,
    cell_owner,
    exec_function,
    split_cell_id,
)
from .typecheck import MPT

MEASUREMENT = hash_bytes(b"cloak mpt enclave v1").hex()

RESPONSE_WINDOW_RANGE = (5, 20)
COMPLETE_WINDOW_MAX = 60

NEGOTIATE = "NEGOTIATE"
SETTLE = "SETTLE"
CHALLENGE = "CHALLENGE"
COMPLETE = "COMPLETE"
ABORT = "ABORT"


@dataclass(frozen=True)
class Outcome:
    """What the enclave hands its host after an execution step."""

    kind: str  # "complete" | "abort" | "challenge" | "punish"
    tx: Transaction
    suspects: tuple[str, ...] = ()
    malicious: tuple[str, ...] = ()


@dataclass
class Session:
    """One multi-party call from negotiation to its terminal transaction."""

    id_p: str
    adr_v: str
    fn: str
    collateral: int
    meet_policy: dict
    deadline_height: int
    status: str = NEGOTIATE
    state_digest: str = ""
    acks: dict[str, dict] = field(default_factory=dict)
    order: list[str] = field(default_factory=list)
    publics: dict[str, Any] = field(default_factory=dict)
    scalar_provider: dict[str, str] = field(default_factory=dict)
    h_cx: dict[str, str] = field(default_factory=dict)
    tx_p_id: str = ""
    h_cp: int = -1
    cp_hash: str = ""
    state_entries: list = field(default_factory=list)
    fragments: dict[str, dict] = field(default_factory=dict)
    suspects: list[str] = field(default_factory=list)

    @property
    def proposer(self) -> str:
        return self.order[0]

    def element_order(self, group_params: set[str]) -> list[str]:
        out = []
        for addr in self.order:
            declared = self.acks[addr]["provides"].get("elements", [])
            if any(name in group_params for name in declared):
                out.append(addr)
        return out


class Enclave:
    """Deterministic enclave instance derived entirely from one seed."""

    def __init__(self, master_seed: bytes, genesis_hash: str):
        self._keys: KeyPair = keygen(hash_bytes(b"enclave:" + master_seed))
        self._rng = random.Random(int.from_bytes(hash_bytes(b"rng:" + master_seed), "big"))
        lo, hi = RESPONSE_WINDOW_RANGE
        self.response_window = self._rng.randint(lo, hi)
        # leave room for a full challenge round before completion expires
        self.complete_window = self._rng.randint(
            max(20, self.response_window + 10), COMPLETE_WINDOW_MAX
        )
        self.checkpoint_height = 0
        self.checkpoint_hash = genesis_hash
        self._nonce = 0
        self._admitted: dict[tuple[str, str], CompiledContract] = {}
        self._contracts: dict[str, CompiledContract] = {}
        self._sessions: dict[str, Session] = {}
        self._session_count = 0

    # -- identity -----------------------------------------------------------

    @property
    def pk(self) -> bytes:
        return self._keys.pk

    @property
    def addr(self) -> str:
        return self._keys.addr

    def attestation(self) -> dict:
        return attest(self._keys.pk, MEASUREMENT).to_json()

    def _sign_tx(self, kind: str, payload: dict) -> Transaction:
        tx = build_tx(kind, self._keys.sk, self.addr, self._nonce, payload)
        self._nonce += 1
        return tx

    def _fresh_randomness(self) -> bytes:
        return self._rng.randbytes(32)

    def _advance_checkpoint(self, height: int, block_hash: str) -> None:
        if height < self.checkpoint_height:
            raise EnclaveError("CheckpointRegression", f"{height} < {self.checkpoint_height}")
        self.checkpoint_height = height
        self.checkpoint_hash = block_hash

    # -- deployment ---------------------------------------------------------

    def admit_contract(self, source: str, path: str = "<contract>") -> dict:
        """Compile a contract in-enclave; returns the verifier descriptor."""
        compiled = compile_source(source, path)
        self._admitted[(compiled.code_hash, compiled.policy_hash)] = compiled
        return compiled.verifier_descriptor(self.addr)

    def confirm_deploy(self, deploy_tx: Transaction, pop: dict) -> str:
        """Bind a mined deployment to an admitted contract; returns adr_v."""
        height, block_hash = verify_pop(self.checkpoint_hash, deploy_tx, pop)
        descriptor = deploy_tx.payload.get("descriptor") or {}
        key = (descriptor.get("h_f"), descriptor.get("h_p"))
        compiled = self._admitted.get(key)
        if compiled is None or descriptor != compiled.verifier_descriptor(self.addr):
            raise EnclaveError("BindingMismatch", "deployed descriptor was never admitted")
        adr_v = hash_bytes(b"verifier:" + from_hex(deploy_tx.id))[-20:].hex()
        self._contracts[adr_v] = compiled
        self._advance_checkpoint(height, block_hash)
        return adr_v

    # -- negotiation --------------------------------------------------------

    def new_session(
        self,
        adr_v: str,
        fn: str,
        collateral: int,
        meet_policy: dict,
        deadline_height: int,
    ) -> str:
        compiled = self._contracts.get(adr_v)
        if compiled is None:
            raise EnclaveError("UnknownVerifier", adr_v)
        checked = compiled.checked.functions.get(fn)
        if checked is None:
            raise EnclaveError("UnknownFunction", fn)
        if checked.kind != MPT:
            raise EnclaveError("NotMultiParty", f"{fn} is {checked.kind}")
        if not isinstance(collateral, int) or collateral <= 0:
            raise EnclaveError("BadCollateral", repr(collateral))
        # one open call per contract, so the state everyone acknowledged
        # cannot change underneath the call
        for other in self._sessions.values():
            if other.adr_v == adr_v and other.status in (NEGOTIATE, SETTLE, CHALLENGE):
                raise EnclaveError("ContractBusy", adr_v)
        self._session_count += 1
        id_p = hash_json(
            {"session": self._session_count, "entropy": self._fresh_randomness().hex()}
        )
        self._sessions[id_p] = Session(
            id_p=id_p,
            adr_v=adr_v,
            fn=fn,
            collateral=collateral,
            meet_policy=dict(meet_policy),
            deadline_height=deadline_height,
        )
        return id_p

    def _session(self, id_p: str, want: str) -> Session:
        session = self._sessions.get(id_p)
        if session is None:
            raise EnclaveError("UnknownSession", id_p)
        if session.status != want:
            raise EnclaveError("BadSessionStatus", f"{session.status} != {want}")
        return session

    def receive_ack(self, id_p: str, ack: dict) -> str:
        """Record one party's acknowledgement; returns the party address."""
        session = self._session(id_p, NEGOTIATE)
        if ack.get("id_p") != id_p:
            raise EnclaveError("BadAck", "acknowledgement targets another call")
        pk = from_hex(ack.get("party_pk", ""))
        if len(pk) != 64:
            raise EnclaveError("BadAck", "malformed party key")
        party = addr_of_pk(pk)
        if party in session.acks:
            raise EnclaveError("DuplicateAck", party)
        provides = ack.get("provides") or {}
        publics = ack.get("public") or {}
        commitment = ack.get("commitment", "")
        if not isinstance(commitment, str) or len(commitment) < 128:
            raise EnclaveError("BadAck", "missing input commitment")
        digest = ack.get("state_digest", "")
        if not isinstance(digest, str) or len(digest) != 64:
            raise EnclaveError("BadAck", "missing state digest")
        if not session.order:
            session.state_digest = digest
        elif digest != session.state_digest:
            raise EnclaveError("StateDisagreement", party)
        compiled = self._contracts[session.adr_v]
        checked = compiled.checked.functions[session.fn]
        fn = checked.decl
        scalar_params = {p.name for p in fn.params} - self._tagged_params(checked)
        for name in provides.get("scalars", []):
            if name not in scalar_params:
                raise EnclaveError("BadAck", f"{name!r} is not a scalar parameter")
        for name in provides.get("elements", []):
            if name not in self._tagged_params(checked):
                raise EnclaveError("BadAck", f"{name!r} is not a tagged array parameter")
        if not set(publics) <= set(provides.get("scalars", [])):
            raise EnclaveError("BadAck", "public values outside declared scalars")
        for name, value in publics.items():
            if name in session.publics and session.publics[name] != value:
                raise EnclaveError("ScalarConflict", name)
        for name in provides.get("scalars", []):
            if session.scalar_provider.get(name) is None:
                continue
            # re-declaring is fine only for openly agreed values
            if name not in publics or name not in session.publics:
                raise EnclaveError("ScalarConflict", name)
        session.acks[party] = {
            "party_pk": ack["party_pk"],
            "provides": {
                "scalars": list(provides.get("scalars", [])),
                "elements": list(provides.get("elements", [])),
            },
            "public": dict(publics),
            "commitment": commitment,
        }
        session.order.append(party)
        session.publics.update(publics)
        for name in provides.get("scalars", []):
            session.scalar_provider.setdefault(name, party)
        session.h_cx[party] = hash_bytes(from_hex(commitment)).hex()
        return party

    @staticmethod
    def _tagged_params(checked) -> set[str]:
        names: set[str] = set()
        for group in checked.tag_groups.values():
            names.add(group["addr_array"])
            names.update(group["data_arrays"])
        return names

    def _policy_met(self, session: Session) -> bool:
        compiled = self._contracts[session.adr_v]
        checked = compiled.checked.functions[session.fn]
        fn = checked.decl
        tagged = self._tagged_params(checked)
        for param in fn.params:
            if param.name in tagged:
                continue
            if param.name not in session.scalar_provider:
                return False
        for group in checked.tag_groups.values():
            group_params = {group["addr_array"], *group["data_arrays"]}
            contributors = session.element_order(group_params)
            if not contributors:
                return False
            for addr in contributors:
                declared = set(session.acks[addr]["provides"]["elements"])
                if not group_params <= declared:
                    return False
        policy = session.meet_policy
        if policy.get("kind") == "min_party_count":
            return len(session.order) >= int(policy.get("min", 1))
        return True

    def try_settle(self, id_p: str, height: int) -> Transaction | None:
        """Emit the on-chain proposal once the meet policy is satisfied."""
        session = self._session(id_p, NEGOTIATE)
        if not self._policy_met(session):
            if height > session.deadline_height:
                session.status = ABORT
                raise EnclaveError("PolicyUnmet", f"negotiation expired at {session.deadline_height}")
            return None
        tx = self._sign_tx(
            chainsim.TX_P,
            {
                "id_p": id_p,
                "adr_v": session.adr_v,
                "fn": session.fn,
                "parties": list(session.order),
                "h_cx": [session.h_cx[addr] for addr in session.order],
                "collateral": session.collateral,
                "response_window": self.response_window,
                "complete_window": self.complete_window,
            },
        )
        session.status = SETTLE
        session.tx_p_id = tx.id
        return tx

    # -- execution ----------------------------------------------------------

    def execute(
        self,
        id_p: str,
        tx_p: Transaction,
        pop: dict,
        on_chain_state: list,
        envelopes: dict[str, str],
    ) -> Outcome:
        """Run the settled call; returns a completion, challenge, or abort.

        ``on_chain_state`` is the host's claim of the verifier's current
        cell list.  It must hash to the digest every party acknowledged,
        so a lying host can neither corrupt the run nor frame a party
        whose openings target the real chain state.
        """
        session = self._session(id_p, SETTLE)
        if tx_p.id != session.tx_p_id:
            raise EnclaveError("BindingMismatch", "proposal is not the one signed here")
        if hash_json(on_chain_state) != session.state_digest:
            raise EnclaveError("BindingMismatch", "state claim differs from acknowledged state")
        height, block_hash = verify_pop(self.checkpoint_hash, tx_p, pop)
        self._advance_checkpoint(height, block_hash)
        session.h_cp = height
        session.cp_hash = block_hash
        session.state_entries = list(on_chain_state)
        suspects = []
        for party in session.order:
            fragment, reason = self._check_party_input(session, party, envelopes.get(party))
            if fragment is None:
                suspects.append(party)
            else:
                session.fragments[party] = fragment
        if suspects:
            session.suspects = suspects
            session.status = CHALLENGE
            tx = self._sign_tx(chainsim.TX_CHA, {"id_p": id_p, "suspects": sorted(suspects)})
            return Outcome(kind="challenge", tx=tx, suspects=tuple(sorted(suspects)))
        return self._run_function(session)

    def adjudicate(self, id_p: str, transcript: dict) -> Outcome:
        """Resolve an open challenge from a full block transcript.

        The transcript must start at the proposal's block and reach the
        end of the response window; its hash links prove both presence and
        absence of responses, so a host cannot hide an honest reply.
        """
        session = self._session(id_p, CHALLENGE)
        entries = verify_transcript(session.cp_hash, transcript)
        deadline = session.h_cp + self.response_window
        blocks = transcript.get("blocks") or []
        if (blocks[-1]["height"] if blocks else session.h_cp) < deadline:
            raise EnclaveError("TranscriptTooShort", f"must reach height {deadline}")
        responses: dict[str, list[str]] = {addr: [] for addr in session.suspects}
        for h, tx in entries:
            if tx.kind != chainsim.TX_RES or h > deadline:
                continue
            if tx.payload.get("id_p") != id_p or tx.sender not in responses:
                continue
            blob = tx.payload.get("blob")
            if isinstance(blob, str):
                responses[tx.sender].append(blob)
        malicious = []
        for party in session.suspects:
            fragment = None
            for blob in responses[party]:
                fragment, _ = self._check_party_input(session, party, blob)
                if fragment is not None:
                    break
            if fragment is None:
                malicious.append(party)
            else:
                session.fragments[party] = fragment
        if malicious:
            session.status = ABORT
            tx = self._sign_tx(chainsim.TX_PNS, {"id_p": id_p, "malicious": sorted(malicious)})
            return Outcome(kind="punish", tx=tx, malicious=tuple(sorted(malicious)))
        return self._run_function(session)

    # -- input validation ---------------------------------------------------

    def _check_party_input(
        self, session: Session, party: str, blob: str | None
    ) -> tuple[dict | None, str]:
        """Decrypt and verify one party's envelope; (fragment, "") or (None, why)."""
        if not blob:
            return None, "missing envelope"
        try:
            plaintext = decrypt(self._keys.sk, from_hex(blob))
            message = from_canonical_json(plaintext)
        except (CryptoError, ValueError) as exc:
            return None, f"undecryptable envelope: {exc}"
        if not isinstance(message, dict) or message.get("id_p") != session.id_p:
            return None, "envelope targets another call"
        if message.get("party") != party:
            return None, "envelope claims another sender"
        fragment = message.get("fragment")
        r_hex = message.get("r", "")
        if not isinstance(fragment, dict) or not isinstance(r_hex, str):
            return None, "malformed envelope"
        ack = session.acks[party]
        try:
            ct = commit(from_hex(ack["party_pk"]), canonical_json(fragment), from_hex(r_hex))
        except (CryptoError, ValueError) as exc:
            return None, f"uncommittable fragment: {exc}"
        if hash_bytes(ct).hex() != session.h_cx[party]:
            return None, "fragment does not match committed inputs"
        scalars = fragment.get("scalars") or {}
        elements = fragment.get("elements") or {}
        provides = ack["provides"]
        if set(scalars) != set(provides["scalars"]) or set(elements) != set(provides["elements"]):
            return None, "fragment does not cover declared inputs"
        for name, value in ack["public"].items():
            if scalars.get(name) != value:
                return None, f"public value for {name!r} differs from commitment"
        reason = self._check_openings(session, party, fragment.get("openings") or {})
        if reason:
            return None, reason
        return fragment, ""

    def _check_openings(self, session: Session, party: str, openings: dict) -> str:
        """Every encrypted state cell owned by ``party`` must open correctly."""
        pk = from_hex(session.acks[party]["party_pk"])
        for cell, entry in session.state_entries:
            if entry.get("kind") != "enc" or entry.get("owner") != party:
                continue
            opening = openings.get(cell)
            if not isinstance(opening, list) or len(opening) != 2:
                return f"no opening for owned cell {cell!r}"
            value, r_hex = opening
            try:
                ct = commit(pk, canonical_json(value), from_hex(r_hex))
            except (CryptoError, ValueError):
                return f"bad opening randomness for {cell!r}"
            if ct.hex() != entry.get("ct"):
                return f"opening for {cell!r} does not match chain state"
        return ""

    # -- the run itself -----------------------------------------------------

    def _materialize_state(self, session: Session) -> dict[str, Any]:
        cells: dict[str, Any] = {}
        for cell, entry in session.state_entries:
            if entry["kind"] == "plain":
                cells[cell] = entry["value"]
            elif entry.get("owner") == self.addr:
                data, _ = open_commit(self._keys.sk, from_hex(entry["ct"]))
                cells[cell] = from_canonical_json(data)
            else:
                owner = entry.get("owner")
                opening = (session.fragments.get(owner, {}).get("openings") or {}).get(cell)
                if opening is None:
                    raise EnclaveError("MissingOpening", cell)
                cells[cell] = opening[0]
        return cells

    def _assemble_params(self, session: Session, checked) -> dict[str, Any]:
        params: dict[str, Any] = {}
        for name, provider in session.scalar_provider.items():
            params[name] = session.fragments[provider]["scalars"][name]
        for group in checked.tag_groups.values():
            group_params = {group["addr_array"], *group["data_arrays"]}
            contributors = session.element_order(group_params)
            for name in sorted(group_params):
                params[name] = [session.fragments[a]["elements"][name] for a in contributors]
        return params

    def _entry_for(self, owner: str, value: Any, party_pks: dict[str, bytes]) -> dict:
        if owner == "public":
            return chainsim.plain_entry(value)
        if owner == "tee":
            pk = self._keys.pk
            owner_addr = self.addr
        else:
            pk = party_pks.get(owner)
            owner_addr = owner
            if pk is None:
                raise EnclaveError("UnknownOwner", owner)
        ct = commit(pk, canonical_json(value), self._fresh_randomness())
        return chainsim.enc_entry(ct.hex(), owner_addr)

    def _run_function(self, session: Session) -> Outcome:
        compiled = self._contracts[session.adr_v]
        checked = compiled.checked.functions[session.fn]
        contract = compiled.contract
        types = {v.name: v.annotated for v in contract.state_vars}
        store = StateStore(types, self._materialize_state(session))
        params = self._assemble_params(session, checked)
        caller = session.proposer
        try:
            result = exec_function(contract, session.fn, params, store, caller)
            runtime_owners = build_runtime_owners(result, caller)
            party_pks = {a: from_hex(session.acks[a]["party_pk"]) for a in session.order}
            c_s2 = []
            for cell in sorted(result.writes):
                owner = cell_owner(cell, types, runtime_owners)
                var, key = split_cell_id(cell)
                value = result.state.read(var) if key is None else result.state.cells[cell]
                c_s2.append([cell, self._entry_for(owner, value, party_pks)])
            c_r = []
            for ret in checked.decl.returns:
                owner = cell_owner(ret.name, {ret.name: ret.annotated}, runtime_owners)
                c_r.append([ret.name, self._entry_for(owner, result.returns[ret.name], party_pks)])
        except (ExecAbort, PolicyError) as exc:
            session.status = ABORT
            reason = exc.reason if isinstance(exc, ExecAbort) else "PolicyError"
            tx = self._sign_tx(
                chainsim.TX_PNS, {"id_p": session.id_p, "malicious": [], "reason": reason}
            )
            return Outcome(kind="abort", tx=tx)
        proof = {
            "code_hash": compiled.code_hash,
            "policy_hash": compiled.policy_hash,
            "inputs_hash": hash_json([session.h_cx[a] for a in session.order]),
            "old_state_hash": hash_json(session.state_entries),
            "new_state_hash": hash_json(c_s2),
            "returns_hash": hash_json(c_r),
        }
        tx = self._sign_tx(
            chainsim.TX_COM,
            {
                "id_p": session.id_p,
                "c_s": session.state_entries,
                "c_s2": c_s2,
                "c_r": c_r,
                "proof": proof,
            },
        )
        session.status = COMPLETE
        return Outcome(kind="complete", tx=tx)
