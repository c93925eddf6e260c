"""Actor simulation driving multi-party calls from a scenario description.

A scenario names a contract, a function, the parties with their inputs and
behaviors, and an executor host behavior.  The simulation advances in
ticks: every actor takes its actions, then one block is mined.  Party and
executor identities are fixed per name, so two runs of the same scenario
differ only through the enclave seed.

Behaviors model the failure modes the collateral game is built for:

parties
    ``honest``              acknowledges, sends inputs, responds if challenged
    ``silent_after_ack``    withholds inputs, but answers the on-chain challenge
    ``respond_to_challenge``  alias of ``silent_after_ack``
    ``mismatched_inputs``   sends inputs that do not match its commitment,
                            and repeats them when challenged
    ``never_respond``       withholds inputs and ignores the challenge
    ``no_ack``              never even acknowledges the call

executor hosts
    ``honest``              relays every transaction promptly
    ``drop_tx_com``         swallows the final completion or punishment
    ``crash_after_settle``  stops driving the call once it is settled
    ``delay_beyond_tau_com``  holds the final transaction past the
                            completion window, then submits it anyway
"""

from __future__ import annotations

import json
import random
from pathlib import Path
from typing import Any

from . import chainsim
from .chainsim import (
    COMPLETE,
    SETTLE,
    Chain,
    Transaction,
    build_pop,
    build_transcript,
    build_tx,
    genesis_hash,
)
from .cryptobox import (
    AttestationReport,
    KeyPair,
    commit,
    encrypt,
    hash_bytes,
    hash_json,
    keygen,
    open_commit,
    verify_attestation,
)
from .encoding import canonical_json, from_canonical_json, from_hex
from .enclave import MEASUREMENT, Enclave
from .errors import ConfigError, EnclaveError, Revert

NEGOTIATION_FAILED = "NEGOTIATION_FAILED"

PARTY_BEHAVIORS = {
    "honest",
    "silent_after_ack",
    "respond_to_challenge",
    "mismatched_inputs",
    "never_respond",
    "no_ack",
}
HOST_BEHAVIORS = {"honest", "drop_tx_com", "crash_after_settle", "delay_beyond_tau_com"}

MAX_TICKS = 400

SETUP_KINDS = {chainsim.TX_PK, chainsim.TX_COL, chainsim.DEPLOY}


def load_scenario(path: str) -> dict:
    """Read a scenario file and inline the contract source next to it."""
    spec_path = Path(path)
    try:
        scenario = json.loads(spec_path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scenario {path} is not valid JSON: {exc}") from exc
    if not isinstance(scenario, dict):
        raise ConfigError(f"scenario {path} must be a JSON object")
    if "contract_source" not in scenario:
        contract = scenario.get("contract")
        if not contract:
            raise ConfigError(f"scenario {path} names no contract")
        contract_path = Path(contract)
        if not contract_path.is_absolute():
            contract_path = spec_path.parent / contract_path
        try:
            scenario["contract_source"] = contract_path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read contract {contract_path}: {exc}") from exc
        scenario["contract"] = str(contract_path)
    return scenario


def party_seed(name: str) -> bytes:
    return hash_bytes(b"party:" + name.encode())


def executor_seed() -> bytes:
    return hash_bytes(b"executor")


def resolve_ref(ref: Any, roster: list[str]) -> Any:
    """Turn a scenario value reference into a concrete runtime value."""
    if isinstance(ref, dict):
        if "uint" in ref:
            return int(ref["uint"])
        if "bool" in ref:
            return bool(ref["bool"])
        if "address" in ref:
            return str(ref["address"])
        if "address_of" in ref:
            index = int(ref["address_of"])
            if not 0 <= index < len(roster):
                raise ConfigError(f"address_of {index} out of range")
            return roster[index]
    raise ConfigError(f"unsupported value reference {ref!r}")


class _Wallet:
    """Shared submit bookkeeping for every on-chain actor."""

    def __init__(self, keys: KeyPair):
        self.keys = keys
        self.nonce = 0
        self.registered = False
        self.deposited = False

    @property
    def addr(self) -> str:
        return self.keys.addr

    def send(self, chain: Chain, kind: str, payload: dict) -> Transaction:
        tx = build_tx(kind, self.keys.sk, self.addr, self.nonce, payload)
        self.nonce += 1
        chain.submit(tx)
        return tx

    def keep_funded(self, chain: Chain, deposit: int) -> None:
        if not self.registered:
            self.send(chain, chainsim.TX_PK, {"pk": self.keys.pk.hex()})
            self.registered = True
        elif not self.deposited:
            self.send(chain, chainsim.TX_COL, {"amount": deposit})
            self.deposited = True

    def ready(self, chain: Chain, collateral: int) -> bool:
        return self.addr in chain.registered and chain.coins.get(self.addr, 0) >= collateral


class PartyClient:
    """One contract party: wallet, input fragments, and byzantine quirks."""

    def __init__(self, spec: dict, index: int, attestation: dict):
        self.name = spec["name"]
        self.behavior = spec.get("behavior", "honest")
        if self.behavior not in PARTY_BEHAVIORS:
            raise ConfigError(f"unknown party behavior {self.behavior!r}")
        self.spec = spec
        self.index = index
        self.wallet = _Wallet(keygen(party_seed(self.name)))
        self.rng = random.Random(
            int.from_bytes(hash_bytes(b"party-rng:" + self.name.encode()), "big")
        )
        report = AttestationReport(
            enclave_pk=from_hex(attestation["enclave_pk"]),
            measurement=attestation["measurement"],
            signature=from_hex(attestation["signature"]),
        )
        if not verify_attestation(report) or report.measurement != MEASUREMENT:
            raise ConfigError("enclave attestation did not verify")
        self.enclave_pk = report.enclave_pk
        self.id_p: str | None = None
        self.fragment: dict | None = None
        self.sent_fragment: dict | None = None
        self.commit_r: bytes = b""
        self.responded = False
        self.claimed = False

    @property
    def addr(self) -> str:
        return self.wallet.addr

    # -- negotiation --------------------------------------------------------

    def _owned_openings(self, chain: Chain, adr_v: str) -> dict:
        openings = {}
        for cell, entry in chain.verifiers[adr_v].serialize():
            if entry.get("kind") == "enc" and entry.get("owner") == self.addr:
                data, r = open_commit(self.wallet.keys.sk, from_hex(entry["ct"]))
                openings[cell] = [from_canonical_json(data), r.hex()]
        return openings

    def _tampered(self, fragment: dict) -> dict:
        out = {
            "scalars": dict(fragment["scalars"]),
            "elements": dict(fragment["elements"]),
            "openings": fragment["openings"],
        }
        for group in ("scalars", "elements"):
            for name, value in out[group].items():
                if isinstance(value, int) and not isinstance(value, bool):
                    out[group][name] = value + 1
        return out

    def make_ack(self, chain: Chain, adr_v: str, id_p: str, roster: list[str]) -> dict | None:
        if self.behavior == "no_ack":
            return None
        self.id_p = id_p
        self.responded = False
        self.claimed = False
        scalars = {
            name: resolve_ref(ref, roster) for name, ref in (self.spec.get("scalars") or {}).items()
        }
        elements = {
            name: resolve_ref(ref, roster) for name, ref in (self.spec.get("elements") or {}).items()
        }
        publics = {name: scalars[name] for name in self.spec.get("public") or scalars}
        self.fragment = {
            "scalars": scalars,
            "elements": elements,
            "openings": self._owned_openings(chain, adr_v),
        }
        self.sent_fragment = (
            self._tampered(self.fragment)
            if self.behavior == "mismatched_inputs"
            else self.fragment
        )
        self.commit_r = self.rng.randbytes(32)
        ct = commit(self.wallet.keys.pk, canonical_json(self.fragment), self.commit_r)
        return {
            "id_p": id_p,
            "party_pk": self.wallet.keys.pk.hex(),
            "provides": {"scalars": sorted(scalars), "elements": sorted(elements)},
            "public": publics,
            "commitment": ct.hex(),
            "state_digest": hash_json(chain.verifiers[adr_v].serialize()),
        }

    # -- inputs -------------------------------------------------------------

    def _sealed_envelope(self) -> str:
        message = {
            "id_p": self.id_p,
            "party": self.addr,
            "fragment": self.sent_fragment,
            "r": self.commit_r.hex(),
        }
        return encrypt(self.enclave_pk, canonical_json(message), self.rng.randbytes(32)).hex()

    def make_envelope(self) -> str | None:
        if self.behavior in ("silent_after_ack", "respond_to_challenge", "never_respond"):
            return None
        return self._sealed_envelope()

    # -- per-tick reactions -------------------------------------------------

    def _challenged_now(self, chain: Chain) -> bool:
        if self.id_p is None or not chain.blocks[-1].txs:
            return False
        for tx in chain.blocks[-1].txs:
            if (
                tx.kind == chainsim.TX_CHA
                and tx.payload.get("id_p") == self.id_p
                and self.addr in tx.payload.get("suspects", [])
                and chain.tx_status.get(tx.id) == "ok"
            ):
                return True
        return False

    def step(self, chain: Chain, scenario: dict, wire_log: list[str]) -> None:
        self.wallet.keep_funded(chain, int(scenario.get("deposit", 0)))
        if self._challenged_now(chain) and not self.responded:
            self.responded = True
            if self.behavior != "never_respond":
                blob = self._sealed_envelope()
                wire_log.append(blob)
                self.wallet.send(chain, chainsim.TX_RES, {"id_p": self.id_p, "blob": blob})
        self._maybe_claim_timeout(chain)

    def _maybe_claim_timeout(self, chain: Chain) -> None:
        if self.id_p is None or self.claimed:
            return
        record = chain.proposal(self.id_p)
        if record is None or record["status"] != SETTLE:
            return
        # stagger claims by party index so exactly one lands
        due = record["h_cp"] + record["complete_window"] + self.index
        if chain.height >= due:
            self.claimed = True
            self.wallet.send(chain, chainsim.TX_OUT, {"id_p": self.id_p})

    # -- reading results ----------------------------------------------------

    def read_outputs(self, chain: Chain, adr_v: str) -> dict:
        """Everything this party can learn from the chain: its own slices."""
        out: dict = {"state": {}, "returns": {}}
        for cell, entry in chain.verifiers[adr_v].serialize():
            if entry.get("kind") == "enc" and entry.get("owner") == self.addr:
                data, _ = open_commit(self.wallet.keys.sk, from_hex(entry["ct"]))
                out["state"][cell] = from_canonical_json(data)
        if self.id_p:
            record = chain.proposal(self.id_p) or {}
            payload = record.get("complete_payload")
            if payload:
                for name, entry in payload["c_r"]:
                    if entry.get("kind") == "enc" and entry.get("owner") == self.addr:
                        data, _ = open_commit(self.wallet.keys.sk, from_hex(entry["ct"]))
                        out["returns"][name] = from_canonical_json(data)
        return out


class ExecutorHost:
    """The untrusted machine hosting the enclave and driving each call."""

    def __init__(self, spec: dict, enclave: Enclave, scenario: dict):
        self.behavior = (spec or {}).get("behavior", "honest")
        if self.behavior not in HOST_BEHAVIORS:
            raise ConfigError(f"unknown host behavior {self.behavior!r}")
        self.enclave = enclave
        self.scenario = scenario
        self.wallet = _Wallet(keygen(executor_seed()))
        self.adr_v: str | None = None
        self._deploy_tx: Transaction | None = None
        self.phase = "setup"
        self.round_index = 0
        self.rounds: list[dict] = []
        self.outcome: str | None = None
        self.id_p: str | None = None
        self.tx_p: Transaction | None = None
        self.h_cp = -1
        self.pending: Transaction | None = None
        self.trace_mark = 0

    @property
    def addr(self) -> str:
        return self.wallet.addr

    @property
    def done(self) -> bool:
        return self.phase == "done"

    # -- helpers ------------------------------------------------------------

    def _windows(self, chain: Chain) -> tuple[int, int]:
        record = chain.proposal(self.id_p)
        return record["h_cp"] + record["response_window"], record["h_cp"] + record["complete_window"]

    def _relay_final(self, chain: Chain, tx: Transaction) -> None:
        """Route the terminal transaction through this host's behavior."""
        if self.behavior == "drop_tx_com":
            self.phase = "awaiting"
        elif self.behavior == "delay_beyond_tau_com":
            self.pending = tx
            self.phase = "delaying"
        else:
            chain.submit(tx)
            self.phase = "awaiting"

    def _finish_round(self, chain: Chain, status: str) -> None:
        kinds = []
        setup = 0
        for record in chain.trace[self.trace_mark :]:
            if record["status"] != "ok":
                continue
            if record["kind"] in SETUP_KINDS:
                setup += 1
            else:
                kinds.append(record["kind"])
        session_record = chain.proposal(self.id_p) if self.id_p else None
        self.rounds.append(
            {
                "id_p": self.id_p,
                "status": status,
                "tx_kinds": kinds,
                "setup_txs": setup,
                "challenged": list(session_record.get("challenged", [])) if session_record else [],
                "malicious": list(session_record.get("malicious", [])) if session_record else [],
            }
        )
        self.outcome = status
        self.round_index += 1
        self.id_p = None
        self.tx_p = None
        self.pending = None
        if status == NEGOTIATION_FAILED or self.round_index >= int(self.scenario.get("repeat", 1)):
            self.phase = "done"
        else:
            self.trace_mark = len(chain.trace)
            self.phase = "negotiate"

    # -- the phase machine --------------------------------------------------

    def step(self, chain: Chain, parties: list[PartyClient], wire_log: list[str]) -> None:
        self.wallet.keep_funded(chain, int(self.scenario.get("deposit", 0)))
        handler = getattr(self, f"_phase_{self.phase}", None)
        if handler is not None:
            handler(chain, parties, wire_log)

    def _phase_setup(self, chain: Chain, parties: list[PartyClient], wire_log: list[str]) -> None:
        if self.addr not in chain.registered:
            return
        if self._deploy_tx is None:
            descriptor = self.enclave.admit_contract(
                self.scenario["contract_source"], self.scenario.get("contract", "<contract>")
            )
            roster = [p.addr for p in parties]
            initial = []
            for var, key_ref, value_ref in self.scenario.get("initial_state", []):
                cell = var if key_ref is None else f"{var}[{resolve_ref(key_ref, roster)}]"
                initial.append([cell, resolve_ref(value_ref, roster)])
            self._deploy_tx = self.wallet.send(
                chain, chainsim.DEPLOY, {"descriptor": descriptor, "initial_state": initial}
            )
            return
        if chain.tx_status.get(self._deploy_tx.id) == "ok":
            pop = build_pop(chain, self._deploy_tx.id, self.enclave.checkpoint_hash)
            self.adr_v = self.enclave.confirm_deploy(self._deploy_tx, pop)
            self.trace_mark = 0
            self.phase = "negotiate"
            self._phase_negotiate(chain, parties, wire_log)

    def _phase_negotiate(self, chain: Chain, parties: list[PartyClient], wire_log: list[str]) -> None:
        collateral = int(self.scenario.get("collateral", 1))
        if not self.wallet.ready(chain, collateral):
            return
        if not all(
            p.wallet.ready(chain, collateral) for p in parties if p.behavior != "no_ack"
        ):
            return
        if self.id_p is None:
            self.id_p = self.enclave.new_session(
                self.adr_v,
                self.scenario["function"],
                collateral,
                self.scenario.get("meet_policy", {"kind": "all_required_inputs"}),
                chain.height + int(self.scenario.get("negotiation_window", 10)),
            )
            roster = [p.addr for p in parties]
            for party in parties:
                ack = party.make_ack(chain, self.adr_v, self.id_p, roster)
                if ack is not None:
                    wire_log.append(canonical_json(ack).hex())
                    self.enclave.receive_ack(self.id_p, ack)
        try:
            tx_p = self.enclave.try_settle(self.id_p, chain.height)
        except EnclaveError as exc:
            if exc.reason == "PolicyUnmet":
                self._finish_round(chain, NEGOTIATION_FAILED)
                return
            raise
        if tx_p is not None:
            self.tx_p = tx_p
            chain.submit(tx_p)
            self.phase = "settling"

    def _phase_settling(self, chain: Chain, parties: list[PartyClient], wire_log: list[str]) -> None:
        status = chain.tx_status.get(self.tx_p.id)
        if status is None:
            return
        if status != "ok":
            self._finish_round(chain, NEGOTIATION_FAILED)
            return
        self.h_cp = chain.proposal(self.id_p)["h_cp"]
        if self.behavior == "crash_after_settle":
            self.phase = "awaiting"
            return
        pop = build_pop(chain, self.tx_p.id, self.enclave.checkpoint_hash)
        state = chain.verifiers[self.adr_v].serialize()
        envelopes: dict[str, str] = {}
        for party in parties:
            if party.id_p != self.id_p:
                continue
            blob = party.make_envelope()
            if blob is not None:
                wire_log.append(blob)
                envelopes[party.addr] = blob
        outcome = self.enclave.execute(self.id_p, self.tx_p, pop, state, envelopes)
        if outcome.kind == "challenge":
            chain.submit(outcome.tx)
            self.phase = "challenging"
        elif outcome.kind == "abort":
            self.pending = outcome.tx
            self.phase = "holding_punish"
        else:
            self._relay_final(chain, outcome.tx)

    def _phase_challenging(self, chain: Chain, parties: list[PartyClient], wire_log: list[str]) -> None:
        response_deadline, _ = self._windows(chain)
        if chain.height < response_deadline:
            return
        transcript = build_transcript(chain, chain.blocks[self.h_cp].hash, chain.height)
        outcome = self.enclave.adjudicate(self.id_p, transcript)
        self._relay_final(chain, outcome.tx)

    def _phase_holding_punish(self, chain: Chain, parties: list[PartyClient], wire_log: list[str]) -> None:
        response_deadline, _ = self._windows(chain)
        if chain.height >= response_deadline:
            self._relay_final(chain, self.pending)
            self.pending = None

    def _phase_delaying(self, chain: Chain, parties: list[PartyClient], wire_log: list[str]) -> None:
        _, complete_deadline = self._windows(chain)
        if chain.height >= complete_deadline + 2:
            chain.submit(self.pending)
            self.pending = None
            self.phase = "awaiting"

    def _phase_awaiting(self, chain: Chain, parties: list[PartyClient], wire_log: list[str]) -> None:
        record = chain.proposal(self.id_p)
        if record and record["status"] != SETTLE:
            self._finish_round(chain, record["status"])


class Simulation:
    """Ticks a chain, an enclave, one executor, and the parties to the end."""

    def __init__(self, scenario: dict, master_seed: bytes):
        if "contract_source" not in scenario:
            raise ConfigError("scenario is missing the contract source")
        if "function" not in scenario:
            raise ConfigError("scenario is missing the function to call")
        specs = scenario.get("parties") or []
        if not specs:
            raise ConfigError("scenario declares no parties")
        self.scenario = scenario
        self.enclave = Enclave(master_seed, genesis_hash())
        attestation = self.enclave.attestation()
        self.parties = [PartyClient(spec, i, attestation) for i, spec in enumerate(specs)]
        names = [p.name for p in self.parties]
        if len(set(names)) != len(names):
            raise ConfigError("party names must be unique")
        self.host = ExecutorHost(scenario.get("executor"), self.enclave, scenario)
        self.chain = Chain(self.enclave.pk, self.enclave.addr, self.host.addr)
        self.wire_log: list[str] = []

    def run(self) -> dict:
        deposits: dict[str, int] = {}
        ticks = 0
        while not self.host.done and ticks < MAX_TICKS:
            self.host.step(self.chain, self.parties, self.wire_log)
            for party in self.parties:
                party.step(self.chain, self.scenario, self.wire_log)
            self.chain.mine_block()
            ticks += 1
        for block in self.chain.blocks:
            for tx in block.txs:
                if tx.kind == chainsim.TX_COL and self.chain.tx_status.get(tx.id) == "ok":
                    deposits[tx.sender] = deposits.get(tx.sender, 0) + tx.payload["amount"]
        open_escrow = any(
            record["status"] == SETTLE for record in self.chain.proposals.values()
        )
        conserved = (not open_escrow) and sum(self.chain.coins.values()) == sum(
            deposits.values()
        )
        return {
            "scenario": self.scenario.get("name", "unnamed"),
            "outcome": self.host.outcome or NEGOTIATION_FAILED,
            "rounds": self.host.rounds,
            "ticks": ticks,
            "height": self.chain.height,
            "enclave": {
                "addr": self.enclave.addr,
                "response_window": self.enclave.response_window,
                "complete_window": self.enclave.complete_window,
                "measurement": MEASUREMENT,
            },
            "adr_v": self.host.adr_v,
            "actors": {
                "executor": self.host.addr,
                **{p.name: p.addr for p in self.parties},
            },
            "deposits": deposits,
            "coins_final": dict(sorted(self.chain.coins.items())),
            "conservation_ok": conserved,
            "verifier_state": (
                self.chain.verifiers[self.host.adr_v].serialize() if self.host.adr_v else []
            ),
            "trace": list(self.chain.trace),
            "coin_history": [[h, dict(sorted(c.items()))] for h, c in self.chain.coin_history],
        }


def run_scenario(scenario: dict, master_seed: bytes) -> tuple[dict, Simulation]:
    """Convenience wrapper returning the report plus the live simulation."""
    sim = Simulation(scenario, master_seed)
    report = sim.run()
    return report, sim


# ---------------------------------------------------------------------------
# Public audit


def audit_chain(
    blocks: list, enclave_pk: bytes, enclave_addr: str, executor_addr: str
) -> dict:
    """Re-derive every acceptance decision from public block content alone.

    The service rules are deterministic, so an auditor replays the blocks
    through a fresh service instance.  A completion is accepted only if
    its proof verifies against the auditor's own reconstructed state, so
    any mutation, forgery, or replay diverges here.
    """
    shadow = Chain(enclave_pk, enclave_addr, executor_addr)
    rejected: list[dict] = []
    for block in blocks:
        if block.height == 0:
            continue
        for tx in block.txs:
            try:
                shadow.submit(tx)
            except Revert as exc:
                rejected.append({"tx_id": tx.id, "kind": tx.kind, "reason": exc.reason})
        shadow.mine_block()
    for record in shadow.trace:
        if record["status"] != "ok":
            rejected.append(
                {"kind": record["kind"], "reason": record["status"], "height": record["height"]}
            )
    accepted = sorted(
        id_p for id_p, rec in shadow.proposals.items() if rec["status"] == COMPLETE
    )
    return {
        "accepted": accepted,
        "statuses": {id_p: rec["status"] for id_p, rec in shadow.proposals.items()},
        "rejected": rejected,
        "verifier_states": {
            adr: instance.serialize() for adr, instance in shadow.verifiers.items()
        },
    }
