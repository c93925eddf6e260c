"""Command line front end.

``cloak check``    parse and privacy-check a contract
``cloak compile``  emit the policy, the private contract, and the hashes
``cloak run``      simulate a scenario and write report, trace, and figures

Run exit codes distinguish outcomes: 0 for a completed call, 3 for an
aborted or failed negotiation, 4 for a timeout, 1 for configuration
errors.  ``check`` exits 2 when the file itself is missing.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .codegen import compile_source
from .cryptobox import hash_bytes
from .errors import CheckError, ConfigError, SourceError
from .lang.parser import parse_contract
from .protocol import NEGOTIATION_FAILED, load_scenario, run_scenario
from .report import write_run
from .typecheck import check_contract

RUN_EXIT = {
    "COMPLETE": 0,
    "ABORT": 3,
    NEGOTIATION_FAILED: 3,
    "TIMEOUT": 4,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cloak",
        description="Compile privacy-annotated contracts and simulate multi-party calls.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="print extra detail")
    commands = parser.add_subparsers(dest="command", required=True)

    check = commands.add_parser("check", help="parse and privacy-check a contract")
    check.add_argument("file", help="contract source file")

    compile_cmd = commands.add_parser("compile", help="generate policy and private contract")
    compile_cmd.add_argument("file", help="contract source file")
    compile_cmd.add_argument("--out", default="build", help="output directory (default: build)")

    run = commands.add_parser("run", help="simulate a scenario end to end")
    run.add_argument("scenario", help="scenario JSON file")
    run.add_argument("--out", default="out", help="output directory (default: out)")
    run.add_argument("--seed", help="enclave seed (overrides scenario and CLOAK_SEED)")
    run.add_argument(
        "--format", choices=("text", "json"), default="text", help="summary format on stdout"
    )
    return parser


def _read_source(path: str) -> str:
    return Path(path).read_text()


def cmd_check(args: argparse.Namespace) -> int:
    try:
        source = _read_source(args.file)
    except OSError as exc:
        print(f"error: cannot read {args.file}: {exc}", file=sys.stderr)
        return 2
    try:
        contract = parse_contract(source, args.file)
    except SourceError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    checked = check_contract(contract)
    for diagnostic in checked.diagnostics:
        if diagnostic.severity == "error" or args.verbose:
            stream = sys.stderr if diagnostic.severity == "error" else sys.stdout
            print(diagnostic.render(args.file), file=stream)
    if not checked.ok:
        return 1
    for name, fn in checked.functions.items():
        print(f"{name}: {fn.kind}")
    return 0


def cmd_compile(args: argparse.Namespace) -> int:
    try:
        source = _read_source(args.file)
    except OSError as exc:
        print(f"error: cannot read {args.file}: {exc}", file=sys.stderr)
        return 1
    try:
        compiled = compile_source(source, args.file)
    except SourceError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "policy.json").write_text(json.dumps(compiled.policy, indent=2, sort_keys=True) + "\n")
    (out / "private_contract.cloak").write_text(compiled.private_source)
    (out / "state_layout.json").write_text(
        json.dumps(compiled.state_layout, indent=2, sort_keys=True) + "\n"
    )
    print(f"h_f {compiled.code_hash}")
    print(f"h_p {compiled.policy_hash}")
    if args.verbose:
        for name, fn in compiled.checked.functions.items():
            print(f"{name}: {fn.kind}")
        print(f"wrote {out}/policy.json {out}/private_contract.cloak {out}/state_layout.json")
    return 0


def _seed_bytes(args: argparse.Namespace, scenario: dict) -> bytes:
    seed = scenario.get("seed", "default")
    env = os.environ.get("CLOAK_SEED")
    if env:
        seed = env
    if args.seed:
        seed = args.seed
    return hash_bytes(str(seed).encode())


def cmd_run(args: argparse.Namespace) -> int:
    try:
        scenario = load_scenario(args.scenario)
        report, _sim = run_scenario(scenario, _seed_bytes(args, scenario))
    except (ConfigError, CheckError, SourceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    paths = write_run(report, args.out)
    if args.format == "json":
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        print(f"scenario   {report['scenario']}")
        print(f"outcome    {report['outcome']}")
        print(f"height     {report['height']}")
        for index, round_record in enumerate(report["rounds"]):
            kinds = ",".join(round_record["tx_kinds"]) or "-"
            print(
                f"round {index}    {round_record['status']}"
                f"  txs={kinds}  setup={round_record['setup_txs']}"
            )
        print(f"report     {paths['report']}")
        print(f"trace      {paths['trace']}")
        print(f"figures    {Path(paths['coin_balances']).parent}")
        if args.verbose:
            for name, addr in report["actors"].items():
                coins = report["coins_final"].get(addr, 0)
                print(f"actor      {name} {addr} coins={coins}")
    return RUN_EXIT.get(report["outcome"], 1)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"check": cmd_check, "compile": cmd_compile, "run": cmd_run}
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
