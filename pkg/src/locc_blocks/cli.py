"""Command-line entry point.

    locc-blocks --config run.json [--mode enumerate|sample|verify] [--seed N] [--out PATH]
    locc-blocks --selftest [--seed N] [--grid "N=1,2;cases=10"]

Exit codes: 0 all checks passed, 1 a check failed, 2 bad configuration.

Config file::

    {
      "protocol": "bipartite-diagonal",
      "operation": {"kind": "diagonal", "control_width": 1,
                    "blocks": [[[[1,0],[0,0]],[[0,0],[1,0]]], ...]},
      "initial_state": {"labels": ["A", "B"], "amps": [[1,0],[0,0],[0,0],[0,0]]},
      "mode": "enumerate",
      "seed": 7
    }

``operation.blocks`` may be the string ``"haar"`` (with ``target_width``)
and ``initial_state`` may be ``"random"``; both draw from ``seed``.
``operation.perm`` may be ``"random"`` for the multiqubit protocol.
``options`` passes ``x_step`` (offdiagonal) or ``bob_first`` (three-party).
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import acceptance
from .blockops import KINDS, BlockOperation, Permutation
from .linalg import haar_random_unitary, random_unit_vector
from .protocol import (
    PROTOCOLS,
    bipartite_labels,
    enumerate_branches,
    expected_ledger,
    multiqubit_labels,
    three_party_labels,
)
from .statevec import StateVector
from .verify import verify_trace

SCHEMA = 1
MODES = ("enumerate", "sample", "verify")
OPTIONS = {
    "bipartite-offdiagonal": {"x_step": int},
    "three-party": {"bob_first": bool},
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    protocol: str
    operation: BlockOperation
    initial_state: StateVector
    mode: str
    seed: Optional[int]
    options: dict
    output: Optional[str] = None


def _operation_from_json(data, rng) -> BlockOperation:
    if not isinstance(data, dict):
        raise ConfigError("operation: expected an object")
    data = dict(data)
    kind = data.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"operation.kind: expected one of {list(KINDS)}, got {kind!r}")
    try:
        n = int(data["control_width"])
    except (KeyError, TypeError, ValueError):
        raise ConfigError("operation.control_width: expected an integer") from None
    if data.get("blocks") == "haar":
        if rng is None:
            raise ConfigError("seed: required for haar blocks")
        try:
            m = int(data["target_width"])
        except (KeyError, TypeError, ValueError):
            raise ConfigError("operation.target_width: required with haar blocks") from None
        if m < 1:
            raise ConfigError("operation.target_width: must be >= 1")
        if data.get("perm") == "random":
            data["perm"] = list(Permutation.random(n, rng).map)
        blocks = [haar_random_unitary(2**m, rng) for _ in range(2**n)]
        data["blocks"] = [[[[z.real, z.imag] for z in row] for row in b] for b in blocks]
    elif data.get("perm") == "random":
        if rng is None:
            raise ConfigError("seed: required for a random perm")
        data["perm"] = list(Permutation.random(n, rng).map)
    try:
        op = BlockOperation.from_json(data)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"operation: {exc}") from None
    return op


def _default_labels(protocol: str, op: BlockOperation) -> list[str]:
    m = op.target_width
    if protocol == "bipartite-multiqubit":
        return multiqubit_labels(op.control_width, m)
    if protocol == "three-party":
        return three_party_labels(m)
    return bipartite_labels(m)


def parse_config(data: dict, mode: Optional[str] = None, seed: Optional[int] = None,
                 output: Optional[str] = None) -> RunConfig:
    """Validate a config mapping; flags override the file's mode/seed/output."""
    if not isinstance(data, dict):
        raise ConfigError("config: expected a JSON object")
    protocol = data.get("protocol")
    if protocol not in PROTOCOLS:
        raise ConfigError(f"protocol: expected one of {list(PROTOCOLS)}, got {protocol!r}")
    mode = mode or data.get("mode", "enumerate")
    if mode not in MODES:
        raise ConfigError(f"mode: expected one of {list(MODES)}, got {mode!r}")
    if seed is None:
        seed = data.get("seed")
    if seed is not None and not isinstance(seed, int):
        raise ConfigError("seed: expected an integer")
    rng = np.random.default_rng(seed) if seed is not None else None

    if "operation" not in data:
        raise ConfigError("operation: missing")
    op = _operation_from_json(data["operation"], rng)

    expected_kind = {
        "bipartite-diagonal": ("diagonal",),
        "bipartite-offdiagonal": ("offdiagonal",),
        "bipartite-multiqubit": KINDS,
        "three-party": KINDS,
    }[protocol]
    if op.kind not in expected_kind:
        raise ConfigError(f"operation.kind: {protocol} needs {' or '.join(expected_kind)}, got {op.kind!r}")
    if protocol in ("bipartite-diagonal", "bipartite-offdiagonal") and op.control_width != 1:
        raise ConfigError(f"operation.control_width: {protocol} needs 1")
    if protocol == "three-party" and op.control_width != 2:
        raise ConfigError("operation.control_width: three-party needs 2")

    init = data.get("initial_state")
    if init is None:
        raise ConfigError("initial_state: missing")
    if init == "random":
        if rng is None:
            raise ConfigError("seed: required for a random initial_state")
        labels = _default_labels(protocol, op)
        psi0 = StateVector(tuple(labels), random_unit_vector(2 ** len(labels), rng))
    else:
        try:
            psi0 = StateVector.from_json(init)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"initial_state: {exc}") from None
        if abs(psi0.norm() - 1.0) > 1e-10:
            raise ConfigError("initial_state: not normalized")

    options = data.get("options", {})
    allowed = OPTIONS.get(protocol, {})
    if not isinstance(options, dict):
        raise ConfigError("options: expected an object")
    for key, value in options.items():
        if key not in allowed:
            raise ConfigError(f"options.{key}: not an option of {protocol}")
        if not isinstance(value, allowed[key]):
            raise ConfigError(f"options.{key}: expected {allowed[key].__name__}")
    return RunConfig(protocol, op, psi0, mode, seed, dict(options), output or data.get("output"))


def cmd_run(config: RunConfig) -> tuple[int, dict]:
    runner = PROTOCOLS[config.protocol]
    n = config.operation.control_width
    ledger = expected_ledger(config.protocol, n)
    try:
        traces = enumerate_branches(runner, config.operation, config.initial_state, **config.options)
    except ValueError as exc:
        raise ConfigError(f"operation: {exc}") from None
    if config.mode == "sample":
        if config.seed is None:
            raise ConfigError("seed: required for sample mode")
        probs = np.array([t.probability for t in traces])
        pick = int(np.random.default_rng(config.seed).choice(len(traces), p=probs / probs.sum()))
        traces = [traces[pick]]
    steps = config.mode == "verify" and config.options.get("x_step", 5) == 5
    reports = [verify_trace(t, config.operation, config.initial_state, ledger, steps=steps) for t in traces]
    passed = all(r.passed for r in reports)
    report = {
        "schema": SCHEMA,
        "protocol": config.protocol,
        "mode": config.mode,
        "seed": config.seed,
        "options": config.options,
        "operation": config.operation.to_json(),
        "initial_state": config.initial_state.to_json(),
        "expected_ledger": ledger.to_json(),
        "ledger": traces[0].ledger.summary() if traces else "",
        "branch_count": len(reports),
        "max_error": max((r.max_error for r in reports), default=0.0),
        "passed": passed,
        "branches": [r.to_json() for r in reports],
        "failures": [
            f"{config.protocol} branch {r.bits}: {msg}" for r in reports for msg in r.failures()
        ],
    }
    if config.mode == "sample":
        report["traces"] = [t.to_json() for t in traces]
    return (0 if passed else 1), report


def summarize(report: dict) -> str:
    lines = [
        f"{report['protocol']} ({report['mode']}): {report['branch_count']} branches, "
        f"ledger {report['ledger']}, max amplitude error {report['max_error']:.2e}"
    ]
    for br in report["branches"]:
        status = "ok" if br["passed"] else "FAIL"
        lines.append(
            f"  branch {''.join(map(str, br['bits']))}: p={br['probability']:.4f} "
            f"fidelity={br['fidelity']:.12f} {status}"
        )
    lines.extend(f"  {msg}" for msg in report["failures"])
    lines.append("PASS" if report["passed"] else "FAIL")
    return "\n".join(lines)


def cmd_selftest(seed: int, grid: Optional[str], corrupt: bool = False) -> tuple[int, dict]:
    try:
        g = acceptance.parse_grid(grid, seed)
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from None
    g.corrupt_correction_order = corrupt
    results = acceptance.run_all(g)
    passed = all(r.passed for r in results)
    report = {
        "schema": SCHEMA,
        "selftest": True,
        "seed": seed,
        "grid": grid or "default",
        "passed": passed,
        "criteria": [r.to_json() for r in results],
    }
    first = next((r for r in results if not r.passed), None)
    if first is not None:
        report["first_failure"] = f"criterion {first.number} ({first.name}): {first.failures[0]}"
    return (0 if passed else 1), report


def _dump(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def _emit(report: dict, out: Optional[str], text: str) -> None:
    if out == "-":
        sys.stdout.write(_dump(report))
        return
    if out:
        with open(out, "w") as fh:
            fh.write(_dump(report))
    print(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="locc-blocks",
        description="Run and verify LOCC protocols for nonlocal block operations.",
    )
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--mode", choices=MODES, help="override the config's mode")
    p.add_argument("--seed", type=int, help="seed for random blocks/states/sampling")
    p.add_argument("--out", help="write the JSON report here ('-' for stdout)")
    p.add_argument("--selftest", action="store_true", help="run the acceptance grid")
    p.add_argument("--grid", help='selftest grid, e.g. "N=1" or "N=1,2;cases=10"')
    p.add_argument("--corrupt-correction-order", action="store_true",
                   help=argparse.SUPPRESS)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.selftest:
            code, report = cmd_selftest(args.seed if args.seed is not None else 0, args.grid,
                                        args.corrupt_correction_order)
            lines = [
                f"[{'PASS' if c['passed'] else 'FAIL'}] criterion {c['criterion']} ({c['name']}): "
                f"{c['cases']} cases, {c['branches']} branches, max amplitude error {c['max_error']:.2e}"
                for c in report["criteria"]
            ]
            if "first_failure" in report:
                lines.append(f"first failure: {report['first_failure']}")
            _emit(report, args.out, "\n".join(lines))
            return code
        if not args.config:
            raise ConfigError("config: --config PATH or --selftest is required")
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"config: cannot read {args.config}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: invalid JSON ({exc})") from None
        config = parse_config(data, args.mode, args.seed, args.out)
        code, report = cmd_run(config)
        _emit(report, config.output, summarize(report))
        return code
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
