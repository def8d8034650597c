"""LOCC schedules for block operations.

Each runner takes the block operation, the joint input state of the data
qubits and an explicit assignment of measurement outcomes (a *branch*), and
returns a :class:`ProtocolTrace`.  Gates are checked against the node layout
as they are issued; a gate touching another party's qubit raises
:class:`LocalityViolation`.

Bell pairs are ``(|00> + |11>)/sqrt(2)`` and are the only state shared
between parties.  Classical messages are a synchronous ordered log.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .blockops import (
    BlockOperation,
    Permutation,
    build_matrix,
    named_gate,
    permutation_operator,
    xor_mask,
)
from .statevec import ImpossibleBranch, MeasurementOutcome, StateVector, apply_gate, bell_pair, measure_branch, product_state

ALICE, BOB, CHARLIE = "Alice", "Bob", "Charlie"


class LocalityViolation(RuntimeError):
    """A party tried to act on a qubit it does not hold."""


@dataclass(frozen=True)
class NodeLayout:
    parties: tuple[str, ...]
    owns: dict
    device_holder: str

    def __post_init__(self):
        for q, p in self.owns.items():
            if p not in self.parties:
                raise ValueError(f"qubit {q!r} assigned to unknown party {p!r}")
        if self.device_holder not in self.parties:
            raise ValueError(f"device holder {self.device_holder!r} is not a party")

    def owner(self, qubit: str) -> str:
        try:
            return self.owns[qubit]
        except KeyError:
            raise KeyError(f"qubit {qubit!r} is not in the layout") from None

    def to_json(self) -> dict:
        return {"parties": list(self.parties), "owns": dict(self.owns), "device_holder": self.device_holder}


# -- events ------------------------------------------------------------------


@dataclass(frozen=True)
class EntangleEvent:
    step: str
    parties: tuple[str, str]
    qubits: tuple[str, str]

    def to_json(self) -> dict:
        return {"type": "entangle", "step": self.step, "parties": list(self.parties), "qubits": list(self.qubits)}


@dataclass(frozen=True)
class GateEvent:
    step: str
    party: str
    gate: str
    targets: tuple[str, ...]
    # index into the event log of the message this gate is conditioned on
    condition: Optional[int] = None
    applied: bool = True

    @property
    def is_correction(self) -> bool:
        return self.condition is not None

    def to_json(self) -> dict:
        return {
            "type": "gate",
            "step": self.step,
            "party": self.party,
            "gate": self.gate,
            "targets": list(self.targets),
            "condition": self.condition,
            "applied": self.applied,
        }


@dataclass(frozen=True)
class MeasureEvent:
    step: str
    party: str
    qubit: str
    bit: int
    probability: float

    def to_json(self) -> dict:
        return {
            "type": "measure",
            "step": self.step,
            "party": self.party,
            "qubit": self.qubit,
            "bit": self.bit,
            "probability": self.probability,
        }


@dataclass(frozen=True)
class MessageEvent:
    step: str
    sender: str
    receiver: str
    payload: int

    def __post_init__(self):
        if self.sender == self.receiver:
            raise ValueError("a message needs distinct sender and receiver")

    def to_json(self) -> dict:
        return {
            "type": "message",
            "step": self.step,
            "from": self.sender,
            "to": self.receiver,
            "payload": self.payload,
        }


Event = Union[EntangleEvent, GateEvent, MeasureEvent, MessageEvent]


def _pair_key(p: str, q: str) -> str:
    return "-".join(sorted((p, q)))


@dataclass
class ResourceLedger:
    """Ebits per unordered party pair, cbits per directed pair."""

    ebits: dict = field(default_factory=dict)
    cbits: dict = field(default_factory=dict)

    def add_ebit(self, p: str, q: str) -> None:
        key = _pair_key(p, q)
        self.ebits[key] = self.ebits.get(key, 0) + 1

    def add_cbit(self, sender: str, receiver: str) -> None:
        key = f"{sender}->{receiver}"
        self.cbits[key] = self.cbits.get(key, 0) + 1

    @property
    def total_ebits(self) -> int:
        return sum(self.ebits.values())

    @property
    def total_cbits(self) -> int:
        return sum(self.cbits.values())

    def __eq__(self, other) -> bool:
        if not isinstance(other, ResourceLedger):
            return NotImplemented
        strip = lambda d: {k: v for k, v in d.items() if v}  # noqa: E731
        return strip(self.ebits) == strip(other.ebits) and strip(self.cbits) == strip(other.cbits)

    def summary(self) -> str:
        return f"{self.total_ebits} ebits, {self.total_cbits} cbits"

    def to_json(self) -> dict:
        return {"ebits": dict(sorted(self.ebits.items())), "cbits": dict(sorted(self.cbits.items()))}


@dataclass(frozen=True, eq=False)
class ProtocolTrace:
    protocol: str
    branch: tuple[MeasurementOutcome, ...]
    events: tuple
    ledger: ResourceLedger
    final_state: StateVector
    layout: NodeLayout
    # state after each step, keyed by step id
    snapshots: dict
    # the branch as requested, in the runner's argument order
    bits: tuple = ()

    @property
    def probability(self) -> float:
        return float(np.prod([o.probability for o in self.branch]))

    def to_json(self) -> dict:
        return {
            "protocol": self.protocol,
            "bits": list(self.bits),
            "branch": [o.to_json() for o in self.branch],
            "probability": self.probability,
            "events": [e.to_json() for e in self.events],
            "ledger": self.ledger.to_json(),
            "final_state": self.final_state.to_json(),
        }


# -- engine --------------------------------------------------------------------


class _Run:
    """Mutable scratchpad for one protocol execution."""

    def __init__(self, state: StateVector, layout: NodeLayout):
        self.state = state
        self.layout = layout
        self.events: list[Event] = []
        self.ledger = ResourceLedger()
        self.outcomes: list[MeasurementOutcome] = []
        self.snapshots: dict[str, StateVector] = {}

    def share_pair(self, step: str, qa: str, qb: str) -> None:
        pa, pb = self.layout.owner(qa), self.layout.owner(qb)
        self.state = product_state([self.state, bell_pair(qa, qb)])
        self.events.append(EntangleEvent(step, (pa, pb), (qa, qb)))
        self.ledger.add_ebit(pa, pb)

    def gate(self, step: str, party: str, name: str, matrix, targets: Sequence[str],
             condition: Optional[int] = None) -> None:
        targets = tuple(targets)
        for q in targets:
            if self.layout.owner(q) != party:
                raise LocalityViolation(
                    f"step {step}: {party} applies {name} to {q!r}, held by {self.layout.owner(q)}"
                )
        applied = True
        if condition is not None:
            msg = self.events[condition]
            if not isinstance(msg, MessageEvent) or msg.receiver != party:
                raise LocalityViolation(f"step {step}: {party} conditions {name} on a message it did not receive")
            applied = msg.payload == 1
        if applied:
            self.state = apply_gate(self.state, matrix, targets)
        self.events.append(GateEvent(step, party, name, targets, condition, applied))

    def measure(self, step: str, party: str, qubit: str, bit: int) -> int:
        if self.layout.owner(qubit) != party:
            raise LocalityViolation(f"step {step}: {party} measures {qubit!r}, held by {self.layout.owner(qubit)}")
        self.state, outcome = measure_branch(self.state, qubit, bit)
        self.outcomes.append(outcome)
        self.events.append(MeasureEvent(step, party, qubit, bit, outcome.probability))
        return bit

    def send(self, step: str, sender: str, receiver: str, bit: int) -> int:
        self.events.append(MessageEvent(step, sender, receiver, bit))
        self.ledger.add_cbit(sender, receiver)
        return len(self.events) - 1

    def snap(self, step: str) -> None:
        self.snapshots[step] = self.state

    def trace(self, protocol: str, bits: Sequence[int]) -> ProtocolTrace:
        return ProtocolTrace(
            protocol,
            tuple(self.outcomes),
            tuple(self.events),
            self.ledger,
            self.state,
            self.layout,
            dict(self.snapshots),
            tuple(bits),
        )


def _check_bits(branch: Sequence[int], width: int) -> tuple[int, ...]:
    bits = tuple(int(b) for b in branch)
    if len(bits) != width or any(b not in (0, 1) for b in bits):
        raise ValueError(f"branch must be {width} bits, got {tuple(branch)}")
    return bits


def _check_input(psi0: StateVector, op: BlockOperation, n_controls: int, ancillas: Sequence[str]) -> None:
    want = op.control_width + op.target_width
    if psi0.n != want:
        raise ValueError(f"operation acts on {want} qubits but the input state has {psi0.n}")
    if op.control_width != n_controls:
        raise ValueError(f"operation has control_width {op.control_width}, protocol needs {n_controls}")
    clash = set(psi0.labels) & set(ancillas)
    if clash:
        raise ValueError(f"input labels {sorted(clash)} collide with ancilla labels")


def _bipartite(
    protocol: str,
    op: BlockOperation,
    psi0: StateVector,
    a_bits: tuple[int, ...],
    b_bits: tuple[int, ...],
    alice_anc: list[str],
    bob_anc: list[str],
    r_step: int = 5,
    correction_order: str = "r_first",
) -> ProtocolTrace:
    n = op.control_width
    controls = list(psi0.labels[:n])
    targets = list(psi0.labels[n:])
    _check_input(psi0, op, n, alice_anc + bob_anc)
    if correction_order not in ("r_first", "z_first"):
        raise ValueError(f"unknown correction order {correction_order!r}")
    owns = {q: ALICE for q in controls + alice_anc}
    owns.update({q: BOB for q in targets + bob_anc})
    run = _Run(psi0, NodeLayout((ALICE, BOB), owns, BOB))

    for qa, qb in zip(alice_anc, bob_anc):
        run.share_pair("0", qa, qb)
    run.snap("0")

    x, h, z, cnot = (named_gate(g) for g in ("X", "H", "Z", "CNOT"))
    r_name = "X" if op.kind == "offdiagonal" else "R"
    r_matrix = permutation_operator(op.perm)
    apply_r = op.perm != Permutation.identity(n)

    def alice_r(step: str) -> None:
        run.gate(step, ALICE, r_name, r_matrix, controls)

    # step 1
    for y, anc in zip(controls, alice_anc):
        run.gate("1", ALICE, "CNOT", cnot, [y, anc])
    a_msgs = []
    for anc, a in zip(alice_anc, a_bits):
        run.measure("1", ALICE, anc, a)
        a_msgs.append(run.send("1", ALICE, BOB, a))
    run.snap("1")
    if apply_r and r_step == 1:
        alice_r("1")

    # step 2
    for anc, msg in zip(bob_anc, a_msgs):
        run.gate("2", BOB, "X", x, [anc], condition=msg)
    run.snap("2")
    if apply_r and r_step == 2:
        alice_r("2")

    # step 3
    run.gate("3", BOB, "U", build_matrix(op), bob_anc + targets)
    run.snap("3")
    if apply_r and r_step == 3:
        alice_r("3")

    # step 4
    for anc in bob_anc:
        run.gate("4", BOB, "H", h, [anc])
    b_msgs = []
    for anc, b in zip(bob_anc, b_bits):
        run.measure("4", BOB, anc, b)
        b_msgs.append(run.send("4", BOB, ALICE, b))
    run.snap("4")

    # step 5
    def z_corrections() -> None:
        for y, msg in zip(controls, b_msgs):
            run.gate("5", ALICE, "Z", z, [y], condition=msg)

    if correction_order == "z_first":
        z_corrections()
        if apply_r and r_step >= 4:
            alice_r("5")
    else:
        if apply_r and r_step >= 4:
            alice_r("5")
        z_corrections()
    run.snap("5")
    return run.trace(protocol, a_bits + b_bits)


def bipartite_labels(m: int) -> list[str]:
    """Default data-qubit labels for the one-control bipartite protocols."""
    return ["A", "B"] if m == 1 else ["A"] + [f"B_{j}" for j in range(1, m + 1)]


def multiqubit_labels(n: int, m: int) -> list[str]:
    return [f"Y{i}" for i in range(1, n + 1)] + [f"Z{j}" for j in range(1, m + 1)]


def three_party_labels(m: int = 1) -> list[str]:
    return ["A", "B", "C"] if m == 1 else ["A", "B"] + [f"C_{j}" for j in range(1, m + 1)]


def run_bipartite_diagonal(u: BlockOperation, psi0: StateVector, branch: Sequence[int]) -> ProtocolTrace:
    """Diagonal blocks on one control qubit: 1 ebit, one cbit each way.

    ``psi0``'s first label is Alice's control qubit, the rest are Bob's.
    ``branch`` is ``(a, b)``: Alice's result on A1, Bob's result on B1.
    """
    if u.kind != "diagonal" or u.control_width != 1:
        raise ValueError("run_bipartite_diagonal needs a diagonal operation with control_width 1")
    a, b = _check_bits(branch, 2)
    return _bipartite("bipartite-diagonal", u, psi0, (a,), (b,), ["A1"], ["B1"])


def run_bipartite_offdiagonal(
    u: BlockOperation, psi0: StateVector, branch: Sequence[int], x_step: int = 5
) -> ProtocolTrace:
    """Offdiagonal blocks: the diagonal schedule plus an X on Alice's control.

    ``x_step`` places that X right after step 1..4, or (5, the default) at
    the start of step 5 ahead of the Z correction.
    """
    if u.kind != "offdiagonal":
        raise ValueError("run_bipartite_offdiagonal needs an offdiagonal operation")
    if x_step not in (1, 2, 3, 4, 5):
        raise ValueError(f"x_step must be in 1..5, got {x_step}")
    a, b = _check_bits(branch, 2)
    return _bipartite("bipartite-offdiagonal", u, psi0, (a,), (b,), ["A1"], ["B1"], r_step=x_step)


def run_bipartite_multiqubit(
    u: BlockOperation, psi0: StateVector, branch: Sequence[int], correction_order: str = "r_first"
) -> ProtocolTrace:
    """Permutation blocks on N control qubits: N ebits, N cbits each way.

    ``psi0``'s first N labels are Alice's ``Y`` register; ``branch`` is
    ``(a_1..a_N, b_1..b_N)``.  ``correction_order="z_first"`` swaps the two
    step-5 corrections and exists only to show that the swap breaks things.
    """
    n = u.control_width
    bits = _check_bits(branch, 2 * n)
    alice_anc = [f"A{i}" for i in range(1, n + 1)]
    bob_anc = [f"B{i}" for i in range(1, n + 1)]
    return _bipartite(
        "bipartite-multiqubit", u, psi0, bits[:n], bits[n:], alice_anc, bob_anc,
        correction_order=correction_order,
    )


def run_three_party_diagonal(
    u: BlockOperation, psi0: StateVector, branch: Sequence[int], bob_first: bool = False
) -> ProtocolTrace:
    """Two control parties (Alice: A, Bob: B) and Charlie holding the device.

    ``branch`` is ``(a, b, c1, c2)``: results on A1, B1, C1, C2.
    ``bob_first`` runs Bob's step 1' before Alice's step 1.

    Besides diagonal operations, any permutation that is an XOR mask is
    accepted: each control party then flips its own qubit before its Z
    correction.  Other permutations cannot be split between parties.
    """
    if u.control_width != 2:
        raise ValueError("three-party protocol needs control_width 2")
    mask = xor_mask(u.perm)
    if mask is None:
        raise ValueError(
            f"perm {list(u.perm.map)} is not a product of single-qubit operations; "
            "it cannot be split between two control parties"
        )
    a, b, c1, c2 = _check_bits(branch, 4)
    ctrl_a, ctrl_b = psi0.labels[0], psi0.labels[1]
    targets = list(psi0.labels[2:])
    _check_input(psi0, u, 2, ["A1", "B1", "C1", "C2"])
    owns = {ctrl_a: ALICE, "A1": ALICE, ctrl_b: BOB, "B1": BOB, "C1": CHARLIE, "C2": CHARLIE}
    owns.update({q: CHARLIE for q in targets})
    run = _Run(psi0, NodeLayout((ALICE, BOB, CHARLIE), owns, CHARLIE))
    run.share_pair("0", "A1", "C1")
    run.share_pair("0", "B1", "C2")
    run.snap("0")

    x, h, z, cnot = (named_gate(g) for g in ("X", "H", "Z", "CNOT"))
    msgs: dict[str, int] = {}

    def step1() -> None:
        run.gate("1", ALICE, "CNOT", cnot, [ctrl_a, "A1"])
        run.measure("1", ALICE, "A1", a)
        msgs["a"] = run.send("1", ALICE, CHARLIE, a)
        run.snap("1")

    def step1p() -> None:
        run.gate("1'", BOB, "CNOT", cnot, [ctrl_b, "B1"])
        run.measure("1'", BOB, "B1", b)
        msgs["b"] = run.send("1'", BOB, CHARLIE, b)
        run.snap("1'")

    for step in (step1p, step1) if bob_first else (step1, step1p):
        step()

    run.gate("2", CHARLIE, "X", x, ["C1"], condition=msgs["a"])
    run.gate("2", CHARLIE, "X", x, ["C2"], condition=msgs["b"])
    run.snap("2")

    run.gate("3", CHARLIE, "U", build_matrix(u), ["C1", "C2"] + targets)
    run.snap("3")

    run.gate("4", CHARLIE, "H", h, ["C1"])
    run.gate("4", CHARLIE, "H", h, ["C2"])
    run.measure("4", CHARLIE, "C1", c1)
    run.measure("4", CHARLIE, "C2", c2)
    msgs["c1"] = run.send("4", CHARLIE, ALICE, c1)
    msgs["c2"] = run.send("4", CHARLIE, BOB, c2)
    run.snap("4")

    if mask & 0b10:
        run.gate("5", ALICE, "X", x, [ctrl_a])
    run.gate("5", ALICE, "Z", z, [ctrl_a], condition=msgs["c1"])
    if mask & 0b01:
        run.gate("5'", BOB, "X", x, [ctrl_b])
    run.gate("5'", BOB, "Z", z, [ctrl_b], condition=msgs["c2"])
    run.snap("5")
    return run.trace("three-party", (a, b, c1, c2))


# -- branch enumeration ----------------------------------------------------------

Runner = Callable[..., ProtocolTrace]


def branch_width(runner: Runner, u: BlockOperation) -> int:
    if runner is run_three_party_diagonal:
        return 4
    if runner in (run_bipartite_diagonal, run_bipartite_offdiagonal):
        return 2
    if runner is run_bipartite_multiqubit:
        return 2 * u.control_width
    raise ValueError(f"unknown protocol runner {runner!r}")


def enumerate_branches(runner: Runner, u: BlockOperation, psi0: StateVector, **kwargs) -> list[ProtocolTrace]:
    """Run ``runner`` once per outcome assignment, in binary order.

    Zero-weight branches are skipped (none occur for these protocols).
    """
    traces = []
    for bits in itertools.product((0, 1), repeat=branch_width(runner, u)):
        try:
            traces.append(runner(u, psi0, bits, **kwargs))
        except ImpossibleBranch:
            continue
    return traces


PROTOCOLS: dict[str, Runner] = {
    "bipartite-diagonal": run_bipartite_diagonal,
    "bipartite-offdiagonal": run_bipartite_offdiagonal,
    "bipartite-multiqubit": run_bipartite_multiqubit,
    "three-party": run_three_party_diagonal,
}


def expected_ledger(protocol: str, n: int = 1) -> ResourceLedger:
    """Resource counts each protocol is supposed to consume."""
    led = ResourceLedger()
    if protocol == "three-party":
        led.add_ebit(ALICE, CHARLIE)
        led.add_ebit(BOB, CHARLIE)
        for s, r in ((ALICE, CHARLIE), (BOB, CHARLIE), (CHARLIE, ALICE), (CHARLIE, BOB)):
            led.add_cbit(s, r)
        return led
    if protocol not in PROTOCOLS:
        raise ValueError(f"unknown protocol {protocol!r}")
    if protocol != "bipartite-multiqubit":
        n = 1
    for _ in range(n):
        led.add_ebit(ALICE, BOB)
        led.add_cbit(ALICE, BOB)
        led.add_cbit(BOB, ALICE)
    return led
