"""Ground truth for protocol traces.

``oracle_apply`` builds the block operator on its own, from outer products,
and multiplies it into the input amplitudes.  It does not go through
``build_matrix`` or ``apply_gate``, so a bug in either shows up as a
disagreement instead of cancelling out.

``check_appendix_steps`` rebuilds the state after every protocol step from
its closed form by summing over control-register basis indices, and compares
it to the snapshots the engine recorded.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blockops import BlockOperation
from .linalg import EPS_U
from .protocol import GateEvent, MeasureEvent, MessageEvent, ProtocolTrace, ResourceLedger
from .statevec import StateVector, fidelity, max_amp_error


def oracle_apply(u: BlockOperation, psi0: StateVector) -> StateVector:
    """Directly apply sum_i |p_i><i| (x) u_i to ``psi0`` (first N labels control)."""
    n, d = u.control_width, u.block_dim
    size = 2**n * d
    if psi0.amps.size != size:
        raise ValueError(f"operation has dimension {size}, state has {psi0.amps.size}")
    eye = np.eye(2**n)
    mat = np.zeros((size, size), dtype=np.complex128)
    for i, block in enumerate(u.blocks):
        mat += np.kron(np.outer(eye[u.perm(i)], eye[i]), block)
    return StateVector(psi0.labels, mat @ psi0.amps)


@dataclass(frozen=True, eq=False)
class StepAssertion:
    step_id: str
    expected: StateVector
    observed: StateVector
    max_error: float
    passed: bool

    def to_json(self) -> dict:
        return {"step": self.step_id, "max_error": self.max_error, "passed": self.passed}


def _bits(x: int, n: int) -> list[int]:
    return [(x >> (n - 1 - i)) & 1 for i in range(n)]


def _from_bits(bits) -> int:
    out = 0
    for b in bits:
        out = (out << 1) | int(b)
    return out


def _closed_form_states(u: BlockOperation, psi0: StateVector, reg_b, a: int, b: int) -> dict:
    """Expected states after steps 1..5 over labels ``reg_b + Y + Z`` (steps 1-3)
    or ``Y + Z`` (steps 4-5).  ``a``/``b`` pack the ancilla outcomes, first bit MSB.
    """
    n, d = u.control_width, u.block_dim
    ys = list(psi0.labels[:n])
    zs = list(psi0.labels[n:])
    # v[k] = y_k |eta_k>, the target-register part attached to control value k
    v = psi0.amps.reshape(2**n, d)
    dim_n = 2**n
    s1 = np.zeros((dim_n, dim_n, d), dtype=np.complex128)
    s2 = np.zeros_like(s1)
    s3 = np.zeros_like(s1)
    s4 = np.zeros((dim_n, d), dtype=np.complex128)
    s5 = np.zeros_like(s4)
    for k in range(dim_n):
        uv = u.blocks[k] @ v[k]
        p = u.perm(k)
        sign = (-1) ** sum(lb * bb for lb, bb in zip(_bits(p, n), _bits(b, n)))
        s1[k ^ a, k] += v[k]
        s2[k, k] += v[k]
        s3[p, k] += uv
        s4[k] += sign * uv
        s5[p] += uv
    full = list(reg_b) + ys + zs
    return {
        "1": StateVector(full, s1.reshape(-1)),
        "2": StateVector(full, s2.reshape(-1)),
        "3": StateVector(full, s3.reshape(-1)),
        "4": StateVector(ys + zs, s4.reshape(-1)),
        "5": StateVector(ys + zs, s5.reshape(-1)),
    }


def check_appendix_steps(trace: ProtocolTrace, u: BlockOperation, psi0: StateVector,
                         tol: float = EPS_U) -> list[StepAssertion]:
    """Compare every recorded step against its closed form.

    Works on bipartite traces (any N, corrections at step 5) and on
    three-party traces, where the step-1 check is made once both control
    parties have measured.
    """
    n = u.control_width
    for e in trace.events:
        if isinstance(e, GateEvent) and e.gate in ("R", "X") and e.party != trace.layout.device_holder \
                and e.step not in ("5", "5'"):
            raise ValueError(f"closed forms assume Alice's permutation at step 5, found one at step {e.step}")

    measured = [e for e in trace.events if isinstance(e, MeasureEvent)]
    if trace.protocol == "three-party":
        reg_b = ["C1", "C2"]
        by_qubit = {m.qubit: m.bit for m in measured}
        a = _from_bits([by_qubit["A1"], by_qubit["B1"]])
        b = _from_bits([by_qubit["C1"], by_qubit["C2"]])
        last_first_step = [m.step for m in measured if m.qubit in ("A1", "B1")][-1]
        observed = {"1": trace.snapshots[last_first_step]}
    else:
        reg_b = [f"B{i}" for i in range(1, n + 1)]
        by_qubit = {m.qubit: m.bit for m in measured}
        a = _from_bits([by_qubit[f"A{i}"] for i in range(1, n + 1)])
        b = _from_bits([by_qubit[f"B{i}"] for i in range(1, n + 1)])
        observed = {"1": trace.snapshots["1"]}
    for step in ("2", "3", "4", "5"):
        observed[step] = trace.snapshots[step]

    expected = _closed_form_states(u, psi0, reg_b, a, b)
    results = []
    for step in ("1", "2", "3", "4", "5"):
        exp, obs = expected[step], observed[step]
        if set(exp.labels) != set(obs.labels):
            results.append(StepAssertion(step, exp, obs, float("inf"), False))
            continue
        err = max_amp_error(exp, obs)
        results.append(StepAssertion(step, exp, obs, err, err <= tol))
    return results


def check_resources(trace: ProtocolTrace, expected: ResourceLedger) -> bool:
    return trace.ledger == expected


def locality_violations(trace: ProtocolTrace) -> list[str]:
    """Structural LOCC audit of the event log.

    Every gate must act only on qubits its party holds, and every
    conditioned gate must follow a message addressed to that party.
    """
    problems = []
    owns = trace.layout.owns
    for idx, e in enumerate(trace.events):
        if not isinstance(e, GateEvent):
            continue
        holders = {owns.get(q) for q in e.targets}
        if holders != {e.party}:
            problems.append(f"event {idx}: {e.party} {e.gate} on {list(e.targets)} spans {sorted(map(str, holders))}")
        if e.condition is not None:
            if not (0 <= e.condition < idx):
                problems.append(f"event {idx}: {e.gate} conditioned on a message not yet sent")
                continue
            msg = trace.events[e.condition]
            if not isinstance(msg, MessageEvent) or msg.receiver != e.party:
                problems.append(f"event {idx}: {e.gate} conditioned on event {e.condition}, not a message to {e.party}")
            elif e.applied != (msg.payload == 1):
                problems.append(f"event {idx}: {e.gate} applied={e.applied} disagrees with payload {msg.payload}")
    return problems


def measurement_probabilities(trace: ProtocolTrace) -> list[float]:
    return [o.probability for o in trace.branch]


@dataclass(frozen=True, eq=False)
class BranchReport:
    bits: tuple[int, ...]
    probability: float
    fidelity: float
    max_error: float
    resources_ok: bool
    locality: tuple[str, ...]
    steps: tuple[StepAssertion, ...]
    tol: float = EPS_U

    @property
    def oracle_ok(self) -> bool:
        return self.max_error <= self.tol and abs(self.fidelity - 1.0) <= self.tol

    @property
    def steps_ok(self) -> bool:
        return all(s.passed for s in self.steps)

    @property
    def passed(self) -> bool:
        return self.oracle_ok and self.resources_ok and not self.locality and self.steps_ok

    def failures(self) -> list[str]:
        out = []
        if not self.oracle_ok:
            out.append(f"final state differs from oracle (max error {self.max_error:.3e})")
        if not self.resources_ok:
            out.append("resource ledger mismatch")
        out.extend(self.locality)
        out.extend(f"step {s.step_id} mismatch (max error {s.max_error:.3e})" for s in self.steps if not s.passed)
        return out

    def to_json(self) -> dict:
        out = {
            "bits": list(self.bits),
            "probability": self.probability,
            "fidelity": self.fidelity,
            "max_error": self.max_error,
            "resources_ok": self.resources_ok,
            "locality_ok": not self.locality,
            "passed": self.passed,
        }
        if self.steps:
            out["steps"] = [s.to_json() for s in self.steps]
        return out


def verify_trace(trace: ProtocolTrace, u: BlockOperation, psi0: StateVector, expected: ResourceLedger,
                 steps: bool = False, tol: float = EPS_U) -> BranchReport:
    want = oracle_apply(u, psi0)
    return BranchReport(
        bits=trace.bits,
        probability=trace.probability,
        fidelity=fidelity(want, trace.final_state),
        max_error=max_amp_error(want, trace.final_state),
        resources_ok=check_resources(trace, expected),
        locality=tuple(locality_violations(trace)),
        steps=tuple(check_appendix_steps(trace, u, psi0, tol)) if steps else (),
        tol=tol,
    )

