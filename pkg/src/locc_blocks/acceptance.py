"""Exhaustive acceptance grid shared by ``--selftest`` and the test suite.

Each criterion draws its random inputs from a seed derived from
``(seed, criterion number, case index)`` so results do not depend on which
other criteria ran.  Criteria 9 and 10 audit every trace produced by 1-7.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .blockops import (
    Permutation,
    build_matrix,
    control_u_decomposition,
    diagonal,
    offdiagonal,
    permutation_block,
    xor_mask,
)
from .linalg import EPS_U, haar_random_unitary, kron, random_unit_vector
from .protocol import (
    ProtocolTrace,
    enumerate_branches,
    expected_ledger,
    multiqubit_labels,
    run_bipartite_diagonal,
    run_bipartite_multiqubit,
    run_bipartite_offdiagonal,
    run_three_party_diagonal,
)
from .statevec import StateVector, basis_state, max_amp_error
from .verify import check_appendix_steps, check_resources, locality_violations, oracle_apply

DEFAULT_COUNTS = {1: 100, 3: 100, 4: 50, 5: 25, 7: 50, 8: 100}
MULTIQUBIT_SHAPES = [(1, 1), (1, 2), (2, 1), (2, 2), (3, 1), (3, 2)]


@dataclass
class Grid:
    seed: int = 0
    widths: tuple[int, ...] = (1, 2, 3)
    cases: Optional[int] = None
    corrupt_correction_order: bool = False

    def count(self, criterion: int) -> int:
        return self.cases if self.cases is not None else DEFAULT_COUNTS[criterion]

    def rng(self, criterion: int, case: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, criterion, case])


def parse_grid(spec: Optional[str], seed: int = 0) -> Grid:
    """Parse ``"N=1,2;cases=10"`` style grid specs."""
    grid = Grid(seed=seed)
    if not spec or spec == "default":
        return grid
    for part in spec.split(";"):
        if not part.strip():
            continue
        key, sep, value = part.partition("=")
        key = key.strip()
        if not sep:
            raise ValueError(f"grid entry {part!r} is not key=value")
        try:
            if key == "N":
                widths = tuple(sorted({int(v) for v in value.split(",")}))
                if not widths or any(w not in (1, 2, 3) for w in widths):
                    raise ValueError
                grid.widths = widths
            elif key == "cases":
                grid.cases = int(value)
                if grid.cases < 1:
                    raise ValueError
            else:
                raise KeyError(key)
        except KeyError:
            raise ValueError(f"unknown grid key {key!r}; expected N or cases") from None
        except ValueError:
            raise ValueError(f"bad grid value for {key}: {value!r}") from None
    return grid


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool = True
    cases: int = 0
    branches: int = 0
    max_error: float = 0.0
    seconds: float = 0.0
    failures: list = field(default_factory=list)

    def fail(self, message: str) -> None:
        self.passed = False
        if len(self.failures) < 20:
            self.failures.append(message)

    def error(self, err: float) -> None:
        self.max_error = max(self.max_error, err)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        out = (
            f"[{status}] criterion {self.number} ({self.name}): {self.cases} cases, "
            f"{self.branches} branches, max amplitude error {self.max_error:.2e}, {self.seconds:.2f}s"
        )
        if self.failures:
            out += f"\n    first failure: {self.failures[0]}"
        return out

    def to_json(self) -> dict:
        return {
            "criterion": self.number,
            "name": self.name,
            "passed": self.passed,
            "cases": self.cases,
            "branches": self.branches,
            "max_error": self.max_error,
            "failures": list(self.failures),
        }


class Audit:
    """Collects structural facts about every trace for criteria 9 and 10."""

    def __init__(self):
        self.traces = 0
        self.violations: list[str] = []
        self.measurements = 0
        self.worst_probability_error = 0.0

    def add(self, trace: ProtocolTrace, where: str) -> None:
        self.traces += 1
        for v in locality_violations(trace):
            if len(self.violations) < 20:
                self.violations.append(f"{where} branch {trace.bits}: {v}")
        for o in trace.branch:
            self.measurements += 1
            self.worst_probability_error = max(self.worst_probability_error, abs(o.probability - 0.5))


def _haar_blocks(rng, count: int, dim: int) -> list:
    return [haar_random_unitary(dim, rng) for _ in range(count)]


def _random_state(labels, rng) -> StateVector:
    return StateVector(tuple(labels), random_unit_vector(2 ** len(labels), rng))


def _check_branches(res: CriterionResult, audit: Audit, traces, want: StateVector, ledger, where: str,
                    expected_branches: int) -> None:
    if len(traces) != expected_branches:
        res.fail(f"{where}: {len(traces)} branches, expected {expected_branches}")
    total_p = 0.0
    for tr in traces:
        res.branches += 1
        audit.add(tr, where)
        total_p += tr.probability
        err = max_amp_error(want, tr.final_state)
        res.error(err)
        if err > EPS_U:
            res.fail(f"{where} branch {tr.bits}: final state differs from oracle by {err:.3e}")
        if not check_resources(tr, ledger):
            res.fail(f"{where} branch {tr.bits}: ledger {tr.ledger.to_json()} != {ledger.to_json()}")
    if abs(total_p - 1.0) > EPS_U:
        res.fail(f"{where}: branch probabilities sum to {total_p}")


def criterion_1(grid: Grid, audit: Audit) -> CriterionResult:
    res = CriterionResult(1, "bipartite diagonal")
    ledger = expected_ledger("bipartite-diagonal")
    for case in range(grid.count(1)):
        rng = grid.rng(1, case)
        op = diagonal(_haar_blocks(rng, 2, 2))
        psi = _random_state(["A", "B"], rng)
        traces = enumerate_branches(run_bipartite_diagonal, op, psi)
        _check_branches(res, audit, traces, oracle_apply(op, psi), ledger, f"bipartite-diagonal case {case}", 4)
        res.cases += 1
    return res


def criterion_2(grid: Grid, audit: Audit) -> CriterionResult:
    res = CriterionResult(2, "CNOT specialization")
    x = np.array([[0, 1], [1, 0]])
    op = diagonal([np.eye(2), x])
    ledger = expected_ledger("bipartite-diagonal")
    for c, t in itertools.product((0, 1), repeat=2):
        psi = basis_state(["A", "B"], [c, t])
        want = basis_state(["A", "B"], [c, t ^ c])
        traces = enumerate_branches(run_bipartite_diagonal, op, psi)
        _check_branches(res, audit, traces, want, ledger, f"CNOT on |{c}{t}>", 4)
        res.cases += 1
    return res


def criterion_3(grid: Grid, audit: Audit) -> CriterionResult:
    res = CriterionResult(3, "bipartite offdiagonal")
    ledger = expected_ledger("bipartite-offdiagonal")
    for case in range(grid.count(3)):
        rng = grid.rng(3, case)
        op = offdiagonal(_haar_blocks(rng, 2, 2))
        psi = _random_state(["A", "B"], rng)
        where = f"bipartite-offdiagonal case {case}"
        late = enumerate_branches(run_bipartite_offdiagonal, op, psi, x_step=5)
        early = enumerate_branches(run_bipartite_offdiagonal, op, psi, x_step=1)
        _check_branches(res, audit, late, oracle_apply(op, psi), ledger, where, 4)
        for tr in early:
            audit.add(tr, where + " (early X)")
        for lt, et in zip(late, early):
            diff = max_amp_error(lt.final_state, et.final_state)
            if lt.bits != et.bits or diff > EPS_U:
                res.fail(f"{where} branch {lt.bits}: early and late X placement differ by {diff:.3e}")
        res.cases += 1
    return res


def criterion_4(grid: Grid, audit: Audit) -> CriterionResult:
    res = CriterionResult(4, "HPV reduction")
    ledger = expected_ledger("bipartite-diagonal")
    for case in range(grid.count(4)):
        rng = grid.rng(4, case)
        thetas = rng.uniform(0.0, 2 * np.pi, size=2)
        phases = np.exp(1j * thetas)
        op = diagonal([phases[0] * np.eye(2), phases[1] * np.eye(2)])
        psi = _random_state(["A", "B"], rng)
        direct = kron(np.diag(phases), np.eye(2)) @ psi.amps
        want = StateVector(psi.labels, direct)
        traces = enumerate_branches(run_bipartite_diagonal, op, psi)
        _check_branches(res, audit, traces, want, ledger, f"HPV case {case}", 4)
        res.cases += 1
    return res


def criterion_5(grid: Grid, audit: Audit) -> CriterionResult:
    res = CriterionResult(5, "multiqubit with step assertions")
    order = "z_first" if grid.corrupt_correction_order else "r_first"
    for n, m in MULTIQUBIT_SHAPES:
        if n not in grid.widths:
            continue
        ledger = expected_ledger("bipartite-multiqubit", n)
        for case in range(grid.count(5)):
            rng = grid.rng(5, 100 * n + 10 * m + case)
            op = permutation_block(Permutation.random(n, rng), _haar_blocks(rng, 2**n, 2**m))
            psi = _random_state(multiqubit_labels(n, m), rng)
            where = f"multiqubit N={n} M={m} case {case}"
            traces = enumerate_branches(run_bipartite_multiqubit, op, psi, correction_order=order)
            # step checks first so a failure names the earliest broken step
            for tr in traces:
                for step in check_appendix_steps(tr, op, psi):
                    res.error(step.max_error)
                    if not step.passed:
                        res.fail(f"{where} branch {tr.bits}: step {step.step_id} mismatch ({step.max_error:.3e})")
            _check_branches(res, audit, traces, oracle_apply(op, psi), ledger, where, 4**n)
            res.cases += 1
    return res


def criterion_6(grid: Grid, audit: Audit) -> CriterionResult:
    res = CriterionResult(6, "step-5 correction order sensitivity")
    rng = grid.rng(6, 0)
    perm = Permutation.random(2, rng)
    while xor_mask(perm) is not None:
        perm = Permutation.random(2, rng)
    op = permutation_block(perm, _haar_blocks(rng, 4, 2))
    psi = _random_state(multiqubit_labels(2, 1), rng)
    want = oracle_apply(op, psi)
    good = enumerate_branches(run_bipartite_multiqubit, op, psi)
    _check_branches(res, audit, good, want, expected_ledger("bipartite-multiqubit", 2),
                    f"multiqubit perm {list(perm.map)}", 16)
    swapped = enumerate_branches(run_bipartite_multiqubit, op, psi, correction_order="z_first")
    broken = [tr.bits for tr in swapped if max_amp_error(want, tr.final_state) > EPS_U]
    res.cases = 1
    if not broken:
        res.fail(f"perm {list(perm.map)}: Z-before-R order still matched the oracle on every branch")
    return res


def criterion_7(grid: Grid, audit: Audit) -> CriterionResult:
    res = CriterionResult(7, "three-party diagonal")
    ledger = expected_ledger("three-party")
    for case in range(grid.count(7)):
        rng = grid.rng(7, case)
        op = diagonal(_haar_blocks(rng, 4, 2))
        psi = _random_state(["A", "B", "C"], rng)
        where = f"three-party case {case}"
        alice_first = enumerate_branches(run_three_party_diagonal, op, psi)
        bob_first = enumerate_branches(run_three_party_diagonal, op, psi, bob_first=True)
        _check_branches(res, audit, alice_first, oracle_apply(op, psi), ledger, where, 16)
        for tr in bob_first:
            audit.add(tr, where + " (step 1' first)")
        for t1, t2 in zip(alice_first, bob_first):
            diff = max_amp_error(t1.final_state, t2.final_state)
            if t1.bits != t2.bits or diff > EPS_U:
                res.fail(f"{where} branch {t1.bits}: step 1 / 1' order changes the result by {diff:.3e}")
        res.cases += 1
    return res


def criterion_8(grid: Grid, audit: Audit) -> CriterionResult:
    res = CriterionResult(8, "control-U decomposition")
    for case in range(grid.count(8)):
        rng = grid.rng(8, case)
        d = 2 ** (1 + case % 2)
        op = diagonal(_haar_blocks(rng, 2, d))
        u0, cu = control_u_decomposition(op)
        err = float(np.max(np.abs(kron(np.eye(2), u0) @ cu - build_matrix(op))))
        res.error(err)
        if err > EPS_U:
            res.fail(f"case {case}: reconstruction error {err:.3e}")
        res.cases += 1
    return res


def criterion_9(audit: Audit) -> CriterionResult:
    res = CriterionResult(9, "structural LOCC audit")
    res.cases = audit.traces
    if audit.traces == 0:
        res.fail("no traces were audited")
    for v in audit.violations:
        res.fail(v)
    return res


def criterion_10(audit: Audit) -> CriterionResult:
    res = CriterionResult(10, "branch probabilities 1/2")
    res.cases = audit.measurements
    res.max_error = audit.worst_probability_error
    if audit.measurements == 0:
        res.fail("no measurements were audited")
    if audit.worst_probability_error > EPS_U:
        res.fail(f"a measurement outcome deviates from 1/2 by {audit.worst_probability_error:.3e}")
    return res


PROTOCOL_CRITERIA: list[Callable[[Grid, Audit], CriterionResult]] = [
    criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8,
]


def run_all(grid: Grid) -> list[CriterionResult]:
    audit = Audit()
    results = []
    for crit in PROTOCOL_CRITERIA:
        start = time.perf_counter()
        res = crit(grid, audit)
        res.seconds = time.perf_counter() - start
        results.append(res)
    for crit in (criterion_9, criterion_10):
        start = time.perf_counter()
        res = crit(audit)
        res.seconds = time.perf_counter() - start
        results.append(res)
    return results
