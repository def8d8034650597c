"""Labeled pure-state simulator.

A :class:`StateVector` pairs an ordered tuple of qubit labels with ``2**n``
amplitudes.  The first label is the most significant bit of the basis index,
so ``|k1 k2 ... kn>`` sits at index ``k1 k2 ... kn`` read as binary.

Every operation returns a new state; nothing is mutated in place.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .linalg import EPS_U

# branches lighter than this are treated as impossible
EPS_P = 1e-12


class ImpossibleBranch(Exception):
    """Raised when a requested measurement outcome has (numerically) zero weight.

    Kept separate from ``ValueError`` so branch enumerators can skip it.
    """

    def __init__(self, qubit: str, bit: int, probability: float):
        super().__init__(f"outcome {bit} on qubit {qubit!r} has probability {probability:.3e}")
        self.qubit = qubit
        self.bit = bit
        self.probability = probability


@dataclass(frozen=True)
class MeasurementOutcome:
    qubit: str
    bit: int
    probability: float

    def to_json(self) -> dict:
        return {"qubit": self.qubit, "bit": self.bit, "probability": self.probability}


@dataclass(frozen=True, eq=False)
class StateVector:
    labels: tuple[str, ...]
    amps: np.ndarray

    def __post_init__(self):
        labels = tuple(self.labels)
        amps = np.array(self.amps, dtype=np.complex128).reshape(-1)
        if not labels:
            raise ValueError("a state needs at least one qubit")
        seen = set()
        for lab in labels:
            if lab in seen:
                raise ValueError(f"duplicate qubit label {lab!r}")
            seen.add(lab)
        if amps.size != 2 ** len(labels):
            raise ValueError(f"{len(labels)} labels need {2 ** len(labels)} amplitudes, got {amps.size}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("state has non-finite amplitudes")
        amps.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "amps", amps)

    @property
    def n(self) -> int:
        return len(self.labels)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def tensor(self) -> np.ndarray:
        return self.amps.reshape((2,) * self.n)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown qubit label {label!r}") from None

    def reorder(self, labels: Sequence[str]) -> StateVector:
        """Same state with amplitudes laid out in ``labels`` order."""
        labels = tuple(labels)
        if sorted(labels) != sorted(self.labels):
            raise ValueError(f"label sets differ: {sorted(labels)} vs {sorted(self.labels)}")
        axes = [self.labels.index(lab) for lab in labels]
        return StateVector(labels, np.transpose(self.tensor(), axes).reshape(-1))

    def relabel(self, mapping: dict[str, str]) -> StateVector:
        return StateVector(tuple(mapping.get(lab, lab) for lab in self.labels), self.amps)

    def to_json(self) -> dict:
        return {
            "labels": list(self.labels),
            "amps": [[float(z.real), float(z.imag)] for z in self.amps],
        }

    @classmethod
    def from_json(cls, data: dict) -> StateVector:
        amps = np.asarray(data["amps"], dtype=np.float64)
        if amps.ndim != 2 or amps.shape[1] != 2:
            raise ValueError("amps must be a list of [re, im] pairs")
        return cls(tuple(data["labels"]), amps[:, 0] + 1j * amps[:, 1])


def basis_state(labels: Sequence[str], bits: Iterable[int] | int) -> StateVector:
    """Computational basis state; ``bits`` is a bit sequence or an integer index."""
    labels = tuple(labels)
    if isinstance(bits, (int, np.integer)):
        index = int(bits)
    else:
        index = 0
        for b in bits:
            index = (index << 1) | int(b)
    amps = np.zeros(2 ** len(labels), dtype=np.complex128)
    amps[index] = 1.0
    return StateVector(labels, amps)


def bell_pair(first: str, second: str) -> StateVector:
    """(|00> + |11>)/sqrt(2) on ``first``, ``second``."""
    s = 1.0 / np.sqrt(2.0)
    return StateVector((first, second), [s, 0, 0, s])


def product_state(parts: Sequence[StateVector]) -> StateVector:
    """Tensor product over the concatenated labels of ``parts``."""
    if not parts:
        raise ValueError("need at least one part")
    labels: list[str] = []
    amps = np.ones(1, dtype=np.complex128)
    for part in parts:
        for lab in part.labels:
            if lab in labels:
                raise ValueError(f"duplicate qubit label {lab!r}")
            labels.append(lab)
        if abs(part.norm() - 1.0) > EPS_U:
            raise ValueError(f"part over {list(part.labels)} is not normalized")
        amps = np.kron(amps, part.amps)
    return StateVector(tuple(labels), amps)


def apply_gate(s: StateVector, g: np.ndarray, targets: Sequence[str]) -> StateVector:
    """Apply ``g`` to ``targets``; the first target is ``g``'s most significant qubit."""
    targets = tuple(targets)
    k = len(targets)
    if k == 0:
        raise ValueError("no target qubits")
    if len(set(targets)) != k:
        raise ValueError(f"repeated target in {targets}")
    g = np.asarray(g, dtype=np.complex128)
    if g.shape != (2**k, 2**k):
        raise ValueError(f"gate of shape {g.shape} does not act on {k} qubit(s)")
    axes = [s.index(t) for t in targets]
    psi = np.moveaxis(s.tensor(), axes, range(k)).reshape(2**k, -1)
    psi = (g @ psi).reshape((2,) * s.n)
    psi = np.moveaxis(psi, range(k), axes)
    return StateVector(s.labels, psi.reshape(-1))


def outcome_probability(s: StateVector, q: str, bit: int) -> float:
    slab = np.take(s.tensor(), bit, axis=s.index(q))
    return float(np.vdot(slab, slab).real)


def measure_branch(s: StateVector, q: str, bit: int) -> tuple[StateVector, MeasurementOutcome]:
    """Project qubit ``q`` onto ``|bit>``, renormalize and drop ``q``.

    Raises :class:`ImpossibleBranch` when the outcome weight is below ``EPS_P``.
    """
    if bit not in (0, 1):
        raise ValueError(f"measurement bit must be 0 or 1, got {bit!r}")
    axis = s.index(q)
    if s.n == 1:
        raise ValueError("cannot measure away the last qubit of a state")
    slab = np.take(s.tensor(), bit, axis=axis)
    p = float(np.vdot(slab, slab).real)
    if p < EPS_P:
        raise ImpossibleBranch(q, bit, p)
    rest = s.labels[:axis] + s.labels[axis + 1:]
    return StateVector(rest, slab.reshape(-1) / np.sqrt(p)), MeasurementOutcome(q, bit, p)


def inner(s: StateVector, t: StateVector) -> complex:
    """<s|t> after aligning ``t`` to ``s``'s label order."""
    if set(s.labels) != set(t.labels):
        raise ValueError(f"label sets differ: {sorted(s.labels)} vs {sorted(t.labels)}")
    return complex(np.vdot(s.amps, t.reorder(s.labels).amps))


def fidelity(s: StateVector, t: StateVector) -> float:
    return abs(inner(s, t)) ** 2


def max_amp_error(s: StateVector, t: StateVector) -> float:
    """Largest amplitude difference, labels aligned; global phase counts."""
    if set(s.labels) != set(t.labels):
        raise ValueError(f"label sets differ: {sorted(s.labels)} vs {sorted(t.labels)}")
    return float(np.max(np.abs(s.amps - t.reorder(s.labels).amps)))


def states_equal(s: StateVector, t: StateVector, tol: float = EPS_U) -> bool:
    """Exact amplitude equality within ``tol`` and fidelity 1 within ``tol``."""
    return max_amp_error(s, t) <= tol and abs(fidelity(s, t) - 1.0) <= tol
