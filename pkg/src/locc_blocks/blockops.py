"""Block-form operators.

A block operation on ``N`` control qubits and ``M`` target qubits is

    U = sum_i |p_i><i| (x) u_i

with ``p`` a permutation of ``0 .. 2**N - 1`` and each ``u_i`` a ``2**M``
square unitary.  ``p`` is the identity for diagonal blocks and ``i -> i ^ 1``
for offdiagonal blocks.  Permutations are kept as index lists; the 0/1
matrix ``R`` is only built when asked for.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .linalg import EPS_U, as_matrix, is_power_of_two, is_unitary, matrix_from_json, matrix_to_json

KINDS = ("diagonal", "offdiagonal", "permutation")

_S2 = 1.0 / np.sqrt(2.0)
_GATES = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
    # normalized; the bare [[1, 1], [1, -1]] is not unitary
    "H": np.array([[_S2, _S2], [_S2, -_S2]], dtype=np.complex128),
    "CNOT": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128
    ),
}


def named_gate(name: str) -> np.ndarray:
    try:
        return _GATES[name].copy()
    except KeyError:
        raise ValueError(f"unknown gate {name!r}; expected one of {sorted(_GATES)}") from None


@dataclass(frozen=True)
class Permutation:
    n: int
    map: tuple[int, ...]

    def __post_init__(self):
        m = tuple(int(v) for v in self.map)
        if self.n < 0 or len(m) != 2**self.n:
            raise ValueError(f"a width-{self.n} permutation needs {2 ** self.n} entries, got {len(m)}")
        if sorted(m) != list(range(2**self.n)):
            raise ValueError(f"map {list(m)} is not a bijection on 0..{2 ** self.n - 1}")
        object.__setattr__(self, "map", m)

    @classmethod
    def identity(cls, n: int) -> Permutation:
        return cls(n, tuple(range(2**n)))

    @classmethod
    def xor(cls, n: int, mask: int) -> Permutation:
        return cls(n, tuple(i ^ mask for i in range(2**n)))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> Permutation:
        return cls(n, tuple(int(v) for v in rng.permutation(2**n)))

    def inverse(self) -> Permutation:
        inv = [0] * len(self.map)
        for i, p in enumerate(self.map):
            inv[p] = i
        return Permutation(self.n, tuple(inv))

    def __call__(self, i: int) -> int:
        return self.map[i]


def permutation_operator(p: Permutation) -> np.ndarray:
    """R = sum_i |p_i><i| as a 0/1 matrix."""
    dim = 2**p.n
    r = np.zeros((dim, dim), dtype=np.complex128)
    r[list(p.map), list(range(dim))] = 1.0
    return r


def xor_mask(p: Permutation) -> Optional[int]:
    """The mask ``c`` with ``p_i = i ^ c`` for every ``i``, or None."""
    c = p.map[0]
    if all(p.map[i] == i ^ c for i in range(len(p.map))):
        return c
    return None


def is_product_of_single_qubit(p: Permutation) -> bool:
    """True iff ``R(p)`` is a tensor product of I and X factors."""
    return xor_mask(p) is not None


@dataclass(frozen=True, eq=False)
class BlockOperation:
    kind: str
    control_width: int
    blocks: tuple[np.ndarray, ...]
    perm: Permutation

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        n = self.control_width
        if n < 1:
            raise ValueError("control_width must be >= 1")
        blocks = tuple(as_matrix(b) for b in self.blocks)
        if len(blocks) != 2**n:
            raise ValueError(f"control_width {n} needs {2 ** n} blocks, got {len(blocks)}")
        dim = blocks[0].shape[0]
        if dim < 2 or not is_power_of_two(dim):
            raise ValueError(f"blocks[0] has dimension {dim}, expected a power of 2 >= 2")
        for i, b in enumerate(blocks):
            if b.shape[0] != dim:
                raise ValueError(f"blocks[{i}] has dimension {b.shape[0]}, expected {dim}")
            if not is_unitary(b, EPS_U):
                raise ValueError(f"blocks[{i}] fails unitarity")
            b.setflags(write=False)
        if self.perm.n != n:
            raise ValueError(f"perm width {self.perm.n} does not match control_width {n}")
        if self.kind == "diagonal" and self.perm != Permutation.identity(n):
            raise ValueError("a diagonal block operation needs the identity permutation")
        if self.kind == "offdiagonal" and (n != 1 or self.perm.map != (1, 0)):
            raise ValueError("an offdiagonal block operation has control_width 1 and perm [1, 0]")
        object.__setattr__(self, "blocks", blocks)

    @property
    def target_width(self) -> int:
        return int(self.blocks[0].shape[0]).bit_length() - 1

    @property
    def block_dim(self) -> int:
        return self.blocks[0].shape[0]

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "control_width": self.control_width,
            "blocks": [matrix_to_json(b) for b in self.blocks],
            "perm": list(self.perm.map),
        }

    @classmethod
    def from_json(cls, data: dict) -> BlockOperation:
        for key in ("kind", "control_width", "blocks"):
            if key not in data:
                raise ValueError(f"operation is missing field {key!r}")
        n = int(data["control_width"])
        kind = data["kind"]
        blocks = []
        for i, b in enumerate(data["blocks"]):
            try:
                blocks.append(matrix_from_json(b))
            except ValueError as exc:
                raise ValueError(f"blocks[{i}]: {exc}") from None
        if "perm" in data:
            perm = Permutation(n, tuple(data["perm"]))
        elif kind == "offdiagonal":
            perm = Permutation(1, (1, 0))
        else:
            perm = Permutation.identity(n)
        return cls(kind, n, tuple(blocks), perm)


def diagonal(blocks: Sequence) -> BlockOperation:
    n = len(blocks).bit_length() - 1
    return BlockOperation("diagonal", n, tuple(blocks), Permutation.identity(n))


def offdiagonal(blocks: Sequence) -> BlockOperation:
    return BlockOperation("offdiagonal", 1, tuple(blocks), Permutation(1, (1, 0)))


def permutation_block(perm: Permutation, blocks: Sequence) -> BlockOperation:
    return BlockOperation("permutation", perm.n, tuple(blocks), perm)


def build_matrix(op: BlockOperation) -> np.ndarray:
    """Dense sum_i |p_i><i| (x) u_i."""
    d = op.block_dim
    size = 2**op.control_width * d
    u = np.zeros((size, size), dtype=np.complex128)
    for i, block in enumerate(op.blocks):
        row = op.perm(i)
        u[row * d:(row + 1) * d, i * d:(i + 1) * d] = block
    return u


def control_u_decomposition(op: BlockOperation) -> tuple[np.ndarray, np.ndarray]:
    """Split a one-control diagonal operation into ``u0`` and a controlled unitary.

    Returns ``(u0, CU)`` with ``CU = |0><0| (x) I + |1><1| (x) u0^dagger u1``,
    so that ``(I (x) u0) @ CU`` equals ``build_matrix(op)``.
    """
    if op.kind != "diagonal" or op.control_width != 1:
        raise ValueError("control-U decomposition needs a diagonal operation with control_width 1")
    u0, u1 = op.blocks
    d = op.block_dim
    cu = np.zeros((2 * d, 2 * d), dtype=np.complex128)
    cu[:d, :d] = np.eye(d)
    cu[d:, d:] = u0.conj().T @ u1
    return u0.copy(), cu
