"""Dense complex linear algebra helpers.

Matrices are plain ``complex128`` ndarrays.  ``UnitaryMatrix`` is only a
type alias: unitarity is checked at the boundaries where matrices enter the
library (block construction, config parsing), not on every product.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

UnitaryMatrix = np.ndarray

# unitarity and state equality tolerance
EPS_U = 1e-10


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def as_matrix(m) -> np.ndarray:
    """Coerce ``m`` to a square complex128 matrix with finite entries."""
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix has non-finite entries")
    return arr


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=np.complex128), np.asarray(b, dtype=np.complex128))


def kron_all(factors: Sequence[np.ndarray]) -> np.ndarray:
    out = np.eye(1, dtype=np.complex128)
    for f in factors:
        out = kron(out, f)
    return out


def is_unitary(m, tol: float = EPS_U) -> bool:
    """True iff max |m^dagger m - I| <= tol."""
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        return False
    if not np.all(np.isfinite(arr)):
        return False
    err = arr.conj().T @ arr - np.eye(arr.shape[0])
    return float(np.max(np.abs(err))) <= tol


def haar_random_unitary(dim: int, seed) -> np.ndarray:
    """Sample a Haar-distributed ``dim`` x ``dim`` unitary.

    QR of a complex Ginibre matrix, with the phases of ``R``'s diagonal
    folded back into ``Q`` so the result is Haar rather than QR-biased.
    ``seed`` may be an int or a ``numpy.random.Generator``.
    """
    if not isinstance(dim, (int, np.integer)) or dim < 2 or not is_power_of_two(int(dim)):
        raise ValueError(f"dim must be a power of 2 and >= 2, got {dim!r}")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_unit_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random pure state of dimension ``dim`` (normalized complex Gaussian)."""
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def matrix_to_json(m) -> list:
    """Row-major nested list of ``[re, im]`` pairs."""
    arr = np.asarray(m, dtype=np.complex128)
    return [[[float(z.real), float(z.imag)] for z in row] for row in arr]


def matrix_from_json(data) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ValueError("matrix JSON must be a nested list of [re, im] pairs")
    return as_matrix(arr[..., 0] + 1j * arr[..., 1])
