import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from locc_blocks.blockops import (
    BlockOperation,
    Permutation,
    build_matrix,
    control_u_decomposition,
    diagonal,
    is_product_of_single_qubit,
    named_gate,
    offdiagonal,
    permutation_block,
    permutation_operator,
    xor_mask,
)
from locc_blocks.linalg import EPS_U, haar_random_unitary, is_unitary, kron

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]])


def cnot_truth_table():
    m = np.zeros((4, 4))
    for c, t in itertools.product((0, 1), repeat=2):
        m[(c << 1) | (t ^ c), (c << 1) | t] = 1
    return m


def test_named_gates():
    np.testing.assert_array_equal(named_gate("X"), [[0, 1], [1, 0]])
    np.testing.assert_array_equal(named_gate("Z"), [[1, 0], [0, -1]])
    h = named_gate("H")
    np.testing.assert_allclose(h @ h, I2, atol=EPS_U)
    np.testing.assert_array_equal(named_gate("CNOT"), cnot_truth_table())
    with pytest.raises(ValueError):
        named_gate("Y")


def test_named_gate_returns_copy():
    g = named_gate("X")
    g[0, 0] = 5
    assert named_gate("X")[0, 0] == 0


def test_diagonal_cnot():
    np.testing.assert_array_equal(build_matrix(diagonal([I2, X])), cnot_truth_table())


def test_diagonal_scalar_blocks():
    c0, c1 = np.exp(0.3j), np.exp(-1.1j)
    u = build_matrix(diagonal([c0 * I2, c1 * I2]))
    np.testing.assert_allclose(u, kron(np.diag([c0, c1]), I2), atol=1e-15)


def test_offdiagonal_identity_blocks_is_x_on_control():
    np.testing.assert_array_equal(build_matrix(offdiagonal([I2, I2])), kron(X, I2))


def test_offdiagonal_layout(rng):
    u0, u1 = haar_random_unitary(2, rng), haar_random_unitary(2, rng)
    u = build_matrix(offdiagonal([u0, u1]))
    # |1><0| (x) u0 puts u0 in the lower-left block
    np.testing.assert_array_equal(u[2:, :2], u0)
    np.testing.assert_array_equal(u[:2, 2:], u1)
    assert not u[:2, :2].any() and not u[2:, 2:].any()


def test_permutation_operator_examples():
    np.testing.assert_array_equal(permutation_operator(Permutation.identity(2)), np.eye(4))
    np.testing.assert_array_equal(permutation_operator(Permutation(1, (1, 0))), X)
    r = permutation_operator(Permutation(2, (1, 0, 3, 2)))
    # oracle: R|i> = |p_i>
    want = np.zeros((4, 4))
    for i, p in enumerate((1, 0, 3, 2)):
        want[p, i] = 1
    np.testing.assert_array_equal(r, want)
    np.testing.assert_array_equal(r, kron(I2, X))


def test_permutation_rejects_non_bijection():
    with pytest.raises(ValueError):
        Permutation(2, (0, 0, 1, 2))
    with pytest.raises(ValueError):
        Permutation(2, (0, 1, 2))


@pytest.mark.parametrize(
    "perm, expected",
    [((0, 1, 2, 3), 0), ((3, 2, 1, 0), 3), ((0, 2, 1, 3), None), ((2, 3, 0, 1), 2)],
)
def test_xor_mask(perm, expected):
    p = Permutation(2, perm)
    assert xor_mask(p) == expected
    # exhaustive oracle over every mask
    found = [c for c in range(4) if all(p(i) == i ^ c for i in range(4))]
    assert is_product_of_single_qubit(p) == bool(found)


def test_xor_permutation_is_product_of_x_factors():
    for n in (1, 2, 3):
        for c in range(2**n):
            p = Permutation.xor(n, c)
            factors = [X if (c >> (n - 1 - k)) & 1 else I2 for k in range(n)]
            prod = np.eye(1)
            for f in factors:
                prod = np.kron(prod, f)
            np.testing.assert_array_equal(permutation_operator(p), prod)


def test_block_operation_validation(rng):
    u = haar_random_unitary(2, rng)
    with pytest.raises(ValueError, match=r"blocks\[1\] fails unitarity"):
        diagonal([u, np.array([[1, 1], [1, -1]])])
    with pytest.raises(ValueError, match="dimension"):
        diagonal([u, np.eye(4)])
    with pytest.raises(ValueError, match="blocks"):
        BlockOperation("diagonal", 1, (u,), Permutation.identity(1))
    with pytest.raises(ValueError, match="identity"):
        BlockOperation("diagonal", 1, (u, u), Permutation(1, (1, 0)))
    with pytest.raises(ValueError, match="perm width"):
        BlockOperation("permutation", 1, (u, u), Permutation.identity(2))
    with pytest.raises(ValueError, match="kind"):
        BlockOperation("weird", 1, (u, u), Permutation.identity(1))


def test_control_u_examples():
    u0, cu = control_u_decomposition(diagonal([I2, X]))
    np.testing.assert_array_equal(u0, I2)
    np.testing.assert_array_equal(cu, cnot_truth_table())
    u = haar_random_unitary(2, 3)
    u0, cu = control_u_decomposition(diagonal([u, u]))
    np.testing.assert_allclose(cu, np.eye(4), atol=EPS_U)


def test_control_u_rejects_wrong_shape(rng):
    u = haar_random_unitary(2, rng)
    with pytest.raises(ValueError):
        control_u_decomposition(offdiagonal([u, u]))
    with pytest.raises(ValueError):
        control_u_decomposition(diagonal([u] * 4))


@pytest.mark.parametrize("seed", range(100))
def test_control_u_reconstructs(seed):
    rng = np.random.default_rng(seed)
    d = 2 ** (1 + seed % 2)
    op = diagonal([haar_random_unitary(d, rng) for _ in range(2)])
    u0, cu = control_u_decomposition(op)
    np.testing.assert_allclose(kron(I2, u0) @ cu, build_matrix(op), atol=1e-10)


def test_misprinted_projector_does_not_reconstruct(rng):
    # the |0><0| (x) u0^dagger u1 second term from the printed formula
    u0, u1 = haar_random_unitary(2, rng), haar_random_unitary(2, rng)
    p0 = np.diag([1, 0])
    misprint = kron(p0, I2) + kron(p0, u0.conj().T @ u1)
    assert not np.allclose(kron(I2, u0) @ misprint, build_matrix(diagonal([u0, u1])))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 2))
def test_build_matrix_unitary_and_block_structure(seed, n, m):
    rng = np.random.default_rng(seed)
    perm = Permutation.random(n, rng)
    blocks = [haar_random_unitary(2**m, rng) for _ in range(2**n)]
    u = build_matrix(permutation_block(perm, blocks))
    assert is_unitary(u, EPS_U)
    d = 2**m
    for row, col in itertools.product(range(2**n), repeat=2):
        tile = u[row * d:(row + 1) * d, col * d:(col + 1) * d]
        if row == perm(col):
            np.testing.assert_array_equal(tile, blocks[col])
        else:
            assert not tile.any()
    ud = build_matrix(diagonal(blocks))
    for row, col in itertools.product(range(2**n), repeat=2):
        if row != col:
            assert not ud[row * d:(row + 1) * d, col * d:(col + 1) * d].any()


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_permutation_inverse_exact(seed, n):
    p = Permutation.random(n, np.random.default_rng(seed))
    prod = permutation_operator(p) @ permutation_operator(p.inverse())
    np.testing.assert_array_equal(prod, np.eye(2**n))


def test_block_operation_json_round_trip(rng):
    perm = Permutation(2, (2, 0, 3, 1))
    op = permutation_block(perm, [haar_random_unitary(2, rng) for _ in range(4)])
    data = op.to_json()
    assert set(data) == {"kind", "control_width", "blocks", "perm"}
    back = BlockOperation.from_json(data)
    assert back.kind == "permutation" and back.perm == perm
    np.testing.assert_array_equal(build_matrix(back), build_matrix(op))


def test_block_operation_json_defaults_perm():
    op = BlockOperation.from_json({"kind": "offdiagonal", "control_width": 1,
                                   "blocks": [[[[1, 0], [0, 0]], [[0, 0], [1, 0]]]] * 2})
    assert op.perm.map == (1, 0)
