import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_state
from locc_blocks.blockops import named_gate
from locc_blocks.linalg import haar_random_unitary, random_unit_vector
from locc_blocks.statevec import (
    ImpossibleBranch,
    StateVector,
    apply_gate,
    basis_state,
    bell_pair,
    fidelity,
    max_amp_error,
    measure_branch,
    outcome_probability,
    product_state,
    states_equal,
)

S = 1 / np.sqrt(2)


def test_product_of_zeros():
    s = product_state([basis_state(["A"], 0), basis_state(["B"], 0)])
    assert s.labels == ("A", "B")
    np.testing.assert_array_equal(s.amps, [1, 0, 0, 0])


def test_bell_pair_amplitudes():
    np.testing.assert_allclose(bell_pair("A1", "B1").amps, [S, 0, 0, S])


def test_bell_times_basis_indices():
    s = product_state([bell_pair("A1", "B1"), basis_state(["A", "B"], [1, 0])])
    assert s.labels == ("A1", "B1", "A", "B")
    # index = A1 B1 A B as binary: (0,0,1,0) and (1,1,1,0)
    want = {int("".join(map(str, (j, j, 1, 0))), 2) for j in (0, 1)}
    assert want == {0b0010, 0b1110}
    assert set(np.flatnonzero(np.abs(s.amps) > 0)) == want
    np.testing.assert_allclose(s.amps[sorted(want)], [S, S])


def test_product_rejects_duplicate_label():
    with pytest.raises(ValueError, match="'A'"):
        product_state([basis_state(["A"], 0), basis_state(["A"], 1)])


def test_state_rejects_bad_construction():
    with pytest.raises(ValueError):
        StateVector(("A",), [1, 0, 0])
    with pytest.raises(ValueError):
        StateVector((), [1])
    with pytest.raises(ValueError):
        StateVector(("A", "A"), [1, 0, 0, 0])
    with pytest.raises(ValueError):
        StateVector(("A",), [np.inf, 0])


def test_state_is_immutable():
    s = basis_state(["A"], 0)
    with pytest.raises(ValueError):
        s.amps[0] = 2


def test_apply_x_and_h():
    one = apply_gate(basis_state(["q"], 0), named_gate("X"), ["q"])
    np.testing.assert_array_equal(one.amps, [0, 1])
    plus = apply_gate(basis_state(["q"], 0), named_gate("H"), ["q"])
    np.testing.assert_allclose(plus.amps, [S, S])


def test_apply_cnot_matches_matrix_vector():
    s = basis_state(["A", "A1"], [1, 0])
    out = apply_gate(s, named_gate("CNOT"), ["A", "A1"])
    np.testing.assert_array_equal(out.amps, named_gate("CNOT") @ s.amps)
    np.testing.assert_array_equal(out.amps, basis_state(["A", "A1"], [1, 1]).amps)


def test_apply_gate_target_order(rng):
    # CNOT with control on the second label equals the swapped-basis product
    s = random_state(["p", "q", "r"], rng)
    out = apply_gate(s, named_gate("CNOT"), ["r", "p"])
    t = s.tensor()
    want = t.copy()
    want[1, :, 1] = t[0, :, 1]
    want[0, :, 1] = t[1, :, 1]
    np.testing.assert_array_equal(out.tensor(), want)


def test_apply_gate_matches_dense_embedding(rng):
    s = random_state(["a", "b", "c", "d"], rng)
    g = haar_random_unitary(4, rng)
    out = apply_gate(s, g, ["b", "d"])
    # with labels a b d c the targets are adjacent, so the dense operator is I (x) g (x) I
    re = s.reorder(["a", "b", "d", "c"])
    dense = np.kron(np.eye(2), np.kron(g, np.eye(2))) @ re.amps
    np.testing.assert_allclose(out.reorder(["a", "b", "d", "c"]).amps, dense, atol=1e-14)


def test_apply_gate_errors():
    s = basis_state(["A", "B"], 0)
    with pytest.raises(ValueError):
        apply_gate(s, np.eye(4), ["A"])
    with pytest.raises(KeyError):
        apply_gate(s, np.eye(2), ["C"])
    with pytest.raises(ValueError):
        apply_gate(s, np.eye(4), ["A", "A"])


def test_identity_gate_exact(rng):
    s = random_state(["a", "b", "c"], rng)
    np.testing.assert_array_equal(apply_gate(s, np.eye(4), ["c", "a"]).amps, s.amps)


def test_measure_bell_pair():
    rest, out = measure_branch(bell_pair("A1", "B1"), "A1", 0)
    assert rest.labels == ("B1",)
    np.testing.assert_allclose(rest.amps, [1, 0])
    assert out.probability == pytest.approx(0.5, abs=1e-15)
    assert (out.qubit, out.bit) == ("A1", 0)


def test_measure_impossible_branch():
    s = basis_state(["q", "r"], 0)
    with pytest.raises(ImpossibleBranch) as info:
        measure_branch(s, "q", 1)
    assert not isinstance(info.value, ValueError)
    assert info.value.probability == 0


def test_measure_after_cnot_residual(rng):
    # Alice's step 1: CNOT(A, A1) on psi0 x Phi, measure A1 = a
    alpha = random_unit_vector(2, rng)
    xi = [random_unit_vector(2, rng) for _ in range(2)]
    psi0 = StateVector(("A", "B"), np.concatenate([alpha[0] * xi[0], alpha[1] * xi[1]]))
    s = product_state([psi0, bell_pair("A1", "B1")])
    s = apply_gate(s, named_gate("CNOT"), ["A", "A1"])
    for a in (0, 1):
        rest, out = measure_branch(s, "A1", a)
        assert out.probability == pytest.approx(0.5, abs=1e-12)
        want = np.zeros((2, 2, 2), dtype=complex)  # A, B, B1
        for i in (0, 1):
            want[i, :, i ^ a] = alpha[i] * xi[i]
        got = rest.reorder(["A", "B", "B1"]).tensor()
        np.testing.assert_allclose(got, want, atol=1e-12)


def test_fidelity_values():
    zero = basis_state(["q"], 0)
    one = basis_state(["q"], 1)
    plus = StateVector(("q",), [S, S])
    assert fidelity(zero, zero) == pytest.approx(1.0)
    assert fidelity(zero, one) == 0.0
    assert fidelity(zero, plus) == pytest.approx(0.5, abs=1e-15)


def test_fidelity_label_mismatch():
    with pytest.raises(ValueError):
        fidelity(basis_state(["p"], 0), basis_state(["q"], 0))


def test_states_equal_is_phase_sensitive():
    s = basis_state(["q", "r"], 3)
    t = StateVector(s.labels, -s.amps)
    assert fidelity(s, t) == pytest.approx(1.0)
    assert not states_equal(s, t)
    assert states_equal(s, s.reorder(["r", "q"]))


def test_json_round_trip(rng):
    s = random_state(["Y1", "Z1"], rng)
    t = StateVector.from_json(s.to_json())
    assert t.labels == s.labels
    np.testing.assert_array_equal(t.amps, s.amps)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_gate_preserves_norm(seed, n):
    rng = np.random.default_rng(seed)
    labels = [f"q{i}" for i in range(n + 1)]
    s = random_state(labels, rng)
    k = int(rng.integers(1, n + 2))
    targets = list(rng.permutation(labels)[:k])
    out = apply_gate(s, haar_random_unitary(2**k, rng), targets)
    assert abs(out.norm() - 1) < 1e-10


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_branch_probabilities_sum_to_one(seed, n):
    rng = np.random.default_rng(seed)
    labels = [f"q{i}" for i in range(n + 1)]
    s = random_state(labels, rng)
    for q in labels:
        assert abs(outcome_probability(s, q, 0) + outcome_probability(s, q, 1) - 1) < 1e-10


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_fidelity_invariant_under_relabel_and_permute(seed):
    rng = np.random.default_rng(seed)
    labels = ["a", "b", "c"]
    s, t = random_state(labels, rng), random_state(labels, rng)
    order = list(rng.permutation(labels))
    names = {lab: lab.upper() for lab in labels}
    s2 = s.reorder(order).relabel(names)
    t2 = t.relabel(names)
    assert abs(fidelity(s, t) - fidelity(s2, t2)) < 1e-12
    assert max_amp_error(s.relabel(names), s2) < 1e-15


def test_measure_all_outcomes_exhaustive(rng):
    s = random_state(["a", "b", "c"], rng)
    total = 0.0
    for bits in itertools.product((0, 1), repeat=2):
        state, p = s, 1.0
        for q, b in zip(["a", "c"], bits):
            state, out = measure_branch(state, q, b)
            p *= out.probability
        total += p
    assert total == pytest.approx(1.0, abs=1e-12)
