"""Local implementation of nonlocal block-form unitaries by LOCC."""
from .blockops import (
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
)
from .linalg import EPS_U, haar_random_unitary, is_unitary, kron
from .protocol import (
    PROTOCOLS,
    LocalityViolation,
    ProtocolTrace,
    ResourceLedger,
    enumerate_branches,
    expected_ledger,
    run_bipartite_diagonal,
    run_bipartite_multiqubit,
    run_bipartite_offdiagonal,
    run_three_party_diagonal,
)
from .statevec import (
    ImpossibleBranch,
    MeasurementOutcome,
    StateVector,
    apply_gate,
    basis_state,
    fidelity,
    measure_branch,
    product_state,
)
from .verify import check_appendix_steps, check_resources, oracle_apply

__version__ = "0.1.0"
