import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.errors import DomainError
from src.quantum.qregisters import (
    DensityState,
    HermitianOperator,
    PureVector,
    RegisterShape,
    SubnormalizedState,
    as_matrix,
    diagonal_state,
    geninv,
    identity_operator,
    log2m,
    make_shape,
    maximally_entangled,
    maximally_mixed,
    partial_trace,
    permutation_operator,
    permute,
    purify,
    reduce_state,
    relabel,
    support_contains,
    tensor,
    tensor_power,
)
from src.utils.sampling import haar_vector, random_density


class TestRegisterShape:
    def test_default_labels(self):
        assert make_shape([2, 3]).labels == ("A", "B")

    def test_string_label_expands_to_indexed_registers(self):
        shape = make_shape([2, 2, 2], "B")
        assert shape.labels == ("B1", "B2", "B3")
        assert shape.total == 8

    def test_duplicate_labels_rejected(self):
        with pytest.raises(DomainError) as err:
            RegisterShape(("A", "A"), (2, 2))
        assert err.value.precondition == "labels unique"

    def test_select_keeps_requested_order(self):
        shape = make_shape([2, 3, 4], ["A", "B", "C"])
        assert shape.select(["C", "A"]).dims == (4, 2)

    def test_unknown_label(self):
        with pytest.raises(DomainError):
            make_shape(2, "A").index("Z")


class TestOperators:
    def test_non_hermitian_rejected(self):
        with pytest.raises(DomainError) as err:
            HermitianOperator(make_shape(2), np.array([[1.0, 1.0], [0.0, 1.0]]))
        assert err.value.precondition == "Hermitian input"

    def test_shape_mismatch_rejected(self):
        with pytest.raises(DomainError):
            HermitianOperator(make_shape(3), np.eye(2))

    def test_entries_are_read_only(self):
        op = identity_operator(2)
        with pytest.raises(ValueError):
            op.matrix[0, 0] = 5

    def test_density_state_needs_unit_trace(self):
        with pytest.raises(DomainError):
            DensityState(HermitianOperator(make_shape(2), np.eye(2)))

    def test_subnormalized_state_accepts_trace_below_one(self):
        state = SubnormalizedState(HermitianOperator(make_shape(2), np.diag([0.3, 0.2])))
        assert state.trace == pytest.approx(0.5)

    def test_negative_eigenvalue_rejected(self):
        with pytest.raises(DomainError) as err:
            SubnormalizedState(HermitianOperator(make_shape(2), np.diag([1.2, -0.2])))
        assert err.value.precondition == "positive semidefinite"

    def test_diagonal_state_type_follows_weight(self):
        assert isinstance(diagonal_state([0.5, 0.5]), DensityState)
        assert not isinstance(diagonal_state([0.25, 0.25]), DensityState)

    def test_pure_vector_norm(self):
        with pytest.raises(DomainError):
            PureVector(make_shape(2), np.array([1.0, 1.0]))


class TestPartialTrace:
    def test_product_marginals(self, rng):
        a = random_density(rng, 2, "A")
        b = random_density(rng, 3, "B")
        ab = tensor(a, b)
        assert isinstance(ab, DensityState)
        assert_allclose(partial_trace(ab, ["B"]).matrix, a.matrix, atol=1e-12)
        assert_allclose(partial_trace(ab, ["A"]).matrix, b.matrix, atol=1e-12)

    def test_surviving_order_is_kept(self, rng):
        abc = random_density(rng, [2, 3, 2], ["A", "B", "C"])
        assert partial_trace(abc, ["B"]).shape.labels == ("A", "C")

    def test_reduce_state_reorders(self, rng):
        a = random_density(rng, 2, "A")
        b = random_density(rng, 3, "B")
        ba = reduce_state(tensor(a, b), ["B", "A"])
        assert ba.shape.labels == ("B", "A")
        assert_allclose(ba.matrix, np.kron(b.matrix, a.matrix), atol=1e-12)

    def test_trace_is_preserved(self, rng):
        rho = random_density(rng, [2, 2, 2])
        assert partial_trace(rho, ["A", "C"]).trace == pytest.approx(1.0)


class TestRegisterAlgebra:
    def test_permute_round_trip(self, rng):
        rho = random_density(rng, [2, 3], ["A", "B"])
        back = permute(permute(rho, ["B", "A"]), ["A", "B"])
        assert back.allclose(rho) if isinstance(back, HermitianOperator) else back.op.allclose(rho)

    def test_label_collision(self):
        with pytest.raises(DomainError) as err:
            tensor(maximally_mixed(2, "A"), maximally_mixed(2, "A"))
        assert err.value.precondition == "disjoint label sets"

    def test_dense_limit(self):
        with pytest.raises(DomainError):
            tensor(identity_operator(64, "A"), identity_operator(65, "B"))

    def test_tensor_power_labels(self, q34):
        square = tensor_power(q34, 2)
        assert square.shape.labels == ("B1", "B2")
        assert_allclose(np.diag(square.matrix).real, [0.5625, 0.1875, 0.1875, 0.0625])

    def test_relabel_keeps_matrix(self, q34):
        moved = relabel(q34, {"B": "X"})
        assert moved.shape.labels == ("X",)
        assert_allclose(moved.matrix, q34.matrix)

    def test_permutation_operator_swaps_factors(self, rng):
        a, b = haar_vector(rng, 2), haar_vector(rng, 3)
        swap = permutation_operator([2, 3], [1, 0])
        assert_allclose(swap @ np.kron(a, b), np.kron(b, a), atol=1e-12)


class TestPurification:
    def test_marginal_is_recovered(self, rng):
        rho = random_density(rng, 3, "B")
        psi = purify(rho, "R")
        assert psi.shape.labels == ("B", "R")
        assert_allclose(partial_trace(psi.state(), ["R"]).matrix, rho.matrix, atol=1e-12)

    def test_canonical_purification_is_deterministic(self, rng):
        rho = random_density(rng, 2, "B")
        assert_allclose(purify(rho, "R").amplitudes, purify(rho, "R").amplitudes)

    def test_maximally_entangled_marginal(self):
        phi = maximally_entangled(3).state()
        assert_allclose(partial_trace(phi, ["R"]).matrix, np.eye(3) / 3, atol=1e-12)


class TestSpectralCalculus:
    def test_generalized_inverse_on_support(self):
        inv = geninv(HermitianOperator(make_shape(2), np.diag([2.0, 0.0])))
        assert_allclose(inv.matrix, np.diag([0.5, 0.0]))

    def test_log_is_zero_on_kernel(self):
        assert_allclose(log2m(np.diag([0.25, 0.0])), np.diag([-2.0, 0.0]), atol=1e-12)

    def test_support_containment(self):
        pure = diagonal_state([1.0, 0.0])
        mixed = maximally_mixed(2)
        assert support_contains(pure, mixed)
        assert not support_contains(mixed, pure)

    def test_as_matrix_passes_arrays_through(self):
        m = np.eye(2)
        assert as_matrix(m) is m
