import math

import numpy as np
import pytest

from src.errors import DomainError
from src.protocols.constructions import (
    ConvexSplitInstance,
    channel_simulation_fudge,
    convex_split_check,
    convex_split_cost,
    convex_split_state,
    covariance_residual,
    de_finetti,
    de_finetti_bound,
    de_finetti_monte_carlo,
    identity_simulation_bound,
    identity_simulation_check,
    postselection_constant,
    random_strong_converse_instance,
    strong_converse_check,
    symmetric_projector,
    symmetrization_distance_check,
    symmetrize_check,
    teleport_coding_check,
)
from src.quantum.qchannels import channel_power, depolarizing_channel, identity_channel, tensor_channels
from src.quantum.qregisters import diagonal_state, maximally_mixed, tensor_power
from src.utils.optim import OptimizerConfig


@pytest.fixture
def correlated_bits():
    return diagonal_state([0.4, 0.1, 0.1, 0.4], [2, 2], ["B", "R"])


@pytest.fixture
def mixed_pair_channel():
    return tensor_channels(identity_channel(2, "A1", "B1"), depolarizing_channel(2, 1.0, "A2", "B2"))


class TestConvexSplit:
    def test_hypothesis_and_fidelity(self, correlated_bits):
        inst = ConvexSplitInstance(correlated_bits, maximally_mixed(2, "B"), 4, 0.5)
        assert inst.dmax_bits() == pytest.approx(math.log2(1.6), abs=1e-9)
        check = convex_split_check(inst)
        assert check.hypothesis_holds
        assert check.passed
        assert check.bound == pytest.approx(math.sqrt(0.5))

    def test_state_layout(self, correlated_bits):
        inst = ConvexSplitInstance(correlated_bits, maximally_mixed(2, "B"), 2, 1.0)
        tau = convex_split_state(inst)
        assert tau.shape.labels == ("B1", "B2", "R")
        assert np.trace(tau.matrix).real == pytest.approx(1.0)

    def test_sigma_must_match_b(self, correlated_bits):
        with pytest.raises(DomainError):
            ConvexSplitInstance(correlated_bits, maximally_mixed(3, "B"), 2, 0.5)

    def test_cost(self):
        cost = convex_split_cost(0.0, 1.0)
        assert cost.n_blocks == 4
        assert cost.qubits == pytest.approx(1.0)


class TestDeFinetti:
    def test_two_qubit_objects(self):
        objects = de_finetti(2, 2)
        assert objects.g == 10
        assert np.allclose(objects.zeta.matrix, symmetric_projector(2, 2) / 3)

    @pytest.mark.parametrize("n, d", [(2, 2), (3, 2), (2, 3)])
    def test_symmetric_projector(self, n, d):
        projector = symmetric_projector(n, d)
        assert np.allclose(projector @ projector, projector)
        assert np.trace(projector) == pytest.approx(math.comb(n + d - 1, n))

    def test_dimension_limit(self):
        with pytest.raises(DomainError):
            de_finetti(7, 2)

    def test_constants(self):
        assert de_finetti_bound(1, 2) == 8.0
        assert postselection_constant(0, 2) == pytest.approx(math.sqrt(2))

    def test_haar_average_approaches_zeta(self):
        assert de_finetti_monte_carlo(2, 2, samples=2000, seed=0) < 0.2


class TestSymmetrization:
    def test_symmetrized_channel_is_covariant(self, mixed_pair_channel):
        check = symmetrize_check(mixed_pair_channel)
        assert check.original_residual > 1e-3
        assert check.symmetrized_residual == pytest.approx(0.0, abs=1e-12)

    def test_power_channel_is_already_covariant(self):
        assert covariance_residual(channel_power(depolarizing_channel(2, 0.3), 2)) == pytest.approx(0.0, abs=1e-12)

    def test_symmetrizing_never_hurts_covariant_targets(self, mixed_pair_channel):
        rho = tensor_power(diagonal_state([0.75, 0.25], labels="A"), 2)
        target = channel_power(identity_channel(2), 2)
        symmetric, original = symmetrization_distance_check(mixed_pair_channel, target, rho)
        assert symmetric <= original + 1e-9


class TestSimulationBounds:
    def test_teleport_branch(self):
        assert teleport_coding_check(0.7, 2) == pytest.approx(math.sqrt(0.3), abs=1e-6)

    def test_identity_simulation_endpoints(self):
        assert identity_simulation_bound(0.0) == pytest.approx(1.0)
        assert identity_simulation_bound(1.0) == pytest.approx(0.0)
        assert identity_simulation_bound(0.1) < 1.0

    def test_composition_stays_near_identity(self):
        opt = OptimizerConfig(starts=4, seed=0, method="L-BFGS-B")
        check = identity_simulation_check(0.3, depolarizing_channel(2, 1.0), depolarizing_channel(2, 0.5), opt)
        assert check.coding_distance <= 0.7 + 1e-6
        assert check.composed_distance <= check.bound + 1e-6
        assert check.passed

    def test_composition_eps_domain(self):
        with pytest.raises(DomainError):
            identity_simulation_check(0.0, depolarizing_channel(2, 1.0), depolarizing_channel(2, 1.0))

    def test_fudge_grows_with_block_length(self):
        assert channel_simulation_fudge(0.1, 2, 100) > channel_simulation_fudge(0.1, 2, 10) > 0


class TestStrongConverse:
    def test_random_code_obeys_bound(self, rng):
        states, povm = random_strong_converse_instance(rng, 2, 2, 1.5)
        check = strong_converse_check(states, povm, 1.5, 2, 2)
        assert check.bound == pytest.approx(0.5)
        assert check.passed

    def test_rate_must_give_integral_code_size(self, rng):
        with pytest.raises(DomainError):
            random_strong_converse_instance(rng, 2, 2, 0.3)

    def test_incomplete_povm(self, rng):
        states, povm = random_strong_converse_instance(rng, 2, 1, 1.0)
        with pytest.raises(DomainError) as err:
            strong_converse_check(states, [0.5 * e for e in povm], 1.0, 2, 1)
        assert err.value.precondition == "POVM complete"
