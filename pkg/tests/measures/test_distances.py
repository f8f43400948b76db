import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.errors import DomainError
from src.measures.distances import (
    channel_purified_distance,
    distance_values,
    fidelity,
    generalized_fidelity,
    purified_distance,
    tight_triangle_check,
    trace_distance,
    triangle_bound,
)
from src.quantum.qchannels import depolarizing_channel, identity_channel
from src.quantum.qregisters import DensityState, HermitianOperator, basis_state, diagonal_state, maximally_mixed
from src.utils.optim import OptimizerConfig
from src.utils.sampling import haar_pure, random_density


def _towards_mixed(rho: DensityState, weight: float) -> DensityState:
    matrix = (1 - weight) * rho.matrix + weight * np.eye(rho.dim) / rho.dim
    return DensityState(HermitianOperator(rho.shape, matrix))


class TestFidelity:
    def test_identical_states(self, rng):
        rho = random_density(rng, 3)
        assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-10)

    def test_pure_states_overlap(self, rng):
        a, b = haar_pure(rng, 2), haar_pure(rng, 2)
        overlap = abs(np.vdot(a.amplitudes, b.amplitudes))
        assert fidelity(a.state(), b.state()) == pytest.approx(overlap, abs=1e-7)

    def test_symmetric(self, rng):
        rho, sigma = random_density(rng, 2), random_density(rng, 2)
        assert fidelity(rho, sigma) == pytest.approx(fidelity(sigma, rho), abs=1e-10)

    def test_dimension_mismatch(self):
        with pytest.raises(DomainError):
            fidelity(maximally_mixed(2), maximally_mixed(3))

    def test_generalized_fidelity_on_subnormalized_states(self):
        rho = diagonal_state([0.5, 0.0])
        sigma = diagonal_state([0.0, 0.5])
        assert generalized_fidelity(rho, sigma) == pytest.approx(0.5)
        assert purified_distance(rho, sigma) == pytest.approx(math.sqrt(0.75))


class TestTraceDistance:
    def test_orthogonal_states_are_unnormalized(self):
        assert trace_distance(basis_state(2, 0), basis_state(2, 1)) == pytest.approx(2.0)

    def test_purified_distance_sandwich(self, rng):
        for _ in range(20):
            rho, sigma = random_density(rng, 3), random_density(rng, 3)
            t = trace_distance(rho, sigma)
            p = purified_distance(rho, sigma)
            assert t / 2 <= p + 1e-10
            assert p <= math.sqrt(t) + 1e-10

    def test_distance_values_kinds(self, q34):
        values = {d.kind: d.value for d in distance_values(q34, maximally_mixed(2, "B"))}
        assert set(values) == {"fidelity", "generalized_fidelity", "purified", "trace"}
        assert values["trace"] == pytest.approx(0.5)


class TestTriangle:
    def test_bound_reduces_to_one_radius(self):
        assert triangle_bound(0.0, 0.3) == pytest.approx(0.3)
        assert triangle_bound(0.3, 0.4) <= 0.3 + 0.4

    def test_tight_triangle_on_nearby_states(self, rng):
        applicable = 0
        for _ in range(50):
            rho = random_density(rng, 2)
            sigma = _towards_mixed(rho, 0.2)
            tau = _towards_mixed(sigma, 0.2)
            check = tight_triangle_check(rho, sigma, tau)
            if check.applicable:
                applicable += 1
                assert check.lhs <= check.rhs + 1e-9
        assert applicable > 0


class TestChannelPurifiedDistance:
    def test_identical_channels(self):
        interval = channel_purified_distance(identity_channel(2), identity_channel(2))
        assert interval.lower == interval.upper == 0.0

    def test_identity_against_full_depolarizing(self):
        opt = OptimizerConfig(starts=4, seed=0)
        interval = channel_purified_distance(identity_channel(2), depolarizing_channel(2, 1.0), opt)
        assert interval.lower >= math.sqrt(3) / 2 - 1e-6
        assert interval.upper <= 1.0 + 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(DomainError):
            channel_purified_distance(identity_channel(2), identity_channel(3))

    def test_fixture_values_match(self):
        rho = diagonal_state([0.5, 0.5])
        assert_allclose(fidelity(rho, rho), 1.0, atol=1e-12)
