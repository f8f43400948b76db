import numpy as np
import pytest

from src.errors import DomainError
from src.measures.entropies import dmax, dmin
from src.measures.smoothing import (
    dmax_smoothed_bounds,
    dmin_smoothed_bounds,
    dmin_smoothed_upper,
    exact_smoothing_oracle,
    imax_partially_smoothed_bounds,
    source_coding_cost_upper,
    state_splitting_cost_bounds,
)
from src.quantum.qregisters import diagonal_state
from src.utils.sampling import random_density, random_probabilities

ORACLE_TOL = 1e-6


@pytest.fixture
def correlated_bits():
    return diagonal_state([0.4, 0.1, 0.1, 0.4], [2, 2], ["B", "R"])


class TestMaxRelativeEntropyBounds:
    def test_collapses_without_smoothing(self, q34):
        sigma = diagonal_state([0.5, 0.5], labels="B")
        interval = dmax_smoothed_bounds(q34, sigma, 0.0)
        assert interval.lower == interval.upper == pytest.approx(dmax(q34, sigma).bits)

    def test_upper_never_exceeds_unsmoothed(self, rng):
        rho, sigma = random_density(rng, 3), random_density(rng, 3)
        assert dmax_smoothed_bounds(rho, sigma, 0.3).upper <= dmax(rho, sigma).bits + 1e-12

    def test_oracle_inside_interval(self, rng):
        for _ in range(5):
            p, q = random_probabilities(rng, 3), random_probabilities(rng, 3)
            rho, sigma = np.diag(p), np.diag(q)
            eps = float(rng.uniform(0.1, 0.6))
            oracle = exact_smoothing_oracle("dmax", rho, sigma, eps)
            interval = dmax_smoothed_bounds(rho, sigma, eps)
            assert interval.contains(oracle, tol=ORACLE_TOL)

    def test_delta_domain(self, q34):
        with pytest.raises(DomainError):
            dmax_smoothed_bounds(q34, q34, 0.5, delta=0.9)


class TestMinRelativeEntropyBounds:
    def test_lower_end_is_unsmoothed(self, rng):
        rho, sigma = random_density(rng, 2), random_density(rng, 2)
        assert dmin_smoothed_bounds(rho, sigma, 0.2).lower == pytest.approx(dmin(rho, sigma).bits)

    def test_oracle_inside_interval(self, rng):
        for _ in range(5):
            p, q = random_probabilities(rng, 3), random_probabilities(rng, 3)
            rho, sigma = np.diag(p), np.diag(q)
            oracle = exact_smoothing_oracle("dmin", rho, sigma, 0.2)
            assert dmin_smoothed_bounds(rho, sigma, 0.2).contains(oracle, tol=ORACLE_TOL)

    def test_constant_must_exceed_one(self, q34):
        with pytest.raises(DomainError) as err:
            dmin_smoothed_upper(q34, q34, 0.2, k=1.0)
        assert err.value.precondition == "k > 1"

    def test_second_route_only_tightens(self, rng):
        rho, sigma = random_density(rng, 2), random_density(rng, 2)
        plain = dmin_smoothed_upper(rho, sigma, 0.2)
        both = dmin_smoothed_upper(rho, sigma, 0.2, eps_prime=0.1)
        assert both <= plain


class TestMaxInformationBounds:
    def test_bell_state_is_exact_without_smoothing(self, bell):
        interval = imax_partially_smoothed_bounds(bell)
        assert interval.lower == pytest.approx(2.0, abs=1e-6)
        assert interval.width == 0.0

    def test_oracle_inside_interval(self, correlated_bits):
        oracle = exact_smoothing_oracle("imax_partial", correlated_bits, eps=0.3)
        interval = imax_partially_smoothed_bounds(correlated_bits, 1, 0.3)
        assert interval.contains(oracle, tol=ORACLE_TOL)

    def test_partially_smoothed_dominates_smoothed(self, correlated_bits):
        partial = exact_smoothing_oracle("imax_partial", correlated_bits, eps=0.3)
        free = exact_smoothing_oracle("imax", correlated_bits, eps=0.3)
        assert free <= partial + ORACLE_TOL

    def test_oracle_needs_diagonal_input(self, bell):
        with pytest.raises(DomainError) as err:
            exact_smoothing_oracle("imax_partial", bell, eps=0.1)
        assert err.value.precondition == "diagonal input"

    def test_unknown_oracle_kind(self, correlated_bits):
        with pytest.raises(DomainError):
            exact_smoothing_oracle("hmin", correlated_bits, eps=0.1)


class TestOperationalCosts:
    def test_state_splitting_interval(self, correlated_bits):
        interval = state_splitting_cost_bounds(correlated_bits, 0.5)
        assert interval.lower <= interval.upper

    def test_state_splitting_delta_domain(self, correlated_bits):
        with pytest.raises(DomainError):
            state_splitting_cost_bounds(correlated_bits, 0.2, delta=0.3)

    def test_source_coding_takes_the_better_step(self, q34):
        bound = source_coding_cost_upper(q34, 0.5)
        assert bound.best == min(bound.info_spectrum, bound.hypothesis_testing)
