import math

import numpy as np
import pytest

from src.errors import DomainError
from src.measures.entropies import (
    dmax,
    dmin,
    imax,
    imax_certified,
    mutual_information,
    mutual_information_variance,
    petz_renyi,
    relative_entropy,
    relative_entropy_variance,
    renyi_mutual_information,
    sandwiched_renyi,
    varentropy,
    von_neumann,
)
from src.quantum.qregisters import basis_state, maximally_mixed, tensor
from src.utils.sampling import random_density

H_QUARTER = -(0.75 * math.log2(0.75) + 0.25 * math.log2(0.25))


class TestSingleStateEntropies:
    def test_binary_entropy(self, q34):
        assert von_neumann(q34).bits == pytest.approx(H_QUARTER, abs=1e-12)

    def test_pure_state_has_zero_entropy(self):
        assert von_neumann(basis_state(3, 1)).bits == 0.0

    def test_varentropy(self, q34):
        assert varentropy(q34).bits == pytest.approx(0.1875 * math.log2(3) ** 2, abs=1e-12)

    def test_maximally_mixed_has_no_varentropy(self):
        assert varentropy(maximally_mixed(4)).bits == pytest.approx(0.0, abs=1e-12)


class TestDivergences:
    def test_relative_entropy_to_mixed(self, q34):
        sigma = maximally_mixed(2, "B")
        assert relative_entropy(q34, sigma).bits == pytest.approx(1 - H_QUARTER, abs=1e-12)

    def test_support_violation_is_infinite(self):
        value = relative_entropy(basis_state(2, 0), basis_state(2, 1))
        assert not value.finite and value.bits == math.inf
        assert not dmax(basis_state(2, 0), basis_state(2, 1)).finite
        assert not dmin(basis_state(2, 0), basis_state(2, 1)).finite

    def test_commuting_closed_forms(self, q34):
        sigma = maximally_mixed(2, "B")
        assert dmax(q34, sigma).bits == pytest.approx(math.log2(1.5), abs=1e-12)
        f = math.sqrt(0.375) + math.sqrt(0.125)
        assert dmin(q34, sigma).bits == pytest.approx(-2 * math.log2(f), abs=1e-10)
        assert relative_entropy_variance(q34, sigma).bits == pytest.approx(varentropy(q34).bits, abs=1e-10)

    def test_ordering(self, rng):
        for _ in range(20):
            rho, sigma = random_density(rng, 3), random_density(rng, 3)
            lo, mid, hi = dmin(rho, sigma).bits, relative_entropy(rho, sigma).bits, dmax(rho, sigma).bits
            assert lo <= mid + 1e-9
            assert mid <= hi + 1e-9

    def test_sandwiched_endpoints(self, rng):
        rho, sigma = random_density(rng, 2), random_density(rng, 2)
        assert sandwiched_renyi(rho, sigma, 1).bits == relative_entropy(rho, sigma).bits
        assert sandwiched_renyi(rho, sigma, math.inf).bits == dmax(rho, sigma).bits
        assert sandwiched_renyi(rho, sigma, 0.5).bits == dmin(rho, sigma).bits

    def test_sandwiched_order_two_commuting(self, q34):
        value = sandwiched_renyi(q34, maximally_mixed(2, "B"), 2.0)
        assert value.bits == pytest.approx(math.log2(1.25), abs=1e-10)

    def test_sandwiched_is_monotone_in_order(self, rng):
        rho, sigma = random_density(rng, 2), random_density(rng, 2)
        orders = [0.6, 0.8, 1.5, 3.0]
        values = [sandwiched_renyi(rho, sigma, a).bits for a in orders]
        assert all(a <= b + 1e-9 for a, b in zip(values, values[1:]))

    def test_petz_order_domain(self, q34):
        with pytest.raises(DomainError):
            petz_renyi(q34, maximally_mixed(2, "B"), 2.5)

    def test_petz_matches_sandwiched_when_commuting(self, q34):
        sigma = maximally_mixed(2, "B")
        assert petz_renyi(q34, sigma, 1.5).bits == pytest.approx(sandwiched_renyi(q34, sigma, 1.5).bits, abs=1e-10)


class TestMutualInformation:
    def test_bell_state(self, bell):
        assert mutual_information(bell).bits == pytest.approx(2.0, abs=1e-10)
        assert mutual_information_variance(bell).bits == pytest.approx(0.0, abs=1e-10)

    def test_product_state(self, rng):
        state = tensor(random_density(rng, 2, "A"), random_density(rng, 3, "B"))
        assert mutual_information(state).bits == pytest.approx(0.0, abs=1e-10)

    def test_imax_bell_is_two(self, bell):
        cert = imax_certified(bell)
        assert cert.value.bits == pytest.approx(2.0, abs=1e-6)
        assert cert.relative_gap <= 1e-7

    def test_imax_product_state_is_zero(self, rng):
        state = tensor(random_density(rng, 2, "A"), random_density(rng, 2, "B"))
        assert imax(state).bits == pytest.approx(0.0, abs=1e-6)

    def test_imax_dominates_mutual_information(self, rng):
        rho = random_density(rng, [2, 2])
        assert mutual_information(rho).bits <= imax(rho).bits + 1e-6

    def test_imax_support_condition(self, bell):
        tau = np.diag([1.0, 0.0])
        assert not imax(bell, tau).finite

    def test_half_order_on_bell(self, bell):
        assert renyi_mutual_information(bell, None, 0.5).bits == pytest.approx(2.0, abs=1e-6)

    def test_half_order_fixed_point_is_an_upper_bound(self, rng):
        rho = random_density(rng, [2, 2])
        exact = renyi_mutual_information(rho, None, 0.5).bits
        iterated = renyi_mutual_information(rho, None, 0.5, method="fixed_point").bits
        assert iterated >= exact - 1e-6

    def test_other_orders_need_samples(self, bell):
        with pytest.raises(DomainError):
            renyi_mutual_information(bell, None, 2.0)
