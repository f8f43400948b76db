import math
from functools import reduce

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.optimize import linprog

from src.errors import DomainError
from src.measures.hypotest import (
    ClassicalIIDSpec,
    compositions,
    dh,
    dh_classical_iid,
    dh_test,
    info_spectrum,
    info_spectrum_entropy,
    np_curve,
)
from src.quantum.qregisters import diagonal_state, maximally_mixed, tensor_power
from src.utils.sampling import random_density, random_probabilities


def lp_beta(p: np.ndarray, q: np.ndarray, eps: float) -> float:
    result = linprog(q, A_ub=[-p], b_ub=[-(1 - eps)], bounds=[(0, 1)] * p.size, method="highs")
    return float(result.fun)


class TestHypothesisTesting:
    def test_product_fixture_value(self, q34):
        value = dh(tensor_power(q34, 2), maximally_mixed([2, 2], ["B1", "B2"]), 0.1)
        assert value.bits == pytest.approx(-math.log2(0.7), abs=1e-7)
        assert value.bits == pytest.approx(0.5145732, abs=1e-7)

    def test_same_state(self, rng):
        rho = random_density(rng, 3)
        assert dh(rho, rho, 0.2).bits == pytest.approx(-math.log2(0.8), abs=1e-8)

    def test_full_support_at_zero_error(self, q34):
        assert dh(q34, maximally_mixed(2, "B"), 0.0).bits == pytest.approx(0.0, abs=1e-12)

    def test_orthogonal_support_is_infinite(self):
        value = dh(diagonal_state([1.0, 0.0]), diagonal_state([0.0, 1.0]), 0.1)
        assert not value.finite

    def test_optimal_test_meets_type_one_constraint(self, rng):
        rho, sigma = random_density(rng, 3), random_density(rng, 3)
        test = dh_test(rho, sigma, 0.25)
        assert test.alpha == pytest.approx(0.75, abs=1e-9)
        assert np.trace(test.test @ rho.matrix).real >= 0.75 - 1e-9
        assert np.linalg.eigvalsh(test.test).min() >= -1e-9
        assert np.linalg.eigvalsh(np.eye(3) - test.test).max() <= 1 + 1e-9

    def test_eps_domain(self, q34):
        with pytest.raises(DomainError) as err:
            dh(q34, q34, 1.0)
        assert err.value.precondition == "eps in [0, 1)"

    def test_matches_linear_program_on_diagonal_instances(self, rng):
        for _ in range(50):
            dim = int(rng.integers(2, 17))
            p, q = random_probabilities(rng, dim), random_probabilities(rng, dim)
            eps = float(rng.uniform(0.0, 0.9))
            beta = dh_test(np.diag(p), np.diag(q), eps).beta
            assert_allclose(beta, lp_beta(p, q, eps), atol=1e-10)

    def test_random_feasible_tests_do_no_better(self, rng):
        rho, sigma = random_density(rng, 2), random_density(rng, 2)
        eps = 0.2
        beta = dh_test(rho, sigma, eps).beta
        for _ in range(30):
            m = random_density(rng, 2).matrix
            alpha = np.trace(m @ rho.matrix).real
            if alpha < 1 - eps:
                continue
            scaled = m * (1 - eps) / alpha
            assert np.trace(scaled @ sigma.matrix).real >= beta - 1e-9


class TestTypeClasses:
    def test_compositions(self):
        assert compositions(3, 2).tolist() == [[0, 3], [1, 2], [2, 1], [3, 0]]
        assert len(compositions(4, 3)) == math.comb(6, 2)

    def test_spec_validation(self):
        with pytest.raises(DomainError):
            ClassicalIIDSpec(np.array([0.5, 0.5]), np.array([1.0]), 2)

    @pytest.mark.parametrize("n", [1, 2, 3, 5, 6])
    def test_agrees_with_explicit_tensor_power(self, n):
        p, q = np.array([0.75, 0.25]), np.array([0.5, 0.5])
        explicit_p = reduce(np.kron, [p] * n)
        explicit_q = reduce(np.kron, [q] * n)
        for eps in (0.05, 0.3, 0.7):
            expected = dh(np.diag(explicit_p), np.diag(explicit_q), eps).bits
            assert dh_classical_iid(ClassicalIIDSpec(p, q, n), eps).bits == pytest.approx(expected, abs=1e-8)

    def test_large_block_length_per_copy_rate(self):
        p, q = np.array([0.75, 0.25]), np.array([0.5, 0.5])
        divergence = 0.75 * math.log2(1.5) + 0.25 * math.log2(0.5)
        rate = dh_classical_iid(ClassicalIIDSpec(p, q, 4096), 0.5).bits / 4096
        assert rate == pytest.approx(divergence, abs=5e-3)


class TestInformationSpectrum:
    def test_self_divergence_is_log_eps(self, rng):
        rho = diagonal_state(random_probabilities(rng, 4))
        assert info_spectrum(rho, rho, 0.3).bits == pytest.approx(math.log2(0.3), abs=1e-10)

    def test_noncommuting_self_divergence(self, rng):
        rho = random_density(rng, 3)
        assert info_spectrum(rho, rho, 0.3).bits == pytest.approx(math.log2(0.3), abs=1e-6)

    def test_entropy_is_negated_divergence_against_identity(self, q34):
        expected = -info_spectrum(q34, np.eye(2), 0.2).bits
        assert info_spectrum_entropy(q34, 0.2).bits == pytest.approx(expected)

    def test_eps_domain(self, q34):
        with pytest.raises(DomainError):
            info_spectrum(q34, q34, 0.0)


class TestNPCurve:
    def test_endpoints_and_monotonicity(self, rng):
        rho, sigma = random_density(rng, 3), random_density(rng, 3)
        points = np_curve(rho, sigma, [0.0, 0.5, 1.0, 2.0, 1e6])
        assert points[0].alpha == pytest.approx(1.0, abs=1e-9)
        assert points[-1].alpha == pytest.approx(0.0, abs=1e-9)
        betas = [pt.beta for pt in points]
        assert all(a >= b - 1e-12 for a, b in zip(betas, betas[1:]))
