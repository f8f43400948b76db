import math

import numpy as np
import pytest

from src.constants import RESIDUAL_CSV_COLUMNS
from src.errors import DomainError
from src.expansions.moddev import (
    ExpansionInputs,
    ModerateSequence,
    classify,
    ea_coding_lower_bound,
    ea_coding_parameters,
    ea_coding_terms,
    error_rescale,
    expansion,
    expansion_frame,
    expansion_term,
    first_index_within,
    residual_curve,
    second_order_source_rate,
)
from src.quantum.qchannels import identity_channel
from src.quantum.qregisters import maximally_entangled, purify

H_QUARTER = -(0.75 * math.log2(0.75) + 0.25 * math.log2(0.25))
V_QUARTER = 0.1875 * math.log2(3) ** 2


class TestModerateSequence:
    def test_power_family(self):
        seq = ModerateSequence(1 / 3)
        assert seq.a(1000) == pytest.approx(0.1)
        assert seq.eps(1000) == pytest.approx(math.exp(-10))

    def test_log_factor(self):
        seq = ModerateSequence(0.5, 1.0, 2.0)
        assert seq.a(100) == pytest.approx(2.0 * 100**-0.5 * math.log(100))

    def test_scale_must_be_positive(self):
        with pytest.raises(DomainError):
            ModerateSequence(scale=0.0)

    def test_table_needs_four_points(self):
        with pytest.raises(DomainError):
            ModerateSequence(table=((1, 1.0), (2, 0.5)))

    def test_table_lookup(self):
        seq = ModerateSequence(table=tuple((2**k, 2 ** (-k / 3)) for k in range(1, 11)))
        assert seq.family == "table"
        assert seq.a(8) == pytest.approx(0.5)
        with pytest.raises(DomainError):
            seq.a(3)


class TestClassification:
    @pytest.mark.parametrize(
        "alpha, beta, moderate, strict",
        [
            (1 / 3, 0.0, True, True),
            (0.5, 0.0, False, False),
            (0.5, 1.0, True, True),
            (0.5, 0.5, True, False),
            (0.0, 0.0, False, False),
            (0.7, 0.0, False, False),
        ],
    )
    def test_power_family(self, alpha, beta, moderate, strict):
        result = classify(ModerateSequence(alpha, beta))
        assert (result.moderate, result.strict, result.heuristic) == (moderate, strict, False)

    def test_tabulated_sequence_is_heuristic(self):
        seq = ModerateSequence(table=tuple((2**k, (2**k) ** (-1 / 3)) for k in range(1, 11)))
        result = classify(seq)
        assert result.heuristic
        assert result.moderate and result.strict


class TestErrorRescale:
    def test_unit_factor_keeps_the_sequence(self):
        assert error_rescale(ModerateSequence(1 / 3), 1000, 0.01, k=1.0)

    def test_constant_factor_eventually_fits(self):
        seq = ModerateSequence(1 / 3)
        assert error_rescale(seq, 10**6, 0.1, k=0.5)

    def test_polynomial_factor_needs_strict_sequence(self):
        with pytest.raises(DomainError):
            error_rescale(ModerateSequence(0.5, 0.5), 100, 0.1, degree=1.0)

    def test_exactly_one_factor(self):
        with pytest.raises(DomainError):
            error_rescale(ModerateSequence(), 100, 0.1)


class TestExpansionTable:
    def test_source_compression_value(self, q34):
        inputs = ExpansionInputs.from_state(q34)
        assert inputs.entropy == pytest.approx(H_QUARTER)
        assert inputs.entropy_variance == pytest.approx(V_QUARTER)
        assert expansion("source_low", inputs, ModerateSequence(1 / 3), 1000) == pytest.approx(0.9485399, abs=1e-7)

    def test_source_directions(self, q34):
        inputs = ExpansionInputs.from_state(q34)
        assert expansion_term("source_low", inputs).second_coeff > 0
        assert expansion_term("source_high", inputs).second_coeff < 0

    def test_state_splitting_matches_compression_for_pure_states(self, q34):
        pure = purify(q34, "R").state()
        splitting = expansion_term("state_splitting", ExpansionInputs.from_state(pure))
        source = expansion_term("source_low", ExpansionInputs.from_state(q34))
        assert splitting.leading == pytest.approx(source.leading, abs=1e-9)
        assert splitting.second_coeff == pytest.approx(source.second_coeff, abs=1e-8)

    def test_coding_to_simulation_ratio(self):
        inputs = ExpansionInputs(capacity=1.0, vmax=0.3)
        coding = expansion_term("channel_coding", inputs).second_coeff
        simulation = expansion_term("channel_sim", inputs).second_coeff
        assert coding / simulation == pytest.approx(1 / math.sqrt(2), abs=1e-15)

    def test_divergence_directions(self):
        inputs = ExpansionInputs(relative_entropy=0.5, relative_entropy_variance=0.5)
        assert expansion_term("dh_low", inputs).second_coeff == pytest.approx(-1.0)
        assert expansion_term("dh_high", inputs).second_coeff == pytest.approx(1.0)

    def test_missing_input(self):
        with pytest.raises(DomainError) as err:
            expansion_term("source_low", ExpansionInputs(capacity=1.0))
        assert err.value.precondition == "entropy available"

    def test_unknown_task(self):
        with pytest.raises(DomainError):
            expansion_term("compression", ExpansionInputs())

    def test_frame_columns(self, q34):
        frame = expansion_frame("source_low", ExpansionInputs.from_state(q34), ModerateSequence(), [16, 32, 64])
        assert list(frame.columns) == ["n", "a_n", "eps_n", "predicted"]
        assert frame["predicted"].is_monotonic_decreasing

    def test_gaussian_rate_at_median(self):
        eps = math.sqrt(0.75)
        assert second_order_source_rate(1.0, 0.5, 100, eps) == pytest.approx(1.0, abs=1e-12)


class TestResiduals:
    def test_first_index_within(self):
        assert first_index_within([0.5, 0.01, 0.02], [1, 2, 3], 0.05) == 2
        assert first_index_within([0.5, 0.01, 0.2], [1, 2, 3], 0.05) is None

    def test_divergence_curve(self):
        p, q = np.array([0.75, 0.25]), np.array([0.5, 0.5])
        curve = residual_curve("dh_low", (p, q), ModerateSequence(1 / 3), [16, 64, 256, 1024])
        assert list(curve.frame.columns) == RESIDUAL_CSV_COLUMNS
        variance = 0.1875 * math.log2(3) ** 2
        assert curve.slack == pytest.approx(0.05 * math.sqrt(2 * variance), rel=1e-9)
        assert np.all(np.isfinite(curve.frame["computed"]))

    def test_block_lengths_must_increase(self):
        p, q = np.array([0.75, 0.25]), np.array([0.5, 0.5])
        with pytest.raises(DomainError):
            residual_curve("dh_low", (p, q), ModerateSequence(), [64, 16])

    def test_residual_tasks_only(self, q34):
        with pytest.raises(DomainError):
            residual_curve("source_low", q34, ModerateSequence(), [16])


class TestEntanglementAssistedCoding:
    def test_parameter_identities(self):
        seq = ModerateSequence(1 / 3)
        n, alphabet = 512, 2
        params = ea_coding_parameters(seq, n, alphabet)
        terms = ea_coding_terms(n, params.mu, alphabet, params.eps, params.delta)
        a_n = seq.a(n)
        assert terms.g == pytest.approx(math.exp(-n * a_n**2), rel=1e-9)
        expected_gamma = 2 * alphabet * math.log2(n + 1) + 2 / math.log(2) * n * a_n**2
        assert terms.log_gamma == pytest.approx(expected_gamma, rel=1e-12)
        assert params.eps == pytest.approx(math.sqrt(1 - params.delta))

    def test_lower_bound_on_noiseless_qubit(self):
        n = 3
        params = ea_coding_parameters(ModerateSequence(1 / 3), n, 2)
        terms = ea_coding_terms(n, params.mu, 2, params.eps, params.delta)
        error = params.eps - 2 * params.delta - terms.g
        assert 0.0 <= error < 1.0
        bell = maximally_entangled(2)
        value = ea_coding_lower_bound(identity_channel(2), bell, n, params.eps, params.delta, params.mu)
        # D_h of n Bell pairs against the maximally mixed state is 2n - log(1 - error)
        expected = 2 * n - math.log2(1 - error) - terms.f - terms.log_gamma
        assert value == pytest.approx(expected, abs=1e-6)

    def test_lower_bound_rejects_negative_error(self):
        params = ea_coding_parameters(ModerateSequence(1 / 3), 2, 2)
        with pytest.raises(DomainError):
            ea_coding_lower_bound(identity_channel(2), maximally_entangled(2), 2, params.eps, params.delta, params.mu)
