import logging

import pytest

from src.errors import DomainError
from src.measures.values import BoundInterval, SmoothingRadius


class TestBoundInterval:
    def test_ordered_keeps_ordered_ends(self):
        interval = BoundInterval.ordered(0.2, 0.7, "low", "high")
        assert (interval.lower, interval.upper) == (0.2, 0.7)
        assert not interval.clamped

    def test_ordered_flags_and_logs_inverted_ends(self, caplog):
        with caplog.at_level(logging.WARNING, logger="src.measures.values"):
            interval = BoundInterval.ordered(0.9, 0.4, "low", "high")
        assert interval.clamped
        assert interval.lower == interval.upper == 0.4
        assert "Inverted bounds" in caplog.text

    def test_constructor_rejects_inverted_ends(self):
        with pytest.raises(DomainError):
            BoundInterval(0.9, 0.4, "low", "high")

    def test_shift_and_scale_keep_the_flag(self):
        interval = BoundInterval(0.4, 0.4, "low", "high", clamped=True)
        shifted = interval.shifted(1.0, upper_note=" + 1")
        assert shifted.clamped
        assert shifted.upper_provenance == "high + 1"
        assert interval.scaled(0.5).clamped
        assert interval.scaled(0.5).upper == pytest.approx(0.2)

    def test_negative_scale(self):
        with pytest.raises(DomainError):
            BoundInterval(0.0, 1.0, "low", "high").scaled(-1.0)


class TestSmoothingRadius:
    @pytest.mark.parametrize("eps", [-0.1, 1.5])
    def test_domain(self, eps):
        with pytest.raises(DomainError):
            SmoothingRadius(eps)

    def test_within(self):
        assert SmoothingRadius(0.0).within(0.5)
        assert not SmoothingRadius(0.0).within(0.5, open_lower=True)
        assert SmoothingRadius(1.0).within(1.0, open_lower=True)
        assert not SmoothingRadius(0.6).within(0.5)
