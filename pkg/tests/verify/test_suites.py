import pytest

from src.constants import REPORT_COLUMNS
from src.errors import DomainError
from src.verify.suites import (
    SUITE_LABELS,
    SUITES,
    SuiteResult,
    label_names,
    report_frame,
    resolve_suites,
    run_suite,
    run_suites,
    suite_names,
)

FAST_SUITES = [
    "tight-triangle",
    "bound-monotonicity",
    "purified-scaling",
    "cq-fidelity",
    "quasi-convexity",
    "pure-state-variance",
    "variance-bound",
    "neyman-pearson",
    "info-spectrum",
    "expansion-identities",
    "teleportation",
    "strong-converse",
]

SLOW_SUITES = [
    "data-processing",
    "duality",
    "non-lockability",
    "smoothing-sandwich",
    "max-information-anchor",
    "moderate-deviation-trend",
    "channel-functionals",
    "convex-split",
    "de-finetti",
    "symmetrization",
]


def test_registry_covers_every_suite():
    assert set(suite_names()) == set(FAST_SUITES) | set(SLOW_SUITES)
    assert suite_names() == list(SUITES)


@pytest.mark.parametrize("name", FAST_SUITES)
def test_fast_suite_passes(name):
    result = run_suite(name, trials=5, seed=7)
    assert isinstance(result, SuiteResult)
    assert result.name == name
    assert result.passed, result


@pytest.mark.slow
@pytest.mark.parametrize("name", SLOW_SUITES)
def test_slow_suite_passes(name):
    result = run_suite(name, trials=2, seed=7)
    assert result.passed, result


def test_seeded_runs_repeat():
    first = run_suite("purified-scaling", trials=5, seed=3)
    second = run_suite("purified-scaling", trials=5, seed=3)
    assert first == second


def test_run_suites_keeps_registry_order():
    results = run_suites(["variance-bound", "tight-triangle"], trials=2, seed=0)
    assert [r.name for r in results] == ["tight-triangle", "variance-bound"]


def test_unknown_suite():
    with pytest.raises(DomainError):
        run_suites(["no-such-suite"], trials=1, seed=0)


def test_report_frame_columns():
    frame = report_frame(run_suites("variance-bound", trials=2, seed=0))
    assert list(frame.columns) == REPORT_COLUMNS
    assert len(frame) == 1


def test_labels_name_registered_suites():
    assert set(SUITE_LABELS) <= set(SUITES)
    assert "lemma3" in label_names()


@pytest.mark.parametrize(
    "label, suite",
    [("lemma3", "tight-triangle"), ("lemma4", "smoothing-sandwich"), ("lemma10", "teleportation")],
)
def test_label_resolves_to_its_suite(label, suite):
    assert resolve_suites([label]) == [suite]


def test_all_resolves_to_registry():
    assert resolve_suites("all") == suite_names()


def test_shared_label_and_name_collapse():
    assert resolve_suites(["lemma19", "smoothing-sandwich", "lemma3"]) == ["tight-triangle", "smoothing-sandwich"]


def test_unknown_label():
    with pytest.raises(DomainError):
        resolve_suites(["lemma99"])


def test_report_frame_carries_labels():
    frame = report_frame(run_suites(["lemma3"], trials=2, seed=0))
    assert frame["name"].tolist() == ["tight-triangle"]
    assert frame["labels"].tolist() == ["lemma3"]
