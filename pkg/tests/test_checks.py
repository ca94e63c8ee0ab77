import pytest

from helpers import rand_state
from stratiflow.harness.checks import CHECKS, INJECTIONS, check_suite, inject_fault
from stratiflow.harness.config import preset


@pytest.mark.parametrize("m", [1, 4, 8])
def test_all_checks_pass(m):
    ledger = check_suite(preset("audit", m=m))
    failed = {k: v for k, v in ledger.items() if not v["pass"]}
    assert not failed
    assert set(ledger) == set(CHECKS)


def test_zero_epsilon_suite_passes():
    ledger = check_suite(preset("audit", m=4, epsilon=0.0))
    assert all(v["pass"] for v in ledger.values())


@pytest.mark.parametrize("kind,flag", [("reality", "reality"), ("divergence", "divergence_free")])
def test_injection_flags_the_invariant(kind, flag):
    ledger = check_suite(preset("audit", m=4), inject=kind, only=["reality", "divergence_free"])
    assert ledger[flag]["pass"] is False
    other = ({"reality", "divergence_free"} - {flag}).pop()
    assert ledger[other]["pass"] is True


def test_inject_unknown():
    with pytest.raises(ValueError):
        inject_fault(rand_state(0, 2), "gravity")
    assert set(INJECTIONS) == {"reality", "divergence"}


def test_only_subset_and_unknown():
    ledger = check_suite(preset("audit", m=2), only=["leray"])
    assert list(ledger) == ["leray"] and ledger["leray"]["seconds"] >= 0
    with pytest.raises(ValueError):
        check_suite(preset("audit", m=2), only=["nope"])
