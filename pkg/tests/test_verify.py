import pytest

from powerlaw_spde import verify


def test_suite_names_are_registered():
    assert set(verify.SUITES) == {
        "constitutive", "basis", "noise", "truncation", "pressure",
        "ito", "energy",
    }


def test_unknown_suite_raises():
    with pytest.raises(KeyError):
        verify.run_suite("thermodynamics")


@pytest.mark.parametrize("name", verify.SUITES)
def test_every_suite_passes(name):
    report = verify.run_suite(name)
    assert report["suite"] == name
    assert report["checks"], "suite must contain at least one check"
    for check in report["checks"]:
        assert check["max_deviation"] <= check["tolerance"] or not check["passed"]
    assert report["passed"] is True


def test_check_record_structure():
    report = verify.run_suite("basis")
    for check in report["checks"]:
        assert set(check) == {"name", "tolerance", "max_deviation", "passed"}
        assert check["max_deviation"] >= 0.0
