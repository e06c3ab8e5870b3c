from __future__ import annotations

import json

import pytest

from dppsw.validate import CHECKS, SCHEMA, lc_identity_error, run_validation


@pytest.fixture(scope="module")
def report():
    return run_validation()


def test_report_schema(report):
    assert report["schema"] == SCHEMA
    assert set(report) >= {"schema", "version", "faults", "passed", "failures", "checks"}
    json.dumps(report)
    groups = {c["name"].split(".")[0] for c in report["checks"]}
    assert groups >= {"moments", "orthonormality", "projection", "q_to_1", "partition"}


def test_every_check_has_measurement_and_tolerance(report):
    for c in report["checks"]:
        assert c["tolerance"] > 0
        assert c["passed"] == (c["measured"] < c["tolerance"])


def test_clean_build_passes(report):
    assert report["passed"], report["failures"]


def test_fault_injection_names_orthonormality():
    r = run_validation({"t_n_scale": 1.01}, groups=["orthonormality"])
    assert not r["passed"]
    assert r["failures"] and all(n.startswith("orthonormality") for n in r["failures"])


def test_scale_fault_size():
    assert lc_identity_error(1.0, 0.5) < 1e-9
    assert lc_identity_error(1.0, 0.5, t_n_scale=1.01) > 1e-3


def test_deterministic():
    a = run_validation(groups=["moments"])
    b = run_validation(groups=["moments"])
    assert a == b


def test_unknown_group():
    with pytest.raises(KeyError):
        run_validation(groups=["nope"])
    assert "moments" in CHECKS
