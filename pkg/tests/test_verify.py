import json
import math

import pytest

from renarea.verify import (
    IDENTITIES, SCHEMA_VERSION, VerificationReport, check, composite, term, validate_report_dict,
)


def report(residual=1e-3, tolerance=1e-2):
    return VerificationReport("thm_1_1", {"lhs": term(1.0, 1e-4), "rhs": term(1.001, 2e-4)},
                              residual, tolerance, False, {"scenario": "x", "seed": 0})


def test_pass_flag_is_derived():
    assert report().passed is True
    assert report(residual=-0.02).passed is False


def test_round_trip():
    r = report()
    d = json.loads(r.to_json())
    assert set(d) == {"identity_id", "terms", "residual", "tolerance", "pass", "provenance", "schema_version"}
    assert d["schema_version"] == SCHEMA_VERSION
    back = VerificationReport.from_dict(d)
    assert back.to_json() == r.to_json()


@pytest.mark.parametrize("mutate,msg", [
    (lambda d: d.pop("terms"), "missing"),
    (lambda d: d.update(schema_version=99), "schema version"),
    (lambda d: d.update({"pass": False}), "disagrees"),
    (lambda d: d["terms"].update(bad=3.0), "value/error"),
])
def test_schema_validation(mutate, msg):
    d = report().to_dict()
    mutate(d)
    with pytest.raises(ValueError, match=msg):
        validate_report_dict(d)


def test_unknown_identity():
    with pytest.raises(ValueError, match="unknown identity"):
        VerificationReport("nope", {}, 0, 1, True)


def test_composite_takes_worst_applicable_ratio():
    checks = [check("a", 1e-5, 1e-4), check("b", -3e-2, 1e-2), check("c", 5.0, 1.0, applicable=False)]
    r = composite("lemma_4_2_decays", {}, checks, {})
    assert math.isclose(r.residual, 3.0) and not r.passed
    r = composite("lemma_4_2_decays", {}, checks[:1] + checks[2:], {})
    assert math.isclose(r.residual, 0.1) and r.passed


def test_identity_ids_are_unique():
    assert len(set(IDENTITIES)) == len(IDENTITIES)
