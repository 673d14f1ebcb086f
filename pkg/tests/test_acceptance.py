"""One test per acceptance criterion; each prints a PASS/FAIL line with the measurement."""
import pytest

from rpe3bp import verify

from conftest import ACCEPTANCE_LINES

CRITERIA = [
    (1, verify.check_closed_form),
    (2, verify.check_conservation),
    (3, verify.check_mean_harmonic),
    (4, verify.check_exponential_law),
    (5, verify.check_mass_ratio),
    (6, verify.check_circular_shooting),
    (7, verify.check_cross_method),
    (8, verify.check_critical_phases),
    (9, verify.check_transversality),
    (10, verify.check_drift),
    (11, verify.check_circular_no_drift),
]


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k}={_fmt(x)}" for k, x in v.items()) + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


@pytest.mark.parametrize("cid,check", CRITERIA, ids=[f"criterion{c}" for c, _ in CRITERIA])
def test_criterion(cid, check):
    res = check()
    assert res["id"] == cid
    tag = "PASS" if res["passed"] else "FAIL"
    line = (f"{tag} criterion {cid}: {res['name']}; measured {_fmt(res['measured'])}; "
            f"threshold {_fmt(res['threshold'])}; {res['seconds']} s")
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert res["passed"], res["detail"]
