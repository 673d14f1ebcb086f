import json
import time

import numpy as np
import pytest

from rpe3bp import diffusion as dif
from rpe3bp.errors import StripExitError
from rpe3bp.scattering import CylinderPoint, ScatteringModel

START = CylinderPoint(0.0, 3.0)


@pytest.fixture(scope="module")
def model():
    return dif.model_for_window(0.3, 0.05, 2.5, 4.0, n_i=32)


@pytest.fixture(scope="module")
def chain(model):
    return dif.plan_drift(START, 3.05, model, 10 ** 7)


def test_massless_reports_failure():
    m = ScatteringModel(0.0, 0.05, strip=(2.5, 4.0))
    c = dif.plan_drift(START, 3.05, m, 1000)
    assert c.status == "no_drift" and not c.succeeded and len(c) == 0


def test_circular_does_not_drift():
    m = dif.model_for_window(0.3, 0.0, 2.5, 4.0, n_i=16)
    c = dif.plan_drift(START, 3.05, m, 2 * 10 ** 4)
    assert not c.succeeded and len(c) == 10 ** 4
    assert abs(c.end.i - 3.0) < 1e-9
    assert dif.single_map_control(START, 1, 10 ** 4, m).max_excursion < 1e-12


def test_chain_reaches_target(chain):
    assert chain.succeeded and chain.end.i >= 3.05
    assert chain.meta["evaluations"] <= 10 ** 7


def test_chain_is_replayable(chain, model):
    assert np.array_equal(dif.replay(chain, model), chain.points)


def test_determinism(chain, model):
    again = dif.plan_drift(START, 3.05, model, 10 ** 7)
    assert again == chain


def test_chain_alternates(chain):
    assert set(np.unique(chain.signs)) == {-1, 1}


def test_smoothed_climb(chain):
    sm = dif.smoothed_i(chain, dif.circulation_steps(chain))
    assert np.all(np.diff(sm) >= 0)


@pytest.mark.parametrize("sign", [1, -1])
def test_single_map_recurs(model, sign):
    res = dif.single_map_control(START, sign, 10 ** 5, model)
    assert res.returns >= 10
    assert res.max_excursion < 0.05


def test_alternation_beats_single_map(model):
    n = 10 ** 5
    ctrl = dif.single_map_control(START, 1, n, model).max_excursion
    alt = dif.plan_drift(START, 3.95, model, 2 * n)
    assert (alt.end.i - START.i) / ctrl > 10


def test_rate_grows_with_eccentricity(model, chain):
    weak = dif.model_for_window(0.3, 0.02, 2.5, 3.6, n_i=32)
    slow = dif.plan_drift(START, 3.05, weak, 10 ** 7)
    assert dif.drift_rate(chain) > dif.drift_rate(slow) > 0


def test_strip_exit(model):
    m = dif.model_for_window(0.3, 0.05, 2.5, 4.0, n_i=32)
    m.strip = (2.5, 3.02)
    with pytest.raises(StripExitError):
        dif.single_map_control(START, 1, 10 ** 5, m)
    with pytest.raises(StripExitError) as info:
        dif.plan_drift(CylinderPoint(0.0, 2.0), 3.0, m, 10)
    assert info.value.chain is None
    with pytest.raises(StripExitError):
        dif.plan_drift(START, 3.5, m, 10)


def test_export_round_trip(chain, tmp_path):
    path = tmp_path / "chain.json"
    dif.export_pseudo_orbit(chain, path)
    doc = json.loads(path.read_text())
    assert doc["schema"] == dif.SCHEMA and doc["version"] == dif.SCHEMA_VERSION
    assert doc["records"][0][0] == 0 and len(doc["records"]) == len(chain) + 1
    assert dif.load_pseudo_orbit(path) == chain


def test_export_empty(tmp_path):
    path = tmp_path / "empty.json"
    dif.export_pseudo_orbit(dif.empty_chain({"note": "none"}), path)
    back = dif.load_pseudo_orbit(path)
    assert len(back.points) == 0 and json.loads(path.read_text())["records"] == []


def test_export_million_steps(model, tmp_path):
    c = dif.plan_drift(START, 3.99, model, 2 * 10 ** 6)
    assert len(c) == 10 ** 6
    t0 = time.perf_counter()
    path = tmp_path / "big.json"
    dif.export_pseudo_orbit(c, path)
    back = dif.load_pseudo_orbit(path)
    assert time.perf_counter() - t0 < 10
    assert back == c
