import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parafrac.config import build, dump_config, load_config, parse_config
from parafrac.errors import ConfigError
from parafrac.maps1d import Affine, MPInverseBranch, Reflected
from parafrac.measure import TableMeasure

from .conftest import CONFIGS, DATA

BUNDLED = sorted(p.stem for p in CONFIGS.glob("*.json"))


@pytest.mark.parametrize("name", BUNDLED)
def test_round_trip(name):
    cfg = load_config(CONFIGS / f"{name}.json")
    again = parse_config(json.loads(dump_config(cfg)))
    assert again == cfg
    assert dump_config(again) == dump_config(cfg)


def test_number_forms():
    cfg = load_config(CONFIGS / "middle_third.json")
    assert cfg.maps[1].offset == pytest.approx(2 / 3)
    assert cfg.deltas[1] == pytest.approx(3.0 ** -4)


@settings(max_examples=30)
@given(st.integers(1, 9), st.integers(-6, -1))
def test_power_strings(base, exp):
    cfg = parse_config({"kind": "cantor", "maps": [{"kind": "affine", "slope": 0.5}], "deltas": [f"{base}^{exp}"]})
    assert cfg.deltas[0] == pytest.approx(float(base) ** exp)


@pytest.mark.parametrize("bad", [
    {"kind": "cantor"},
    {"kind": "cantor", "maps": [{"kind": "affine", "slope": "one"}]},
    {"kind": "carpet", "columns": [{"kind": "affine", "slope": 0.5}], "rows": [{"kind": "affine", "slope": 0.5}],
     "grid": [[0, 1]]},
    {"kind": "cantor", "maps": [{"kind": "affine", "slope": 0.5}], "extra": 1},
    {"kind": "cantor", "maps": [{"kind": "affine", "slope": 0.5}], "proxy": "median"},
    {"kind": "cantor", "maps": [{"kind": "affine", "slope": 0.5}], "measure": {}},
])
def test_rejects_malformed(bad):
    with pytest.raises(ConfigError):
        parse_config(bad)


def test_weight_count_mismatch():
    with pytest.raises(ConfigError, match="3 weights for 2 symbols"):
        load_config(DATA / "bad_weights.json")


def test_missing_file():
    with pytest.raises(ConfigError):
        load_config(DATA / "nope.json")


def test_table_path_relative_to_config(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    system, measure = build(load_config(DATA / "table_cantor.json"))
    assert isinstance(measure, TableMeasure)
    assert measure.mass((1, 0)) == pytest.approx(0.22)


def test_build_map_kinds():
    system, measure = build(load_config(DATA / "two_parabolic.json"))
    assert isinstance(system.maps[0], MPInverseBranch)
    assert isinstance(system.maps[1], Reflected)
    assert measure.weights == pytest.approx((0.5, 0.5))


def test_proxy_and_induced_fields():
    cfg = load_config(CONFIGS / "fig1_right.json")
    assert cfg.proxy == "length" and cfg.induced is None
    assert load_config(CONFIGS / "mp_cantor_09.json").induced == 30


def test_carpet_build(bedford_mcmullen):
    system, _ = build(load_config(CONFIGS / "bedford_mcmullen.json"))
    assert system.grid == bedford_mcmullen.grid
    assert all(isinstance(m, Affine) for m in system.columns + system.rows)
