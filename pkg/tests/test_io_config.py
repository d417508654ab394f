import json
import math

import numpy as np
import pytest

from orlicz_lab.config import DEFAULTS, Expression, RunConfig
from orlicz_lab.errors import InvalidSpecError, ShapeError
from orlicz_lab.grid import BoxDomain
from orlicz_lab.io import (dumps, read_density_csv, read_grid_csv, write_density_csv,
                           write_grid_csv, write_table_csv)
from orlicz_lab.nfunc import NFunctionSpec


# --- CSV --------------------------------------------------------------------

@pytest.mark.parametrize("dom", [BoxDomain.interval(-2, 3, 32), BoxDomain.square(0, 1, 8)])
def test_grid_csv_round_trip(tmp_path, dom):
    u = dom.sample(lambda *x: np.sin(sum(x)) + 1 / 3)
    path = write_grid_csv(tmp_path / "u.csv", u)
    header = path.read_text().splitlines()[0]
    assert header == ("x1,value" if dom.d == 1 else "x1,x2,value")
    back = read_grid_csv(path, dom)
    assert np.array_equal(back.values, u.values)


def test_grid_csv_rejects_other_grid(tmp_path):
    path = write_grid_csv(tmp_path / "u.csv", BoxDomain.interval(0, 1, 32).constant(1.0))
    with pytest.raises(ShapeError):
        read_grid_csv(path, BoxDomain.interval(0, 1, 64))
    with pytest.raises(ShapeError):
        read_grid_csv(path, BoxDomain.interval(0, 2, 32))


def test_density_csv_round_trip(tmp_path):
    spec = NFunctionSpec.log_weighted(3)
    t = spec.scan_grid(257)
    path = write_density_csv(tmp_path / "m.csv", t, spec.m(t))
    tab = read_density_csv(path)
    np.testing.assert_allclose(tab.m(t), spec.m(t), rtol=1e-12)


def test_density_csv_needs_two_columns(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("t,m,extra\n1,2,3\n")
    with pytest.raises(InvalidSpecError):
        read_density_csv(path)


def test_table_csv(tmp_path):
    path = write_table_csv(tmp_path / "t.csv", [{"k": 1, "v": 0.1}, {"k": 2, "v": None}])
    assert path.read_text().splitlines() == ["k,v", "1,0.1", "2,"]


# --- JSON -------------------------------------------------------------------

def test_json_is_deterministic_and_sorted():
    a = {"b": np.float64(1.5), "a": [np.int64(2), np.bool_(True)], "c": np.arange(2.0)}
    text = dumps(a)
    assert text == dumps(dict(reversed(list(a.items()))))
    assert json.loads(text) == {"a": [2, True], "b": 1.5, "c": [0.0, 1.0]}


def test_json_non_finite_as_strings():
    out = json.loads(dumps({"x": math.inf, "y": -math.inf, "z": math.nan}))
    assert out == {"x": "inf", "y": "-inf", "z": "nan"}


def test_json_uses_to_dict():
    assert json.loads(dumps(NFunctionSpec.power(2)))["params"] == [2.0]


# --- expressions ------------------------------------------------------------

DOM = BoxDomain.interval(-2, 2, 32)


@pytest.mark.parametrize("text,f", [
    ("1 + x**2", lambda x: 1 + x ** 2),
    ("exp(-x**2)", lambda x: np.exp(-x ** 2)),
    ("gaussian(x, 0.4)", lambda x: np.exp(-(x / 0.4) ** 2)),
    ("gaussian(x1 - 1)", lambda x: np.exp(-(x - 1) ** 2)),
    ("hat(x/2)", lambda x: np.maximum(0, 1 - np.abs(x / 2))),
    ("-3.5", lambda x: np.full_like(x, -3.5)),
])
def test_expression_accepts(text, f):
    x = DOM.points[:, 0]
    np.testing.assert_allclose(Expression(text).sample(DOM).values, f(x), rtol=1e-14)


def test_expression_two_dimensional():
    sq = BoxDomain.square(0, 1, 8)
    vals = Expression("x1 * x2").sample(sq).values
    np.testing.assert_allclose(vals, sq.points[:, 0] * sq.points[:, 1])
    with pytest.raises(InvalidSpecError):
        Expression("x2").sample(DOM)


@pytest.mark.parametrize("text", [
    "", "__import__('os')", "x.real", "sin(x)", "x if x else 1", "y", "'a'", "True",
    "x // 2", "[x]", "exp(x, width=2)", "1 +", "1 / (x - x)",
])
def test_expression_rejects(text):
    with pytest.raises(InvalidSpecError):
        Expression(text).sample(DOM)


# --- run configuration ------------------------------------------------------

def test_defaults_are_the_prototype():
    cfg = RunConfig.load()
    ps = cfg.problem()
    assert ps.nfun == NFunctionSpec.power(3)
    assert (ps.p, ps.mu, ps.lam, ps.fp.s, ps.fp.d) == (1.5, 2.0, 1.0, 0.5, 1)
    assert cfg.raw == DEFAULTS


def test_unknown_keys_rejected(tmp_path):
    path = tmp_path / "c.json"
    path.write_text('{"nfunc": {}}')
    with pytest.raises(InvalidSpecError, match="unknown"):
        RunConfig.load(path)


def test_unreadable_config(tmp_path):
    path = tmp_path / "c.json"
    path.write_text("{not json")
    with pytest.raises(InvalidSpecError):
        RunConfig.load(path)
    with pytest.raises(InvalidSpecError):
        RunConfig.load(tmp_path / "missing.json")


def test_nested_merge_and_nfun_replacement(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"domain": {"n": 32},
                                "nfun": {"family": "power_sum", "params": [3, 4]}}))
    cfg = RunConfig.load(path, {"operator": {"domain": {"n": 64}}})
    assert cfg.domain().n == 32 and cfg.domain().lo == (-6.0,)
    assert cfg.operator_domain().n == 64
    assert cfg.nfun() == NFunctionSpec.power_sum(3, 4)


def test_sha256_tracks_content():
    a, b = RunConfig.load(), RunConfig.load()
    assert a.sha256 == b.sha256 and len(a.sha256) == 64
    assert RunConfig.load(overrides={"p": 1.4}).sha256 != a.sha256


def test_fields_from_number_and_csv(tmp_path):
    dom = BoxDomain.interval(-6, 6, 64)
    write_grid_csv(tmp_path / "V.csv", dom.sample(lambda x: 2 + x ** 2))
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"V": {"csv": "V.csv"}, "xi": 0.5}))
    cfg = RunConfig.load(path)
    np.testing.assert_array_equal(cfg.field("V", dom).values, 2 + dom.points[:, 0] ** 2)
    assert np.all(cfg.field("xi", dom).values == 0.5)


def test_tabulated_nfun_from_csv(tmp_path):
    spec = NFunctionSpec.power(3)
    t = spec.scan_grid(129)
    write_density_csv(tmp_path / "m.csv", t, spec.m(t))
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"nfun": {"family": "tabulated", "csv": "m.csv"}}))
    tab = RunConfig.load(path).nfun()
    np.testing.assert_allclose(tab.m(t), spec.m(t), rtol=1e-12)


def test_bad_nfun_spec():
    with pytest.raises(InvalidSpecError):
        RunConfig.load(overrides={"nfun": {"params": [2]}}).nfun()
    with pytest.raises(InvalidSpecError):
        RunConfig.load(overrides={"nfun": {"family": "cubic"}}).nfun()
