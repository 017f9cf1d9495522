import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from legendrix import io
from legendrix.config import ConfigError, ExperimentConfig, load_config
from legendrix.potentials import Potential, default_potential


def test_fmt_is_fixed():
    assert io.fmt(1.0) == "1.0000000000000000e+00"
    assert io.fmt(3) == "3"
    assert io.fmt(True) == "1"
    assert io.fmt(float("nan")) == "nan"


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_roundtrips_to_full_precision(x):
    assert float(io.fmt(x)) == x


def test_json_is_sorted_and_versioned(tmp_path):
    path = io.write_json(tmp_path / "a.json", {"b": np.float64(1.5), "a": np.arange(2), "c": float("nan")})
    text = path.read_text()
    assert text.index('"a"') < text.index('"b"') < text.index('"schema_version"')
    obj = io.read_json(path)
    assert obj["c"] is None and obj["a"] == [0, 1]
    (tmp_path / "old.json").write_text(json.dumps({"schema_version": "0.1"}))
    with pytest.raises(io.SchemaError):
        io.read_json(tmp_path / "old.json")


def test_csv_schema_line(tmp_path):
    io.write_csv(tmp_path / "a.csv", ("x", "y"), [(1.0, 2)])
    assert io.read_csv(tmp_path / "a.csv") == (["x", "y"], [["1.0000000000000000e+00", "2"]])
    (tmp_path / "b.csv").write_text("x,y\n1,2\n")
    with pytest.raises(io.SchemaError):
        io.read_csv(tmp_path / "b.csv")


def test_atomic_write_leaves_no_temporaries(tmp_path):
    io.atomic_write_text(tmp_path / "sub" / "f.txt", "hello")
    assert [p.name for p in (tmp_path / "sub").iterdir()] == ["f.txt"]


def test_potential_kinds():
    z = np.array([0.0, 1.0])
    assert np.allclose(Potential("affine", {"a": 1.0, "b": 2.0})(z), [1.0, 3.0])
    assert np.allclose(Potential("arctan")(z), np.arctan(z))
    assert Potential("cosine")(0.0) == 1.0
    table = Potential("table", {"z": [0.0, 1.0, 2.0], "v": [0.0, 1.0, 3.0]})
    assert table(1.0) == pytest.approx(1.0) and table.strictly_monotone
    assert not Potential("zero").strictly_monotone
    assert default_potential("sphere_s1", "affine").to_dict() == {"kind": "affine", "params": {"a": 1.0, "b": 0.5}}
    with pytest.raises(ValueError):
        Potential("gaussian")
    with pytest.raises(ValueError):
        Potential("table", {"z": [0.0, 0.0], "v": [1.0, 2.0]})


def test_config_defaults_and_overrides(tmp_path):
    cfg = load_config(None).validate()
    assert cfg.model == "sphere_s1" and len(cfg.mu_values()) == 200
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"model": "cp2_su2", "potential": {"kind": "arctan"},
                                "mu_grid": {"lo": 0.1, "hi": 0.4, "n": 20}, "tolerances": {"margin": 1e-3}}))
    cfg = load_config(path, seeds=4).validate()
    assert cfg.model == "cp2_su2" and cfg.seeds == 4
    assert cfg.forward_config().margin == 1e-3 and cfg.forward_config().seed == 4
    assert cfg.mu_values()[0] == 0.1


@pytest.mark.parametrize("bad", [
    {"model": "torus"},
    {"potential": {"kind": "wavy"}},
    {"mu_grid": {"lo": 0.0, "hi": 1.0, "n": 10}},
    {"mu_grid": {"lo": 1.0, "hi": 2.0, "n": 3}},
    {"tolerances": {"speed": 2}},
    {"seeds": -1},
])
def test_config_rejections(bad):
    with pytest.raises(ConfigError):
        ExperimentConfig(**bad).validate()


def test_non_monotone_table_rejected_for_inversion():
    cfg = ExperimentConfig(potential={"kind": "table", "params": {"z": [0, 1, 2], "v": [0, 1, 0]}})
    cfg.validate()
    with pytest.raises(ConfigError):
        cfg.validate(inversion=True)
