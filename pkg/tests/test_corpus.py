import json

import pytest

from hyperifs.corpus import (
    CORPUS,
    ConfigError,
    UnknownSystemError,
    build_system,
    config_for,
    config_hash,
    corpus_config,
    load_system,
    read_config,
)


@pytest.mark.parametrize("name", CORPUS)
def test_every_corpus_entry_loads(name):
    sys = load_system(name)
    assert sys.name == name
    assert len(sys.generators) >= 1
    assert build_system(sys.to_config()) == sys


def test_resolution_override():
    assert load_system("psi_interval", 256).space.resolution == 256


def test_hash_is_stable_and_key_order_free():
    cfg = corpus_config("psi_interval")
    shuffled = json.loads(json.dumps(cfg, sort_keys=True))
    assert config_hash(cfg) == config_hash(shuffled)
    assert config_hash(cfg) != config_hash(corpus_config("phi_interval"))


def test_toml_and_json_files(tmp_path):
    toml = tmp_path / "sys.toml"
    toml.write_text(
        'name = "halves"\n[space]\nkind = "interval"\nresolution = 64\n'
        '[[generators]]\nkind = "piecewise_linear"\nbreakpoints = [0.0, 1.0]\nvalues = [0.0, 0.5]\n'
        '[[generators]]\nkind = "piecewise_linear"\nbreakpoints = [0.0, 1.0]\nvalues = [0.5, 1.0]\n'
    )
    sys = load_system(str(toml))
    assert sys.space.resolution == 64 and len(sys.generators) == 2
    js = tmp_path / "sys.json"
    js.write_text(json.dumps(sys.to_config()))
    assert load_system(str(js)) == sys


def test_config_errors(tmp_path):
    with pytest.raises(UnknownSystemError):
        config_for("no_such_system")
    with pytest.raises(ConfigError):
        read_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(ConfigError):
        read_config(bad)
    with pytest.raises(ConfigError):
        build_system({"space": {"kind": "interval", "resolution": 8}, "generators": [{"kind": "rotation"}]})
    with pytest.raises(ConfigError):
        build_system({"space": {"kind": "torus", "resolution": 8}, "generators": []})
