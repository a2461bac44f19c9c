import pytest

from tbverdet.config import DEFAULTS, RunConfig, dumps17, env_name
from tbverdet.errors import PoleEnclosureError, ValidationError


def test_defaults_resolve():
    cfg = RunConfig.resolve(environ={})
    assert cfg["params.beta"] == 10.0
    assert cfg.grid() == (64, 64)
    assert set(cfg.as_dict()) == set(DEFAULTS)


def test_precedence(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("params:\n  beta: 5\n  mu: 0.25\ngrid:\n  n1: 8\n")
    env = {env_name("params.mu"): "0.5", env_name("finite.eta_list"): "0.2,0.1"}
    cfg = RunConfig.resolve({"grid.n1": 16}, config_file=path, environ=env)
    assert cfg["params.beta"] == 5.0
    assert cfg["params.mu"] == 0.5
    assert cfg["grid.n1"] == 16
    assert cfg["finite.eta_list"] == [0.2, 0.1]


def test_env_name():
    assert env_name("contour.nodes_per_edge") == "TBVERDET_CONTOUR_NODES_PER_EDGE"


def test_validation_errors(tmp_path):
    with pytest.raises(ValidationError):
        RunConfig.resolve({"bogus.key": 1}, environ={})
    with pytest.raises(ValidationError):
        RunConfig.resolve(environ={env_name("params.beta"): "hot"})
    with pytest.raises(PoleEnclosureError):
        RunConfig.resolve({"params.beta": 1.0, "params.eta": 4.0}, environ={})
    with pytest.raises(ValidationError):
        RunConfig.resolve({"contour.nodes_per_edge": 2}, environ={})
    bad = tmp_path / "bad.yaml"
    bad.write_text("- 1\n- 2\n")
    with pytest.raises(ValidationError):
        RunConfig.resolve(config_file=bad, environ={})


def test_dumps17_round_trips():
    import json

    x = 0.1 + 0.2
    text = dumps17({"x": x, "n": 3, "s": "a\"b", "l": [1.5, None, True], "z": 2.0})
    back = json.loads(text)
    assert back["x"] == x and back["n"] == 3 and back["s"] == 'a"b' and back["z"] == 2.0
    assert "0.30000000000000004" in text
