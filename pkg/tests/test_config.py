import json

import pytest

from qkdrate_py import config
from qkdrate_py.errors import ConfigError


def test_default_config_round_trip(tmp_path):
    cfg = config.load_config()
    assert cfg.solver.grid_points_1d == 2001
    assert cfg.output.significant_digits == 12

    cfg.solver.threshold_tol = 1e-5
    target = tmp_path / "qkdrate.json"
    target.write_text(json.dumps(config.config_to_dict(cfg)), encoding="utf-8")

    loaded = config.load_config(target)
    assert loaded.solver.threshold_tol == 1e-5
    assert loaded == cfg


def test_partial_sections_fall_back_to_defaults(tmp_path):
    target = tmp_path / "partial.json"
    target.write_text(json.dumps({"solver": {"optpi_seed": 9}}), encoding="utf-8")
    loaded = config.load_config(target)
    assert loaded.solver.optpi_seed == 9
    assert loaded.solver.grid_points_3d == 41
    assert loaded.output == config.OutputSettings()


@pytest.mark.parametrize(
    "payload",
    [
        {"solver": {"grid_points": 10}},
        {"plotting": {}},
        {"solver": {"grid_points_1d": 2}},
        {"output": [1, 2]},
        [1, 2, 3],
    ],
)
def test_bad_config_is_rejected(tmp_path, payload):
    target = tmp_path / "bad.json"
    target.write_text(json.dumps(payload), encoding="utf-8")
    with pytest.raises(ConfigError):
        config.load_config(target)


def test_unreadable_config(tmp_path):
    with pytest.raises(ConfigError):
        config.load_config(tmp_path / "missing.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        config.load_config(broken)
