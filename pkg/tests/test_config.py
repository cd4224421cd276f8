import dataclasses

import pytest

from strcf import config
from strcf.errors import ConfigError
from strcf.solver import AdmmParams
from strcf.tracker import TrackerConfig


def test_defaults_round_trip():
    text = config.dumps(TrackerConfig())
    assert config.loads(text) == TrackerConfig()
    assert config.dumps(config.loads(text)) == text


def test_non_default_round_trip():
    cfg = dataclasses.replace(TrackerConfig(), admm=AdmmParams(mu=1 / 3, iters=7), scale_step=1.0300000000000002)
    text = config.dumps(cfg)
    assert config.loads(text) == cfg
    assert config.dumps(config.loads(text)) == text


def test_every_key_is_written():
    keys = [line.split(" = ")[0] for line in config.dumps(TrackerConfig()).splitlines()]
    assert keys == list(config.KEYS)


def test_comments_and_partial_files():
    cfg = config.loads("# ablation\n\nmu = 4\ninclude_gray = false\n")
    assert cfg.admm.mu == 4.0
    assert cfg.features.include_gray is False
    assert cfg.template_px == 200


@pytest.mark.parametrize(
    "text",
    [
        "bogus = 1\n",
        "mu = 1\nmu = 2\n",
        "mu\n",
        "mu = fast\n",
        "include_gray = maybe\n",
        "num_scales = 4\n",
        "rho = 0.5\n",
        "window = triangle\n",
    ],
)
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        config.loads(text)


def test_load_from_file(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("admm_iters = 3\n")
    assert config.load(path).admm.iters == 3
