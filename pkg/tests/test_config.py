from pathlib import Path

import pytest

from tada.config import MetaConfig, Settings, load_config, parse_config, parse_pairs, render_config
from tada.errors import ConfigError, TadaIOError
from tada.pipeline import DataSource
from tada.sigcore import SnrLevel


def test_parse_pairs_skips_comments_and_blank_lines():
    text = "# header\n\nrun.seed = 4\n  data.per_level=7  \n"
    assert parse_pairs(text) == {"run.seed": "4", "data.per_level": "7"}
    for bad in ("seed = 4", "run.seed 4", " = 3", "run.seed = 1\nrun.seed = 2"):
        with pytest.raises(ConfigError):
            parse_pairs(bad)


def test_defaults():
    s = parse_config("")
    assert s.pipeline.seed == 0 and s.pipeline.source is DataSource.SYNTHETIC
    assert {lv: s.pipeline.params_for(lv).tau for lv in SnrLevel} == {
        SnrLevel.LOW: 0.8, SnrLevel.MID: 0.7, SnrLevel.HIGH: 0.8}
    assert s.meta == MetaConfig()


def test_overrides_and_relative_paths(tmp_path):
    text = """
run.seed = 9
models.bundle = b
data.source = files
data.corpus = corp
targeting.window = 16
targeting.high.tau = 0.55
train.cycles = 2
train.objective = mse
loss.w_ent = 0.0
meta.epochs = 3
"""
    s = parse_config(text, tmp_path)
    assert s.pipeline.models == tmp_path / "b" and s.pipeline.corpus == tmp_path / "corp"
    assert s.pipeline.seed == 9 and s.train.seed == 9
    assert all(s.pipeline.params_for(lv).window == 16 for lv in SnrLevel)
    assert s.pipeline.params_for(SnrLevel.HIGH).tau == 0.55
    assert s.pipeline.params_for(SnrLevel.LOW).tau == 0.8
    assert s.train.cycles == 2 and s.train.objective == "mse" and s.train.loss.w_ent == 0.0
    assert s.meta.epochs == 3


@pytest.mark.parametrize("text", [
    "run.colour = red",
    "targeting.extreme.tau = 0.5",
    "train.cycles = many",
    "data.source = cloud",
    "targeting.tau = 1.5",
    "targeting.fir_taps = 4",
    "train.cycles = 0",
])
def test_invalid_config_raises(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_render_round_trip(tmp_path):
    s = parse_config("run.seed = 3\ntargeting.mid.window = 24\ntrain.w_adv = 0.1\n"
                     f"models.bundle = {tmp_path / 'm'}\n")
    again = parse_config(render_config(s), "/")
    assert render_config(again) == render_config(s)
    assert again.pipeline.params == s.pipeline.params
    assert again.train == s.train and again.meta == s.meta


def test_with_seed_and_load_errors(tmp_path):
    s = Settings().with_seed(5)
    assert s.pipeline.seed == 5 and s.train.seed == 5
    with pytest.raises(TadaIOError):
        load_config(tmp_path / "missing.conf")
    path = tmp_path / "a.conf"
    path.write_text("data.corpus = c\n")
    assert load_config(path).pipeline.corpus == Path(tmp_path) / "c"
