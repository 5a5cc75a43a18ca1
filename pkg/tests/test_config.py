import pytest

from hiflow.config import ConfigError, dump_config, load_config, default_cascade_config, parse_config

SMALL = """
channels = 3
height = 8
width = 8
steps = 10
seed = 4
field.kind = coarse2fine
field.texture_amp = 0.1

[stage.1]
scale = 2
guidance.tau = 0.6

[stage.2]
scale = 2
seed = 99
guidance.tau = 0.3
guidance.g_a = false
field.blur0 = 0.1
"""


def test_parse_basic():
    cfg = parse_config(SMALL)
    assert cfg.steps == 10 and cfg.seed == 4
    assert [s.guidance.tau for s in cfg.stages] == [0.6, 0.3]
    assert cfg.stages[1].guidance.g_a is False
    assert cfg.stage_dims(2) == (3, 32, 32)
    assert cfg.stage_seed(1) == 4 and cfg.stage_seed(2) == 99
    assert cfg.stage_field(2)["blur0"] == 0.1 and "blur0" not in cfg.stage_field(1)


def test_overrides():
    cfg = parse_config(SMALL, ["stage.1.guidance.tau=1.0", "seed=7", "field.kind=anchored"])
    assert cfg.stages[0].guidance.tau == 1.0 and cfg.seed == 7
    assert cfg.field["kind"] == "anchored"


@pytest.mark.parametrize("override", ["stage.1.guidance.taus=1", "bogus=1", "stage.x.scale=2", "field.colour=1"])
def test_unknown_keys_are_named(override):
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config(SMALL, [override])


@pytest.mark.parametrize("text", [
    "steps = many",
    "[stage.2]\nscale = 2",
    "[render]\nx = 1",
    "mode = turbo",
    "height = 0",
    "[stage.1]\nscale = 1",
    "[stage.1]\nguidance.tau = 0",
    "field.kind = unet",
    "times = 1.0, 0.5, 0.6, 0.0",
    "just words",
])
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_dump_round_trip():
    cfg = parse_config(SMALL, ["shift=3.0", "schedule=shift"])
    again = parse_config(dump_config(cfg))
    assert again == cfg


def test_explicit_times():
    cfg = parse_config("times = 1.0, 0.6, 0.3, 0.0")
    assert cfg.time_schedule().times == (1.0, 0.6, 0.3, 0.0)
    assert parse_config(dump_config(cfg)) == cfg


def test_default_cascade():
    cfg = default_cascade_config(3)
    assert [s.guidance.tau for s in cfg.stages] == [0.6, 0.3, 0.3]
    assert all(s.guidance.cutoff == 0.4 for s in cfg.stages)
    assert cfg.steps == 30
    assert cfg.stage_dims(3) == (3, 512, 512)


def test_shipped_configs_load():
    from pathlib import Path

    for p in sorted(Path(__file__).parent.parent.joinpath("configs").glob("*.cfg")):
        load_config(p)
