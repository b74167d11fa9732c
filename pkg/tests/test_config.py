import math

import pytest

from ccae.config import ConfigError, ExperimentConfig, config_hash, dump_config, parse_config


def test_defaults_describe_the_reference_scenario():
    c = ExperimentConfig()
    assert c.scenario.num_users == 2048
    assert (c.scenario.area_x_max - c.scenario.area_x_min, c.scenario.area_y_max - c.scenario.area_y_min) == (1000, 500)
    assert (c.scenario.bs_x, c.scenario.bs_y, c.scenario.bs_z) == (0, 0, 10)
    assert c.array.num_antennas == 32 and c.array.element_spacing == 0.5 and c.array.carrier_frequency == 2e9
    assert c.channel.snr_db == 0.0
    assert c.scenario.anchor_fraction == 0.10
    assert c.network.hidden == (500, 100, 50, 20) and c.network.code_dim == 2


def test_parse_dotted_keys():
    c = parse_config(
        """
        # comment line
        scenario.num_users = 300   # trailing comment
        scenario.trajectory.step_length = 7.5
        channel.mode = nlos
        channel.snr_db = inf
        channel.scatterer_x_min = -100
        network.hidden = 64, 32
        constraints.recipes = plain, fad_mrd
        metrics.ks = 1 5
        """
    )
    assert c.scenario.num_users == 300
    assert c.scenario.trajectory.step_length == 7.5
    assert c.channel.mode == "nlos" and math.isinf(c.channel.snr_db)
    assert c.channel.scatterer_x_min == -100.0
    assert c.network.hidden == (64, 32)
    assert c.constraints.recipes == ("plain", "fad_mrd")
    assert c.metrics.ks == (1, 5)


def test_dump_parses_back():
    c = parse_config("scenario.num_users = 99\ntrain.lambda_fad = 0.1\nchannel.snr_db = inf\n")
    again = parse_config(dump_config(c))
    assert again == c
    assert config_hash(again) == config_hash(c)


def test_hash_changes_with_settings():
    assert config_hash(ExperimentConfig()) != config_hash(parse_config("train.seed = 1"))


@pytest.mark.parametrize("text", [
    "scenario.nope = 1",
    "scenario = 3",
    "scenario.num_users",
    "scenario.num_users = many",
    "constraints.recipes = plain, magic",
    "channel.mode = wideband",
    "metrics.reference = elsewhere",
])
def test_bad_config(text):
    with pytest.raises((ConfigError, ValueError)):
        parse_config(text)


def test_derived_chart_units():
    c = ExperimentConfig()
    assert c.chart_origin == (0.0, 250.0)
    assert c.chart_scale == 500.0
    assert c.d_max == c.scenario.trajectory.step_length
