import pytest

from rimlab.config import (
    ConfigError,
    config_hash,
    emit_config,
    parse_config,
)

GOOD = """\
# two logistic maps
version = 1
experiment = orbit-trace

[system]
seed = 2024
c = 0.5

[map.g]
family = T4
p = 0.6

[map.b]
family = T2
p = 0.4

[orbit-trace]
x0 = 0.25
steps = 500
"""


def test_parse_good_config():
    cfg = parse_config(GOOD)
    assert cfg.kind == "orbit-trace"
    assert cfg.system.seed == 2024
    assert cfg.system.labels() == ("g", "b")
    assert cfg.params["steps"] == 500
    assert cfg.params["epsilon"] == pytest.approx(2.0 ** -7)  # default filled in


def test_round_trip_is_fixed_point():
    cfg = parse_config(GOOD)
    text = emit_config(cfg)
    again = parse_config(text)
    assert again == cfg
    assert emit_config(again) == text
    assert config_hash(again) == config_hash(cfg)


def test_system_builds():
    sys_ = parse_config(GOOD).system.build()
    assert sys_.sigma_g == (0,) and sys_.sigma_b == (1,)


@pytest.mark.parametrize("mutation,fragment", [
    ("version = 2", "version"),
    ("experiment = nope", "unknown experiment"),
    ("steps = 500\nsteps = 600", "duplicate key"),
    ("x0 = abc", "bad value"),
])
def test_parse_errors(mutation, fragment):
    text = GOOD.replace("steps = 500", mutation) if "steps" in mutation else \
        GOOD.replace("version = 1", mutation) if "version" in mutation else \
        GOOD.replace("experiment = orbit-trace", mutation) if "experiment" in mutation else \
        GOOD.replace("x0 = 0.25", mutation)
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert fragment.split()[0] in str(err.value)


def test_unknown_key_rejected_with_line():
    text = GOOD + "\nwat = 1\n"
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config(text)


def test_unknown_section_rejected():
    with pytest.raises(ConfigError, match="unknown section"):
        parse_config(GOOD + "\n[mystery]\nx = 1\n")


def test_mismatched_experiment_section():
    with pytest.raises(ConfigError, match="does not match"):
        parse_config(GOOD + "\n[kac]\ncap = 10\n")


def test_probabilities_must_sum_to_one():
    with pytest.raises(ConfigError, match="sum to"):
        parse_config(GOOD.replace("p = 0.4", "p = 0.5"))


def test_family_parameter_validation():
    bad = GOOD.replace("family = T4", "family = good-power")
    with pytest.raises(ConfigError, match="needs"):
        parse_config(bad)
    bad = GOOD.replace("family = T4\np = 0.6", "family = T4\nr = 2.0\np = 0.6")
    with pytest.raises(ConfigError, match="does not take"):
        parse_config(bad)


def test_label_reference_validation():
    text = GOOD.replace("experiment = orbit-trace", "experiment = continuity") \
               .replace("[orbit-trace]\nx0 = 0.25\nsteps = 500", "[continuity]\nvary = nope")
    with pytest.raises(ConfigError, match="not a map label"):
        parse_config(text)


def test_duplicate_section_rejected():
    with pytest.raises(ConfigError, match="duplicate section"):
        parse_config(GOOD + "\n[system]\nseed = 1\n")
