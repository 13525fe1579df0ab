import pytest

from aurec.config import Config, parse_config
from aurec.errors import DataError


def test_defaults():
    cfg = Config()
    assert cfg.n_states(12) == 3
    assert (cfg.gabor_scales, cfg.gabor_orientations) == (4, 4)


def test_parse_overrides():
    cfg = parse_config("# comment\nregion = upper\naus = 1, 2 4\nepochs=10  # trailing\n"
                       "learning_rate = 0.1\nstates.25 = 5\n")
    assert cfg.region == "upper" and cfg.aus == (1, 2, 4)
    assert cfg.epochs == 10 and cfg.learning_rate == 0.1
    assert cfg.n_states(25) == 5 and cfg.n_states(1) == 3


def test_parse_does_not_mutate_base():
    base = Config(states={9: 5})
    cfg = parse_config("states.12 = 5", base)
    assert base.states == {9: 5} and cfg.states == {9: 5, 12: 5}


@pytest.mark.parametrize("text,match", [
    ("region upper", "expected key = value"),
    ("no_such = 1", "unknown key"),
    ("states = 3", "unknown key"),
    ("epochs = many", "line 1"),
])
def test_parse_errors(text, match):
    with pytest.raises(DataError, match=match):
        parse_config(text)


def test_dict_round_trip():
    cfg = Config(aus=(9, 17), states={17: 5}, seed=7, threshold=0.4)
    assert Config.from_dict(cfg.to_dict()) == cfg


def test_from_dict_unknown_key():
    with pytest.raises(DataError, match="unknown config keys"):
        Config.from_dict({**Config().to_dict(), "bogus": 1})
