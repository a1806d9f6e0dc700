import pytest

from trackr.utils import misc


class Fusion(misc.LabeledOptions):
    hard = 'hard'
    soft = 'Soft'


def test_labeled_options():
    """Labels resolve case-insensitively to enum members."""
    assert Fusion.hard.value == 1 and Fusion.soft.value == 2
    assert Fusion.fromLabel('soft') is Fusion.soft
    assert Fusion.fromLabel('medium') is None
    assert Fusion.parse('HARD') is Fusion.hard
    assert Fusion.parse(Fusion.soft) is Fusion.soft
    with pytest.raises(misc.ConfigError):
        Fusion.parse('medium')
    with pytest.raises(misc.ConfigError):
        Fusion.parse(2)


def test_unwrap_optional():
    """None raises, anything else passes through."""
    assert misc.unwrap_optional(0) == 0
    with pytest.raises(ValueError):
        misc.unwrap_optional(None)
