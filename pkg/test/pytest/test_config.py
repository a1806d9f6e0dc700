import logging

import pytest

import trackr
from trackr import log as trackrlog


@pytest.fixture
def isolated(tmp_path, monkeypatch):
    """Run with empty home and working directories."""
    home = tmp_path / 'home'
    work = tmp_path / 'work'
    home.mkdir()
    work.mkdir()
    monkeypatch.setenv('HOME', str(home))
    monkeypatch.chdir(work)
    return home, work


def test_builtin_config(isolated):
    """Package defaults are found without any user files."""
    assert trackr.config_entry('kcf', 'lambda') == 1e-4
    assert trackr.config_entry('grid', 'grid_n') == 4
    assert trackr.config_entry('kcf', 'bacon') is None
    assert trackr.config_entry('kcf', 'bacon', default=3) == 3


def test_user_config_overrides(isolated):
    """Files in ~/.trackr and the working directory update the defaults
    section by section, the working directory winning."""
    home, work = isolated
    (home / '.trackr').mkdir()
    (home / '.trackr' / 'trackrcfg_main.py').write_text(
        "config = {'kcf': {'lambda': 0.5, 'kernel': 'linear'}}\n")
    (work / 'trackrcfg_main.py').write_text("config = {'kcf': {'lambda': 0.25}}\n")

    assert len(trackr.configFiles('trackrcfg_main.py')) == 3
    assert trackr.config_entry('kcf', 'lambda') == 0.25
    assert trackr.config_entry('kcf', 'kernel') == 'linear'
    assert trackr.config_entry('kcf', 'kernel_sigma') == 0.5


def test_log_level_from_env(monkeypatch):
    """TRACKR_LOGLEVEL accepts names and numbers."""
    monkeypatch.setenv('TRACKR_LOGLEVEL', 'debug')
    assert trackrlog.levelFromEnv() == logging.DEBUG
    monkeypatch.setenv('TRACKR_LOGLEVEL', '30')
    assert trackrlog.levelFromEnv() == 30
    monkeypatch.setenv('TRACKR_LOGLEVEL', 'chatty')
    assert trackrlog.levelFromEnv(logging.ERROR) == logging.ERROR


def test_logger_hierarchy():
    """Module loggers live below the package logger."""
    assert trackrlog.getLogger('trackr.kcf').name == 'trackr.kcf'
    assert trackrlog.getLogger('eval').name == 'trackr.eval'
    trackrlog.enableStreamHandler(True)
    trackrlog.enableStreamHandler(True)
    handlers = [h for h in trackrlog.getLogger().handlers
                if isinstance(h, logging.StreamHandler)]
    assert len(handlers) == 1
    trackrlog.enableStreamHandler(False)
    assert not any(isinstance(h, logging.StreamHandler)
                   for h in trackrlog.getLogger().handlers)
