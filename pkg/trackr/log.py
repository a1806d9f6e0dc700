"""
log.py

Logging setup for trackr.

If a logger is accessed via ``getLogger('trackr.*')`` (or simply via
``getLogger(__name__)`` from within the package) it lives in the trackr
hierarchy and shares its level and handlers.

The default level can be set through the environment variable
``TRACKR_LOGLEVEL`` (a level name like ``DEBUG`` or a number).
"""

import os
import sys
import logging

__license__ = 'MIT'

LOGLEVEL_ENV = 'TRACKR_LOGLEVEL'

FORMAT = "%(asctime)s - %(name)s - %(levelname)s\n" + "    %(message)s"
DATEFMT = '%Y-%m-%d %H:%M:%S'


def levelFromEnv(default: int = logging.INFO) -> int:
    """Read the log level from ``TRACKR_LOGLEVEL``; fall back to ``default``."""
    val = os.environ.get(LOGLEVEL_ENV, '').strip()
    if val == '':
        return default
    if val.isdigit():
        return int(val)
    lvl = logging.getLevelName(val.upper())
    if isinstance(lvl, int):
        return lvl
    return default


LEVEL = levelFromEnv()


def getLogger(module: str = '') -> logging.Logger:
    """
    Return the logger we use within the trackr framework.
    """
    mod = 'trackr'
    if module != '':
        if module.split('.')[0] == 'trackr':
            mod = module
        else:
            mod += f'.{module}'

    logger = logging.getLogger(mod)
    if mod == 'trackr':
        logger.setLevel(LEVEL)
    return logger


def setLevel(level: int) -> None:
    getLogger().setLevel(level)


def enableStreamHandler(enable: bool = False) -> None:
    """
    enable/disable output to stderr. Used by the command line tools.
    """
    logger = getLogger()
    hasStreamHandler = False
    for h in list(logger.handlers):
        if isinstance(h, logging.StreamHandler):
            hasStreamHandler = True
            if not enable:
                logger.removeHandler(h)

    if enable and not hasStreamHandler:
        streamHandler = logging.StreamHandler(sys.stderr)
        fmt = logging.Formatter(FORMAT, datefmt=DATEFMT)
        streamHandler.setFormatter(fmt)
        logger.addHandler(streamHandler)
