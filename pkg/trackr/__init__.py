from typing import List, Tuple, Dict, Any, Optional
from importlib.abc import Loader
from importlib.util import spec_from_file_location, module_from_spec
import logging
import os
import sys

__version__ = '0.3.0'

logger = logging.getLogger(__name__)
logger.debug(f"Imported trackr version: {__version__}")


trackrPath = os.path.split(os.path.abspath(__file__))[0]


def configPaths() -> Tuple[str, str, str]:
    """Get the folders where trackr looks for config files.

    :return: List of absolute paths, in order of priority:
        (1) current working directory
        (2) ~/.trackr
        (3) config directory in the package.
    """
    builtIn = os.path.join(trackrPath, 'config')
    user = os.path.join(os.path.expanduser("~"), '.trackr')
    cwd = os.getcwd()
    return cwd, user, builtIn


def configFiles(fileName: str) -> List[str]:
    """Get available config files with the given file name.

    :param fileName: file name, without path
    :return: List of found config files with the provided name, in order
        or priority.
    """
    ret = []
    for path in configPaths():
        fp = os.path.join(path, fileName)
        if os.path.exists(fp):
            ret.append(fp)
    return ret


def _merge(base: Dict[str, Any], update: Dict[str, Any]) -> Dict[str, Any]:
    for k, v in update.items():
        if isinstance(v, dict) and isinstance(base.get(k), dict):
            base[k] = _merge(dict(base[k]), v)
        else:
            base[k] = v
    return base


def config(names: Optional[List[str]] = None) -> Dict[str, Any]:
    """Return the trackr configuration as a dictionary.

    Each config file found is expected to contain a dictionary with name
    ``config``. The returned configuration is of the form
    ``
    {
        cfg_1: {...},
        cfg_2: {...},
    }
    ``

    Values are determined in hierarchical order: the package-provided config
    is loaded first and then updated (section by section) with user-provided
    ones (see doc of :func:`.configPaths`).

    :param names: List of files. For given ``name`` will look
        for ``trackrcfg_<name>.py`` in the config directories.
        if ``None``, will look only for ``trackrcfg_main.py``
    """
    if names is None:
        names = ['main']

    cfg: Dict[str, Any] = {}
    for name in names:
        modn = f"trackrcfg_{name}"
        filen = f"{modn}.py"
        this_cfg: Dict[str, Any] = {}
        for filep in configFiles(filen)[::-1]:
            spec = spec_from_file_location(modn, filep)
            if spec is None:
                raise FileNotFoundError(f"Could not locate spec for {modn}, {filep}")
            mod = module_from_spec(spec)
            sys.modules[modn] = mod
            assert isinstance(spec.loader, Loader)
            spec.loader.exec_module(mod)
            this_cfg = _merge(this_cfg, getattr(mod, 'config', {}))

        cfg[name] = this_cfg
    return cfg


def config_entry(*path: str, default: Optional[Any] = None,
                 names: Optional[List[str]] = None) -> Any:
    """Get a specific config value.

    ..Example: If the config is:: python

        config = {
            'kcf' : {
                'lambda' : 1e-4,
            },
        }

    .. then we can get an entry like this:: python

        >>> config_entry('kcf', 'lambda', default=None)
        0.0001
        >>> config_entry('kcf', 'bacon')
        None

    :param path: strings denoting the nested keys to the desired value
    :param names: see :func:`.config`.
    :param default: what to return when key isn't found in the config.
    :returns: desired value
    """
    if names is None:
        names = ['main']

    cfg: Any = config(names)
    if len(names) == 1:
        cfg = cfg[names[0]]
    for k in path:
        if isinstance(cfg, dict) and k in cfg:
            cfg = cfg.get(k)
        else:
            return default
    return cfg
