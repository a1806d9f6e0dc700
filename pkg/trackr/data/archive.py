"""trackr.data.archive

HDF5 archive of a tracking run.

Each target is a top-level group of the file. Per frame, one row is appended
to each of the group's datasets:

- ``frame``: frame index (int)
- ``center``: fused center ``(x, y)`` in canonical pixels
- ``best_psr``: highest PSR over the ROI grid
- ``coasting``: whether the frame was coasted
- ``roi_psr``: PSR of every ROI of the grid, in grid order

All datasets are resizable along the first axis. Files, groups and datasets
carry creation time attributes; groups are stamped again on close.
"""
import os
import time
from types import TracebackType
from typing import Any, Dict, Optional, Sequence, Tuple, Type

import h5py
import numpy as np

from ..log import getLogger

__license__ = 'MIT'

logger = getLogger(__name__)

TIMESTRFORMAT = "%Y-%m-%d %H:%M:%S"
FIELDS = ('frame', 'center', 'best_psr', 'coasting', 'roi_psr')


def h5ify(obj: Any) -> Any:
    """Convert an object into something we can assign to an HDF5 attribute:
    lists become arrays, unicode string arrays are utf8-encoded."""
    if isinstance(obj, (list, tuple)):
        if all(isinstance(elt, str) for elt in obj):
            obj = np.array(obj, dtype=str)
        else:
            obj = np.array(obj)
    if isinstance(obj, np.ndarray) and obj.dtype.kind == 'U':
        return np.char.encode(obj, encoding='utf8')
    return obj


def deh5ify(obj: Any) -> Any:
    """Convert slightly mangled types back to more handy ones."""
    if isinstance(obj, bytes):
        return obj.decode()
    if isinstance(obj, np.ndarray) and obj.dtype.kind == 'S':
        return np.char.decode(obj)
    return obj


def set_attr(h5obj: Any, name: str, val: Any) -> None:
    """Set attribute `name` of `h5obj` to `val`, falling back to the string
    representation if HDF5 cannot store the value type."""
    try:
        h5obj.attrs[name] = h5ify(val)
    except TypeError:
        h5obj.attrs[name] = h5ify(str(val))


def add_cur_time_attr(h5obj: Any, name: str = 'creation',
                      prefix: str = '__', suffix: str = '__') -> None:
    """Add current time information to the given HDF5 object."""
    t = time.localtime()
    set_attr(h5obj, prefix + name + '_time_sec' + suffix, time.mktime(t))
    set_attr(h5obj, prefix + name + '_time_str' + suffix, time.strftime(TIMESTRFORMAT, t))


class TrackArchive:
    """Context manager for writing per-frame tracker output to HDF5.

    Example usage::

        >>> with TrackArchive('./out/archive.h5', meta={'grid_n': 4}) as archive:
        ...     for state, psrs in results:
        ...         archive.add_frame('car', state.frame, state.center,
        ...                           state.best_psr, state.coasting, psrs)

    An existing file at ``path`` is replaced.

    :param path: file path.
    :param meta: attributes written to the file root.
    """

    def __init__(self, path: str, meta: Optional[Dict[str, Any]] = None):
        self.path = path
        self.meta = meta or {}
        self.file: Optional[h5py.File] = None
        self.rows: Dict[str, int] = {}

    def __enter__(self) -> "TrackArchive":
        folder = os.path.dirname(self.path)
        if folder != '':
            os.makedirs(folder, exist_ok=True)
        self.file = h5py.File(self.path, mode='w')
        add_cur_time_attr(self.file)
        for k, v in self.meta.items():
            set_attr(self.file, k, v)
        logger.debug(f"Writing track archive to {self.path}")
        return self

    def __exit__(self,
                 exc_type: Optional[Type[BaseException]],
                 exc_value: Optional[BaseException],
                 exc_traceback: Optional[TracebackType]) -> None:
        assert self.file is not None
        for name in self.rows:
            add_cur_time_attr(self.file[name], name='close')
        self.file.close()
        self.file = None

    def _init_group(self, target: str, nrois: int) -> h5py.Group:
        assert self.file is not None
        grp = self.file.create_group(target)
        add_cur_time_attr(grp)
        grp.create_dataset('frame', shape=(0,), maxshape=(None,), dtype='i8')
        grp.create_dataset('center', shape=(0, 2), maxshape=(None, 2), dtype='f8')
        grp.create_dataset('best_psr', shape=(0,), maxshape=(None,), dtype='f8')
        grp.create_dataset('coasting', shape=(0,), maxshape=(None,), dtype='bool')
        grp.create_dataset('roi_psr', shape=(0, nrois), maxshape=(None, nrois), dtype='f8')
        self.rows[target] = 0
        return grp

    def add_frame(self, target: str, frame: int, center: Tuple[float, float],
                  best_psr: float, coasting: bool, roi_psr: Sequence[float]) -> None:
        """Append one frame of tracker output for ``target``."""
        assert self.file is not None, "archive is not open"
        psrs = np.asarray(roi_psr, dtype=float).reshape(-1)
        if target not in self.rows:
            grp = self._init_group(target, psrs.size)
        else:
            grp = self.file[target]
        n = self.rows[target]
        values = dict(frame=frame, center=np.asarray(center, dtype=float),
                      best_psr=best_psr, coasting=coasting, roi_psr=psrs)
        for k in FIELDS:
            ds = grp[k]
            ds.resize(n + 1, axis=0)
            ds[n] = values[k]
        self.rows[target] = n + 1
        self.file.flush()


def read_track_archive(path: str) -> Dict[str, Dict[str, np.ndarray]]:
    """Load every target group of a track archive into memory."""
    ret: Dict[str, Dict[str, np.ndarray]] = {}
    with h5py.File(path, 'r') as f:
        for target, grp in f.items():
            ret[target] = {k: grp[k][()] for k in FIELDS if k in grp}
    return ret


def read_archive_meta(path: str) -> Dict[str, Any]:
    with h5py.File(path, 'r') as f:
        return {k: deh5ify(v) for k, v in f.attrs.items()}
