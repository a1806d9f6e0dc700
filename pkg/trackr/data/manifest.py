"""trackr.data.manifest

Sequence manifests (JSON) and ground-truth tables (CSV).

Manifest layout::

    {
        "schema_version": 1,
        "fps": 1.42,
        "channels": 61,
        "wavelengths": [400.0, ...],          # optional, nm
        "frames": [{"path": "frames/frame_000000.hsif",
                    "index": 0, "timestamp": 0.0}, ...],
        "homographies": [[h00, h01, ..., h22], ...],   # optional
        "ground_truth": "gt_car.csv"          # or {"car": "gt_car.csv"}
    }

Frame and ground-truth paths are relative to the manifest's folder.
Homographies map frame pixels to canonical-frame pixels.

Ground-truth CSV columns are ``frame,cx,cy,w,h`` (target center and size in
canonical pixels), optionally followed by ``occluded`` (0/1).
"""
import json
import os
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..log import getLogger

__license__ = 'MIT'

logger = getLogger(__name__)

SCHEMA_VERSION = 1
GT_COLUMNS = ['frame', 'cx', 'cy', 'w', 'h']


class ManifestError(ValueError):
    """Invalid manifest or ground-truth content."""
    pass


@dataclass(frozen=True)
class FrameEntry:
    path: str
    index: int
    timestamp: float


@dataclass(frozen=True)
class SequenceManifest:
    """Description of an image sequence on disk.

    :param frames: frame entries with strictly increasing indices.
    :param fps: frame rate, > 0.
    :param channels: channel count of every frame.
    :param homographies: optional per-frame 3x3 matrices (frame -> canonical).
    :param ground_truth: ``None``, a single CSV path, or target id -> CSV path.
    :param wavelengths: optional band centers in nm, one per channel.
    :param base_dir: folder relative paths are resolved against.
    """
    frames: Tuple[FrameEntry, ...]
    fps: float
    channels: int
    homographies: Optional[Tuple[Tuple[float, ...], ...]] = None
    ground_truth: Union[None, str, Dict[str, str]] = None
    wavelengths: Optional[Tuple[float, ...]] = None
    base_dir: str = field(default='.', compare=False)

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if not self.fps > 0:
            raise ManifestError(f"fps must be positive, got {self.fps}.")
        if self.channels < 1:
            raise ManifestError(f"channel count must be at least 1, got {self.channels}.")
        idxs = [f.index for f in self.frames]
        if any(b <= a for a, b in zip(idxs[:-1], idxs[1:])):
            raise ManifestError("frame indices must be strictly increasing.")
        if self.homographies is not None:
            if len(self.homographies) != len(self.frames):
                raise ManifestError(
                    f"{len(self.homographies)} homographies for {len(self.frames)} frames.")
            for i, h in enumerate(self.homographies):
                if len(h) != 9:
                    raise ManifestError(f"homography {i} has {len(h)} entries, expected 9.")
        if self.wavelengths is not None and len(self.wavelengths) != self.channels:
            raise ManifestError(
                f"{len(self.wavelengths)} wavelengths for {self.channels} channels.")

    @property
    def nframes(self) -> int:
        return len(self.frames)

    def frame_path(self, i: int) -> str:
        """Absolute path of the ``i``-th frame entry (position, not index)."""
        return self.resolve(self.frames[i].path)

    def resolve(self, path: str) -> str:
        if os.path.isabs(path):
            return path
        return os.path.join(self.base_dir, path)

    def homography(self, i: int) -> Optional[np.ndarray]:
        if self.homographies is None:
            return None
        return np.array(self.homographies[i], dtype=float).reshape(3, 3)

    def ground_truth_paths(self) -> Dict[str, str]:
        """Target id -> absolute CSV path. A single path uses the file stem
        (without a leading ``gt_``) as id."""
        if self.ground_truth is None:
            return {}
        if isinstance(self.ground_truth, str):
            stem = os.path.splitext(os.path.basename(self.ground_truth))[0]
            if stem.startswith('gt_'):
                stem = stem[3:]
            return {stem: self.resolve(self.ground_truth)}
        return {k: self.resolve(v) for k, v in self.ground_truth.items()}

    def with_base_dir(self, base_dir: str) -> "SequenceManifest":
        return replace(self, base_dir=base_dir)

    def to_dict(self) -> Dict[str, Any]:
        ret: Dict[str, Any] = {
            'schema_version': SCHEMA_VERSION,
            'fps': self.fps,
            'channels': self.channels,
            'frames': [dict(path=f.path, index=f.index, timestamp=f.timestamp)
                       for f in self.frames],
        }
        if self.wavelengths is not None:
            ret['wavelengths'] = list(self.wavelengths)
        if self.homographies is not None:
            ret['homographies'] = [list(h) for h in self.homographies]
        if self.ground_truth is not None:
            ret['ground_truth'] = self.ground_truth if isinstance(self.ground_truth, str) \
                else dict(self.ground_truth)
        return ret

    @classmethod
    def from_dict(cls, d: Dict[str, Any], base_dir: str = '.') -> "SequenceManifest":
        version = d.get('schema_version', SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ManifestError(f"unsupported manifest schema_version {version}.")
        try:
            frames = tuple(FrameEntry(str(f['path']), int(f['index']), float(f['timestamp']))
                           for f in d['frames'])
            fps = float(d['fps'])
            channels = int(d['channels'])
        except (KeyError, TypeError, ValueError) as e:
            raise ManifestError(f"malformed manifest: {e!r}")

        homs = d.get('homographies')
        gt = d.get('ground_truth')
        if isinstance(gt, dict):
            gt = {str(k): str(v) for k, v in gt.items()}
        wl = d.get('wavelengths')
        return cls(
            frames=frames, fps=fps, channels=channels,
            homographies=None if homs is None else
            tuple(tuple(float(v) for v in np.ravel(h)) for h in homs),
            ground_truth=gt,
            wavelengths=None if wl is None else tuple(float(w) for w in wl),
            base_dir=base_dir,
        )


def homographies_to_tuples(homs: Sequence[np.ndarray]) -> Tuple[Tuple[float, ...], ...]:
    return tuple(tuple(float(v) for v in np.ravel(h)) for h in homs)


def load_manifest(path: str) -> SequenceManifest:
    try:
        with open(path, 'r') as f:
            d = json.load(f)
    except json.JSONDecodeError as e:
        raise ManifestError(f"{path}: not valid JSON ({e})")
    m = SequenceManifest.from_dict(d, base_dir=os.path.dirname(os.path.abspath(path)))
    logger.debug(f"Loaded manifest {path}: {m.nframes} frames at {m.fps} fps.")
    return m


def save_manifest(manifest: SequenceManifest, path: str) -> None:
    folder = os.path.dirname(path)
    if folder != '':
        os.makedirs(folder, exist_ok=True)
    with open(path, 'w') as f:
        json.dump(manifest.to_dict(), f, indent=2)


def read_ground_truth(path: str) -> pd.DataFrame:
    """Read a ground-truth CSV; unknown columns are dropped, except
    ``occluded`` which is kept as bool when present."""
    try:
        df = pd.read_csv(path)
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as e:
        raise ManifestError(f"{path}: unreadable ground truth ({e})")
    missing = [c for c in GT_COLUMNS if c not in df.columns]
    if len(missing) > 0:
        raise ManifestError(f"{path}: ground truth lacks columns {missing}.")
    cols: List[str] = list(GT_COLUMNS)
    if 'occluded' in df.columns:
        cols.append('occluded')
    df = df[cols].copy()
    df['frame'] = df['frame'].astype(int)
    if 'occluded' in df.columns:
        df['occluded'] = df['occluded'].astype(bool)
    if not df['frame'].is_monotonic_increasing or df['frame'].duplicated().any():
        raise ManifestError(f"{path}: frame column must be strictly increasing.")
    return df


def write_ground_truth(path: str, df: pd.DataFrame) -> None:
    out = df.copy()
    if 'occluded' in out.columns:
        out['occluded'] = out['occluded'].astype(int)
    out.to_csv(path, index=False)
