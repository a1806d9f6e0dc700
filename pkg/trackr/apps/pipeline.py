"""trackr.apps.pipeline

Batch runs over a sequence on disk: tracking, feature dumps and
registration.

A tracking run reads a run config (JSON)::

    {
        "schema_version": 1,
        "manifest": "seq/manifest.json",
        "tracker_config": "tracker.json",     # or inline: "tracker": {...}
        "feature_dir": null,                  # FMAP folder for deep features
        "out_dir": "runs/seq",
        "registration": "from-manifest",      # estimate | from-manifest | off
        "seed": 0,
        "threads": 0,                         # 0: one worker per CPU
        "targets": null,                      # restrict to these ids
        "init": {"car": [120.0, 80.0]}        # optional; else ground truth
    }

Relative paths are resolved against the folder of the config file. The run
writes::

    <out_dir>/
        trajectory_<target>.csv   # frame,cx,cy,psr,coasting,lost
        timing.csv                # frame,target,seconds
        tracker_config.json       # effective tracker config
        archive.h5                # per-frame tracker output incl. all ROI PSRs
"""
import json
import os
import time
from contextlib import ExitStack
from concurrent.futures import Executor, ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from PIL import Image

from ..data.archive import TrackArchive
from ..data.formats import load_frame, save_feature_map
from ..data.manifest import (
    SequenceManifest, homographies_to_tuples, load_manifest, read_ground_truth,
    save_manifest,
)
from ..data.stack import ChannelStack, Rect, crop, full_rect
from ..features.encoders import FeatureConfig, FeatureKind, encode, rgb_planes
from ..log import getLogger
from ..registration.homography import warp
from ..registration.registrar import Registrar, RegistrationConfig, RegistrationMode
from ..tracker.sources import FeatureMap, feature_map_path, load_frame_features
from ..tracker.tracker import (
    MultiRoiTracker, TrackerConfig, TrackState, load_tracker_config,
)
from ..utils.misc import ConfigError, unwrap_optional

__license__ = 'MIT'

logger = getLogger(__name__)

SCHEMA_VERSION = 1
TRAJECTORY_FILE = 'trajectory_{target}.csv'


@dataclass(frozen=True)
class RunConfig:
    """Everything a tracking run needs.

    :param manifest: path of the sequence manifest.
    :param tracker: tracker configuration.
    :param out_dir: where results go.
    :param feature_dir: folder with per-frame FMAP files (deep features).
    :param registration: how frames are brought to the canonical frame.
    :param seed: seed for everything random (RANSAC sampling).
    :param threads: worker threads for per-ROI detection; 0 means one per CPU.
    :param targets: ids to track; ``None`` tracks all annotated targets.
    :param init: initial centers by target id, instead of the ground truth.
    """
    manifest: str
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    out_dir: str = 'out'
    feature_dir: Optional[str] = None
    registration: RegistrationMode = RegistrationMode.from_manifest
    seed: int = 0
    threads: int = 0
    targets: Optional[Tuple[str, ...]] = None
    init: Optional[Dict[str, Tuple[float, float]]] = None

    def validate(self) -> None:
        """:raises ConfigError: if the run cannot start."""
        if not os.path.isfile(self.manifest):
            raise ConfigError(f"manifest {self.manifest} does not exist.")
        if self.threads < 0:
            raise ConfigError(f"threads must be non-negative, got {self.threads}.")
        if self.tracker.features.kind is FeatureKind.deep:
            if self.feature_dir is None:
                raise ConfigError("deep features need a feature_dir.")
        if self.feature_dir is not None and not os.path.isdir(self.feature_dir):
            raise ConfigError(f"feature directory {self.feature_dir} does not exist.")

    @property
    def workers(self) -> int:
        return self.threads if self.threads > 0 else (os.cpu_count() or 1)

    @classmethod
    def from_dict(cls, d: Dict[str, Any], base_dir: str = '.') -> "RunConfig":
        version = d.get('schema_version', SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported run config schema_version {version}.")

        def path(p: Optional[str]) -> Optional[str]:
            if p is None:
                return None
            return p if os.path.isabs(p) else os.path.normpath(os.path.join(base_dir, p))

        if 'manifest' not in d:
            raise ConfigError("run config needs a 'manifest'.")
        if d.get('tracker_config') is not None:
            tracker = load_tracker_config(unwrap_optional(path(d['tracker_config'])))
        else:
            tracker = TrackerConfig.from_dict(d.get('tracker'))
        init = d.get('init')
        targets = d.get('targets')
        try:
            return cls(
                manifest=unwrap_optional(path(d['manifest'])),
                tracker=tracker,
                out_dir=unwrap_optional(path(d.get('out_dir', 'out'))),
                feature_dir=path(d.get('feature_dir')),
                registration=RegistrationMode.parse(d.get('registration', 'from-manifest')),
                seed=int(d.get('seed', 0)),
                threads=int(d.get('threads', 0)),
                targets=None if targets is None else tuple(str(t) for t in targets),
                init=None if init is None else
                {str(k): (float(v[0]), float(v[1])) for k, v in init.items()},
            )
        except (TypeError, ValueError, IndexError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"invalid run config: {e}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            'schema_version': SCHEMA_VERSION,
            'manifest': self.manifest,
            'tracker': self.tracker.to_dict(),
            'out_dir': self.out_dir,
            'feature_dir': self.feature_dir,
            'registration': self.registration.label,
            'seed': self.seed,
            'threads': self.threads,
            'targets': None if self.targets is None else list(self.targets),
            'init': None if self.init is None else
            {k: list(v) for k, v in self.init.items()},
        }


def load_run_config(path: str) -> RunConfig:
    try:
        with open(path, 'r') as f:
            d = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: not valid JSON ({e})")
    return RunConfig.from_dict(d, base_dir=os.path.dirname(os.path.abspath(path)))


@dataclass
class TrackRun:
    """Result of :func:`run_tracking`.

    :param trajectories: target id -> table ``frame,cx,cy,psr,coasting,lost``.
    :param timing: table ``frame,target,seconds``.
    """
    trajectories: Dict[str, pd.DataFrame]
    timing: pd.DataFrame
    registration_failures: int = 0
    paths: Dict[str, str] = field(default_factory=dict)

    @property
    def fps(self) -> float:
        secs = float(self.timing['seconds'].sum())
        return self.timing['frame'].nunique() / secs if secs > 0 else float('inf')


def initial_centers(manifest: SequenceManifest, targets: Optional[Sequence[str]] = None,
                    init: Optional[Dict[str, Tuple[float, float]]] = None
                    ) -> Dict[str, Tuple[float, float]]:
    """Starting positions: explicit ones, else the ground truth at the first
    frame. Targets without either are skipped."""
    first = manifest.frames[0].index
    ret: Dict[str, Tuple[float, float]] = {}
    for tid, path in sorted(manifest.ground_truth_paths().items()):
        if targets is not None and tid not in targets:
            continue
        df = read_ground_truth(path)
        row = df[df['frame'] == first]
        if len(row) == 0:
            logger.warning(f"Target '{tid}' is not annotated on frame {first}; skipping.")
            continue
        ret[tid] = (float(row['cx'].iloc[0]), float(row['cy'].iloc[0]))
    for tid, c in (init or {}).items():
        if targets is None or tid in targets:
            ret[tid] = c
    if len(ret) == 0:
        raise ConfigError("no target to track: no ground truth on the first frame and no init.")
    return dict(sorted(ret.items()))


def _trajectory_table(states: List[TrackState]) -> pd.DataFrame:
    return pd.DataFrame({
        'frame': [s.frame for s in states],
        'cx': [s.center[0] for s in states],
        'cy': [s.center[1] for s in states],
        'psr': [s.best_psr for s in states],
        'coasting': [int(s.coasting) for s in states],
        'lost': [int(s.lost) for s in states],
    })


def run_tracking(run: RunConfig, write: bool = True) -> TrackRun:
    """Track every target of a sequence.

    Frames are processed in order and targets one after the other; per-ROI
    detection runs on a thread pool when more than one worker is configured.
    Trajectories do not depend on the number of workers.

    :raises ConfigError: if the run config is unusable.
    :raises IngestionError: if a feature map is missing (deep features).
    """
    run.validate()
    manifest = load_manifest(run.manifest)
    cfg = run.tracker
    cfg.features.validate(None if cfg.features.kind is FeatureKind.deep else manifest.channels)
    deep = cfg.features.kind is FeatureKind.deep
    centers = initial_centers(manifest, run.targets, run.init)

    registrar: Optional[Registrar] = None
    if not deep:
        registrar = Registrar.for_manifest(
            manifest, run.registration, RegistrationConfig.from_dict(seed=run.seed),
            rgb_subset=cfg.features.channel_subset)
    elif run.registration is not RegistrationMode.off:
        logger.info("Deep feature maps are taken to be in canonical coordinates; "
                    "registration is skipped.")

    logger.info(f"Tracking {list(centers)} over {manifest.nframes} frames "
                f"({cfg.grid.grid_n}x{cfg.grid.grid_n} ROIs, {cfg.features.kind.label}, "
                f"{run.workers} worker(s)).")

    states: Dict[str, List[TrackState]] = {tid: [] for tid in centers}
    timing: List[Tuple[int, str, float]] = []
    nan_psrs = (float('nan'),) * cfg.grid.m
    archive: Optional[TrackArchive] = None

    with ExitStack() as stack:
        executor: Optional[Executor] = None
        if run.workers > 1:
            executor = stack.enter_context(ThreadPoolExecutor(max_workers=run.workers))
        if write:
            os.makedirs(run.out_dir, exist_ok=True)
            archive = stack.enter_context(TrackArchive(
                os.path.join(run.out_dir, 'archive.h5'),
                meta={'run_config': json.dumps(run.to_dict())}))
        trackers = {tid: MultiRoiTracker(cfg, tid, executor, manifest.wavelengths)
                    for tid in centers}

        for pos, entry in enumerate(manifest.frames):
            t0 = time.perf_counter()
            frame: Union[ChannelStack, FeatureMap]
            if deep:
                frame = load_frame_features(unwrap_optional(run.feature_dir), entry.index)
            else:
                frame = load_frame(manifest.frame_path(pos))
                hom = unwrap_optional(registrar).register(frame).homography
                frame, _ = warp(frame, hom)
            # loading and registration are shared by all targets
            shared = (time.perf_counter() - t0) / len(trackers)

            for tid, tracker in trackers.items():
                t1 = time.perf_counter()
                if pos == 0:
                    state = tracker.initialize(frame, centers[tid], entry.index)
                else:
                    state = tracker.step(frame, entry.index)
                timing.append((entry.index, tid, shared + time.perf_counter() - t1))
                states[tid].append(state)
                if archive is not None:
                    archive.add_frame(tid, state.frame, state.center, state.best_psr,
                                      state.coasting, state.roi_psr or nan_psrs)

    result = TrackRun(
        trajectories={tid: _trajectory_table(s) for tid, s in states.items()},
        timing=pd.DataFrame(timing, columns=['frame', 'target', 'seconds']),
        registration_failures=0 if registrar is None else registrar.failures,
    )
    if write:
        for tid, df in result.trajectories.items():
            p = os.path.join(run.out_dir, TRAJECTORY_FILE.format(target=tid))
            df.to_csv(p, index=False)
            result.paths[tid] = p
        result.timing.to_csv(os.path.join(run.out_dir, 'timing.csv'), index=False)
        with open(os.path.join(run.out_dir, 'tracker_config.json'), 'w') as f:
            json.dump(cfg.to_dict(), f, indent=2)
    logger.info(f"Tracked {manifest.nframes} frames at {result.fps:.2f} fps.")
    return result


def parse_roi(text: str) -> Rect:
    """``"x,y,w,h"`` -> :class:`Rect`."""
    try:
        x, y, w, h = (int(v) for v in text.split(','))
    except ValueError:
        raise ConfigError(f"ROI must be given as x,y,w,h, got '{text}'.")
    return Rect(x, y, w, h)


def dump_features(manifest: SequenceManifest, cfg: FeatureConfig, out_dir: str,
                  roi: Optional[Rect] = None, rgb: bool = False) -> List[str]:
    """Encode every frame (or its ``roi``) and write FMAP files named like
    the deep feature maps, so the folder can serve as a ``feature_dir``.

    :param rgb: also write the selected RGB planes as PNG.
    """
    cfg.validate(manifest.channels)
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for pos, entry in enumerate(manifest.frames):
        frame = load_frame(manifest.frame_path(pos))
        patch = crop(frame, roi if roi is not None else full_rect(frame))
        fm = encode(patch, cfg, manifest.wavelengths)
        p = feature_map_path(out_dir, entry.index)
        save_feature_map(p, fm, cfg.cell_size)
        paths.append(p)
        if rgb:
            planes = rgb_planes(patch, manifest.wavelengths, cfg.band_selection,
                                cfg.channel_subset)
            img = np.clip(np.round(planes.hwc() * 255), 0, 255).astype(np.uint8)
            Image.fromarray(img, mode='RGB').save(os.path.splitext(p)[0] + '_rgb.png')
        logger.debug(f"frame {entry.index}: {fm.width}x{fm.height}x{fm.channels} features.")
    logger.info(f"Wrote {len(paths)} feature maps to {out_dir}.")
    return paths


def register_sequence(manifest: SequenceManifest, cfg: RegistrationConfig,
                      out_dir: str, rgb_subset: Optional[Sequence[int]] = None
                      ) -> Tuple[SequenceManifest, pd.DataFrame]:
    """Estimate the homographies of a sequence.

    Writes ``registration.csv`` (``frame,matches,inliers,discrepancy_px``;
    the discrepancy to the manifest homographies, if it has any) and
    ``manifest_registered.json`` with the estimates.
    """
    registrar = Registrar.for_manifest(manifest, RegistrationMode.estimate, cfg, rgb_subset)
    rows: List[Tuple[int, int, int, float]] = []
    homs: List[np.ndarray] = []
    for pos, entry in enumerate(manifest.frames):
        res = registrar.register(load_frame(manifest.frame_path(pos)))
        rows.append((entry.index, res.matches, res.inliers, res.discrepancy_px))
        homs.append(res.homography.matrix)
    table = pd.DataFrame(rows, columns=['frame', 'matches', 'inliers', 'discrepancy_px'])

    os.makedirs(out_dir, exist_ok=True)
    table.to_csv(os.path.join(out_dir, 'registration.csv'), index=False)
    frames = tuple(replace(f, path=os.path.relpath(manifest.resolve(f.path), out_dir))
                   for f in manifest.frames)
    gt = manifest.ground_truth
    if gt is not None:
        gt = {tid: os.path.relpath(p, out_dir) for tid, p in manifest.ground_truth_paths().items()}
    out = replace(manifest, frames=frames, homographies=homographies_to_tuples(homs),
                  ground_truth=gt, base_dir=os.path.abspath(out_dir))
    save_manifest(out, os.path.join(out_dir, 'manifest_registered.json'))
    if registrar.failures > 0:
        logger.warning(f"Registration failed on {registrar.failures} frame(s).")
    return out, table
