"""trackr.apps.sweeps

Grid-geometry experiments: the same run repeated over a range of grid
settings, each scored against the ground truth.

- overlap sweep: fixed full ROI and ROI size, varying the number of ROIs
  per axis (and with it the overlap of neighboring ROIs);
- full-ROI-size sweep: fixed ROI size and stride, varying the size of the
  full detection ROI.

Both return a table with the columns ``setting, overlap, m, pr20, pr50, cle,
fps``.
"""
import os
from dataclasses import replace
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from ..data.manifest import load_manifest
from ..eval.metrics import (
    Timing, Trajectory, read_ground_truth_trajectory, report, write_report,
)
from ..log import getLogger
from ..tracker.grid import GridConfig, overlap
from ..utils.misc import ConfigError
from .pipeline import RunConfig, run_tracking

__license__ = 'MIT'

logger = getLogger(__name__)

SWEEP_COLUMNS = ['setting', 'overlap', 'm', 'pr20', 'pr50', 'cle', 'fps']


def valid_grid_ns(full_roi_size: int, roi_size: int, max_n: int = 8) -> List[int]:
    """ROI counts per axis that tile the full ROI at an integer stride."""
    span = full_roi_size - roi_size
    ret = [1]
    if span > 0:
        ret += [n for n in range(2, min(max_n, span + 1) + 1) if span % (n - 1) == 0]
    return ret


def _score(run: RunConfig, grid: GridConfig, setting: str) -> Dict[str, Any]:
    out_dir = os.path.join(run.out_dir, setting)
    sub = replace(run, tracker=replace(run.tracker, grid=grid), out_dir=out_dir)
    result = run_tracking(sub)

    manifest = load_manifest(run.manifest)
    gts = {tid: read_ground_truth_trajectory(p, tid)
           for tid, p in manifest.ground_truth_paths().items() if tid in result.trajectories}
    trajs = {tid: Trajectory.from_frame(tid, df) for tid, df in result.trajectories.items()}
    rep = report(trajs, gts, Timing.from_log(result.timing))
    write_report(rep, out_dir)
    logger.info(f"{setting}: Pr20 {rep.pr20:.3f}, Pr50 {rep.pr50:.3f}, CLE {rep.cle:.2f} px.")
    return dict(setting=setting, overlap=overlap(grid), m=grid.m, pr20=rep.pr20,
                pr50=rep.pr50, cle=rep.cle, fps=rep.fps)


def overlap_sweep(run: RunConfig, grid_ns: Optional[Sequence[int]] = None) -> pd.DataFrame:
    """Run once per ROI count; defaults to every valid count up to 8."""
    base = run.tracker.grid
    if grid_ns is None:
        grid_ns = valid_grid_ns(base.full_roi_size, base.roi_size)
    rows = [_score(run, replace(base, grid_n=n), f'{n}x{n}') for n in grid_ns]
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)


def roi_size_sweep(run: RunConfig, full_roi_sizes: Sequence[int],
                   stride: Optional[int] = None) -> pd.DataFrame:
    """Run once per full ROI size, keeping ROI size and stride.

    :param stride: ROI stride in pixels; defaults to the configured grid's.
    :raises ConfigError: if a size cannot be tiled at that stride.
    """
    base = run.tracker.grid
    stride = stride if stride is not None else base.stride
    if stride < 1:
        raise ConfigError("a full-ROI sweep needs a positive stride.")
    grids = []
    for size in full_roi_sizes:
        span = size - base.roi_size
        if span < 0 or span % stride != 0:
            raise ConfigError(
                f"full ROI of {size} px is not tiled by {base.roi_size} px ROIs at stride {stride}.")
        grids.append(replace(base, full_roi_size=size, grid_n=span // stride + 1))
    rows = [_score(run, g, f'{g.full_roi_size}px') for g in grids]
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)
