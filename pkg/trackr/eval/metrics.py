"""trackr.eval.metrics

Center location error (CLE) and precision curves.

A sequence is scored frame by frame on the frames both the prediction and
the ground truth contain. Dataset-level numbers are unweighted means over
sequences (targets), not pooled over frames. Frames in which the tracker
coasted count at the position it held.

Reports are written as::

    <out_dir>/
        report.json      # full report, see ``report_to_dict``
        precision.csv    # threshold,precision
        metrics.csv      # metric,value
"""
import json
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from ..data.formats import FormatError
from ..data.manifest import read_ground_truth
from ..log import getLogger
from ..utils.misc import ContractViolation

__license__ = 'MIT'

logger = getLogger(__name__)

SCHEMA_VERSION = 1
MAX_THRESHOLD = 50
TRAJECTORY_COLUMNS = ['frame', 'cx', 'cy']


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Per-frame target centers.

    :param frames: frame indices, strictly increasing.
    :param centers: ``(N, 2)`` array of ``(x, y)`` in canonical pixels.
    """
    target: str
    frames: np.ndarray
    centers: np.ndarray

    def __post_init__(self) -> None:
        frames = np.asarray(self.frames, dtype=int).reshape(-1)
        centers = np.asarray(self.centers, dtype=float).reshape(-1, 2)
        if frames.size != centers.shape[0]:
            raise ContractViolation(
                f"trajectory '{self.target}': {frames.size} frames for {centers.shape[0]} centers.")
        if np.any(np.diff(frames) <= 0):
            raise ContractViolation(
                f"trajectory '{self.target}': frame indices must be strictly increasing.")
        object.__setattr__(self, 'frames', frames)
        object.__setattr__(self, 'centers', centers)

    def __len__(self) -> int:
        return int(self.frames.size)

    def translated(self, dx: float, dy: float) -> "Trajectory":
        return Trajectory(self.target, self.frames, self.centers + np.array([dx, dy]))

    @classmethod
    def from_frame(cls, target: str, df: pd.DataFrame) -> "Trajectory":
        """From a table with (at least) the columns ``frame,cx,cy``."""
        return cls(target, df['frame'].to_numpy(), df[['cx', 'cy']].to_numpy())


def read_trajectory(path: str, target: Optional[str] = None) -> Trajectory:
    """Read a trajectory CSV (``frame,cx,cy,...``).

    The target id defaults to the file stem without a ``trajectory_`` prefix.
    """
    if target is None:
        target = os.path.splitext(os.path.basename(path))[0]
        if target.startswith('trajectory_'):
            target = target[len('trajectory_'):]
    try:
        df = pd.read_csv(path)
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as e:
        raise FormatError(f"unreadable trajectory ({e})", path=path)
    missing = [c for c in TRAJECTORY_COLUMNS if c not in df.columns]
    if len(missing) > 0:
        raise FormatError(f"trajectory lacks columns {missing}", path=path)
    return Trajectory.from_frame(target, df)


def read_ground_truth_trajectory(path: str, target: str) -> Trajectory:
    return Trajectory.from_frame(target, read_ground_truth(path))


def center_errors(traj: Trajectory, gt: Trajectory) -> np.ndarray:
    """Euclidean center distance on every frame both trajectories contain.

    :raises ContractViolation: if there is no such frame.
    """
    _, ti, gi = np.intersect1d(traj.frames, gt.frames, assume_unique=True,
                               return_indices=True)
    if ti.size == 0:
        raise ContractViolation(
            f"trajectory '{traj.target}' and its ground truth share no frames.")
    return np.linalg.norm(traj.centers[ti] - gt.centers[gi], axis=1)


def cle(traj: Trajectory, gt: Trajectory) -> float:
    """Mean center location error in pixels."""
    return float(np.mean(center_errors(traj, gt)))


def precision_from_errors(errors: np.ndarray, max_threshold: int = MAX_THRESHOLD) -> np.ndarray:
    thresholds = np.arange(max_threshold + 1)
    return np.mean(np.asarray(errors)[:, None] <= thresholds[None, :], axis=0)


def precision_curve(traj: Trajectory, gt: Trajectory,
                    max_threshold: int = MAX_THRESHOLD) -> np.ndarray:
    """Fraction of frames with center error at most ``t`` px, for
    ``t = 0 .. max_threshold``."""
    return precision_from_errors(center_errors(traj, gt), max_threshold)


@dataclass(frozen=True)
class Timing:
    """Processing time of a run."""
    frames: int
    seconds: float

    @property
    def fps(self) -> float:
        if self.seconds <= 0:
            return float('inf')
        return self.frames / self.seconds

    @classmethod
    def from_log(cls, df: pd.DataFrame) -> "Timing":
        """From a timing log with columns ``frame,target,seconds``: the
        number of distinct frames and the total time spent on them."""
        return cls(int(df['frame'].nunique()), float(df['seconds'].sum()))


@dataclass(frozen=True, eq=False)
class EvalReport:
    """Scores of one sequence, or the mean over several.

    :param precision: precision at thresholds ``0 .. len(precision) - 1`` px.
    :param fps: processed frames per second, if timing was known.
    :param per_target: the per-target reports an aggregate was made from.
    """
    cle: float
    precision: np.ndarray
    frames_evaluated: int
    fps: Optional[float] = None
    per_target: Dict[str, "EvalReport"] = field(default_factory=dict)

    @property
    def thresholds(self) -> np.ndarray:
        return np.arange(self.precision.size)

    @property
    def pr20(self) -> float:
        return float(self.precision[20])

    @property
    def pr50(self) -> float:
        return float(self.precision[50])


def evaluate_target(traj: Trajectory, gt: Trajectory,
                    max_threshold: int = MAX_THRESHOLD) -> EvalReport:
    err = center_errors(traj, gt)
    return EvalReport(cle=float(np.mean(err)),
                      precision=precision_from_errors(err, max_threshold),
                      frames_evaluated=int(err.size))


def aggregate(reports: Mapping[str, EvalReport], fps: Optional[float] = None) -> EvalReport:
    """Dataset-level report: unweighted mean of the per-sequence CLE and
    precision curves."""
    if len(reports) == 0:
        raise ContractViolation("nothing to aggregate.")
    items = list(reports.values())
    return EvalReport(
        cle=float(np.mean([r.cle for r in items])),
        precision=np.mean(np.stack([r.precision for r in items]), axis=0),
        frames_evaluated=int(sum(r.frames_evaluated for r in items)),
        fps=fps,
        per_target=dict(reports),
    )


def report(trajs: Mapping[str, Trajectory], gts: Mapping[str, Trajectory],
           timing: Optional[Timing] = None,
           max_threshold: int = MAX_THRESHOLD) -> EvalReport:
    """Score every tracked target against its ground truth.

    :raises ContractViolation: if there are no trajectories, or target ids
        of the two sides do not match.
    """
    if len(trajs) == 0:
        raise ContractViolation("no trajectories to evaluate.")
    missing_gt = sorted(set(trajs) - set(gts))
    missing_tr = sorted(set(gts) - set(trajs))
    if len(missing_gt) > 0 or len(missing_tr) > 0:
        raise ContractViolation(
            f"target ids do not match: no ground truth for {missing_gt}, "
            f"no trajectory for {missing_tr}.")
    per_target = {tid: evaluate_target(trajs[tid], gts[tid], max_threshold)
                  for tid in sorted(trajs)}
    ret = aggregate(per_target, None if timing is None else timing.fps)
    logger.info(f"Evaluated {len(per_target)} target(s) on {ret.frames_evaluated} frames: "
                f"CLE {ret.cle:.2f} px, Pr20 {ret.pr20:.3f}, Pr50 {ret.pr50:.3f}.")
    return ret


def report_to_dict(rep: EvalReport) -> Dict[str, Any]:
    def scores(r: EvalReport) -> Dict[str, Any]:
        return {'cle': r.cle, 'pr20': r.pr20, 'pr50': r.pr50,
                'frames_evaluated': r.frames_evaluated}

    return {
        'schema_version': SCHEMA_VERSION,
        **scores(rep),
        'fps': rep.fps,
        'thresholds': rep.thresholds.tolist(),
        'precision': rep.precision.tolist(),
        'targets': {tid: {**scores(r), 'precision': r.precision.tolist()}
                    for tid, r in rep.per_target.items()},
    }


def metrics_table(rep: EvalReport) -> pd.DataFrame:
    rows = [('cle', rep.cle), ('pr20', rep.pr20), ('pr50', rep.pr50),
            ('frames_evaluated', rep.frames_evaluated)]
    if rep.fps is not None:
        rows.append(('fps', rep.fps))
    return pd.DataFrame(rows, columns=['metric', 'value'])


def write_report(rep: EvalReport, out_dir: str) -> Dict[str, str]:
    """Write ``report.json``, ``precision.csv`` and ``metrics.csv``.

    :returns: file kind -> path.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = {k: os.path.join(out_dir, fn) for k, fn in
             [('report', 'report.json'), ('precision', 'precision.csv'),
              ('metrics', 'metrics.csv')]}
    with open(paths['report'], 'w') as f:
        json.dump(report_to_dict(rep), f, indent=2)
    pd.DataFrame({'threshold': rep.thresholds, 'precision': rep.precision}) \
        .to_csv(paths['precision'], index=False)
    metrics_table(rep).to_csv(paths['metrics'], index=False)
    return paths


def load_trajectories(traj_dir: str, targets: Optional[Sequence[str]] = None) -> Dict[str, Trajectory]:
    """All ``trajectory_<id>.csv`` files of a folder (or only ``targets``)."""
    ret: Dict[str, Trajectory] = {}
    for fn in sorted(os.listdir(traj_dir)):
        if not (fn.startswith('trajectory_') and fn.endswith('.csv')):
            continue
        t = read_trajectory(os.path.join(traj_dir, fn))
        if targets is None or t.target in targets:
            ret[t.target] = t
    return ret
