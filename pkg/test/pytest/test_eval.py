import json
import os

import numpy as np
import pandas as pd
import pytest

from trackr.data.formats import FormatError
from trackr.eval import metrics
from trackr.eval.metrics import Timing, Trajectory
from trackr.eval.plotting import save_precision_plot
from trackr.utils.misc import ContractViolation


def _traj(target, centers, frames=None):
    frames = range(len(centers)) if frames is None else frames
    return Trajectory(target, np.array(list(frames)), np.array(centers, dtype=float))


def _offset(target, errors):
    """A trajectory/ground-truth pair with the given per-frame errors along x."""
    gt = _traj(target, [(100., 50.)] * len(errors))
    return gt, _traj(target, [(100. + e, 50.) for e in errors])


def test_center_location_error():
    """CLE is the mean Euclidean distance on common frames."""
    gt = _traj('car', [(0., 0.)] * 3)
    tr = _traj('car', [(0., 0.), (3., 4.), (6., 8.)])
    assert metrics.cle(tr, gt) == pytest.approx(5.)

    late = _traj('car', [(3., 4.), (3., 4.)], frames=[2, 7])
    assert np.allclose(metrics.center_errors(late, gt), [5.])
    with pytest.raises(ContractViolation):
        metrics.cle(_traj('car', [(0., 0.)], frames=[9]), gt)


def test_precision_curve():
    """Precision at a threshold is the fraction of frames within it."""
    p = metrics.precision_from_errors(np.array([0., 10., 30.]))
    assert p.size == 51
    assert p[0] == pytest.approx(1 / 3) and p[9] == pytest.approx(1 / 3)
    assert p[10] == pytest.approx(2 / 3) and p[20] == pytest.approx(2 / 3)
    assert p[30] == 1. and p[50] == 1.
    assert np.all(np.diff(p) >= 0)

    gt, tr = _offset('car', [0.5, 25., 60.])
    curve = metrics.precision_curve(tr, gt)
    assert curve[0] == 0. and curve[1] == pytest.approx(1 / 3) and curve[50] == pytest.approx(2 / 3)


def test_trajectory_contract():
    """Frames must be increasing and match the centers."""
    with pytest.raises(ContractViolation):
        _traj('car', [(0., 0.), (1., 1.)], frames=[3, 3])
    with pytest.raises(ContractViolation):
        Trajectory('car', np.arange(3), np.zeros((2, 2)))
    assert len(_traj('car', [(0., 0.)] * 4)) == 4
    moved = _traj('car', [(1., 2.)]).translated(3., -2.)
    assert np.array_equal(moved.centers, [[4., 0.]])


def test_dataset_aggregation():
    """Dataset scores are unweighted means over targets."""
    gt_a, tr_a = _offset('a', [0., 0.])
    gt_b, tr_b = _offset('b', [10., 30., 30., 30.])
    rep = metrics.report({'a': tr_a, 'b': tr_b}, {'a': gt_a, 'b': gt_b})
    assert rep.cle == pytest.approx((0. + 25.) / 2)
    assert rep.pr20 == pytest.approx((1. + 0.25) / 2)
    assert rep.pr50 == pytest.approx(1.)
    assert rep.frames_evaluated == 6
    assert rep.fps is None
    assert rep.per_target['b'].cle == pytest.approx(25.)


def test_report_contract():
    """Trajectories and ground truth must cover the same targets."""
    gt, tr = _offset('a', [1.])
    with pytest.raises(ContractViolation):
        metrics.report({}, {'a': gt})
    with pytest.raises(ContractViolation, match="'b'"):
        metrics.report({'a': tr}, {'a': gt, 'b': gt})
    with pytest.raises(ContractViolation):
        metrics.aggregate({})


def test_timing():
    """Frame rate from a per-target timing log."""
    assert Timing(157, 110.5).fps == pytest.approx(1.42, abs=1e-3)
    assert Timing(3, 0.).fps == float('inf')
    log = pd.DataFrame(dict(frame=[0, 0, 1, 1], target=['a', 'b', 'a', 'b'],
                            seconds=[0.25, 0.25, 0.5, 0.5]))
    t = Timing.from_log(log)
    assert (t.frames, t.seconds) == (2, 1.5)


def test_trajectory_files(tmp_path):
    """Trajectory CSVs are found by name; ids come from the file stem."""
    df = pd.DataFrame(dict(frame=[0, 1], cx=[1., 2.], cy=[3., 4.], psr=[0., 9.]))
    df.to_csv(tmp_path / 'trajectory_car.csv', index=False)
    df.to_csv(tmp_path / 'timing.csv', index=False)
    trajs = metrics.load_trajectories(str(tmp_path))
    assert list(trajs) == ['car']
    assert np.array_equal(trajs['car'].centers, [[1., 3.], [2., 4.]])
    assert metrics.load_trajectories(str(tmp_path), targets=['bus']) == {}

    df[['frame', 'cx']].to_csv(tmp_path / 'bad.csv', index=False)
    with pytest.raises(FormatError):
        metrics.read_trajectory(str(tmp_path / 'bad.csv'))


def test_write_report(tmp_path):
    """Reports are written as JSON and CSV, plus a precision plot."""
    gt_a, tr_a = _offset('a', [0., 4.])
    gt_b, tr_b = _offset('b', [30.])
    rep = metrics.report({'a': tr_a, 'b': tr_b}, {'a': gt_a, 'b': gt_b}, Timing(2, 4.))
    paths = metrics.write_report(rep, str(tmp_path))

    with open(paths['report']) as f:
        doc = json.load(f)
    assert doc['schema_version'] == 1
    assert doc['fps'] == 0.5
    assert doc['cle'] == pytest.approx((2. + 30.) / 2)
    assert len(doc['precision']) == len(doc['thresholds']) == 51
    assert sorted(doc['targets']) == ['a', 'b']

    prec = pd.read_csv(paths['precision'])
    assert list(prec.columns) == ['threshold', 'precision'] and len(prec) == 51
    table = pd.read_csv(paths['metrics']).set_index('metric')['value']
    assert table['pr20'] == pytest.approx(0.5)
    assert table['fps'] == pytest.approx(0.5)

    png = save_precision_plot(rep, str(tmp_path), title='test')
    assert os.path.getsize(png) > 0
