import json
import os

import pandas as pd
import pytest

from trackr.apps import cli
from trackr.data.formats import load_feature_map

from .conftest import scenario_dict

GRID = dict(full_roi_size=96, roi_size=48, grid_n=3)


@pytest.fixture
def sequence(tmp_path, write_json):
    scen = write_json('scenario.json', scenario_dict())
    assert cli.main(['simulate', scen, '--out', str(tmp_path / 'seq')]) == cli.EXIT_OK
    return str(tmp_path / 'seq' / 'manifest.json')


def test_simulate(tmp_path, write_json):
    """Simulation writes a sequence and, on request, a downsampled manifest."""
    scen = write_json('scenario.json', scenario_dict())
    out = tmp_path / 'seq'
    assert cli.main(['simulate', scen, '--out', str(out), '--downsample', '2',
                     '--threads', '2']) == cli.EXIT_OK
    assert len(os.listdir(out / 'frames')) == 6
    with open(out / 'manifest_ds2.json') as f:
        assert len(json.load(f)['frames']) == 3

    bad = write_json('bad.json', scenario_dict(
        targets=[dict(id='car', size=[16, 10], path=[[2, 64]])]))
    assert cli.main(['simulate', bad, '--out', str(tmp_path / 'bad')]) == cli.EXIT_CONFIG


def test_track_and_evaluate(sequence, tmp_path, write_json):
    """Track a simulated sequence and score it."""
    run = write_json('run.json', dict(manifest=sequence, out_dir='run',
                                      tracker=dict(grid=GRID)))
    assert cli.main(['track', '--config', run, '--threads', '2']) == cli.EXIT_OK
    assert os.path.exists(tmp_path / 'run' / 'trajectory_car.csv')

    assert cli.main(['evaluate', str(tmp_path / 'run'), '--gt', sequence]) == cli.EXIT_OK
    with open(tmp_path / 'run' / 'report.json') as f:
        rep = json.load(f)
    assert rep['cle'] < 4.
    assert rep['pr20'] == 1.
    assert rep['fps'] > 0
    assert os.path.exists(tmp_path / 'run' / 'precision.png')

    gt_csv = str(tmp_path / 'seq' / 'gt_car.csv')
    assert cli.main(['evaluate', str(tmp_path / 'run'), '--gt', gt_csv,
                     '--out', str(tmp_path / 'eval')]) == cli.EXIT_OK
    metrics = pd.read_csv(tmp_path / 'eval' / 'metrics.csv').set_index('metric')['value']
    assert metrics['cle'] == pytest.approx(rep['cle'])

    other = tmp_path / 'other_gt.csv'
    pd.read_csv(gt_csv).to_csv(other, index=False)
    assert cli.main(['evaluate', str(tmp_path / 'run'), '--gt', str(other)]) == cli.EXIT_DATA


def test_track_errors(sequence, tmp_path, write_json):
    """Bad configs exit with 2, missing data with 3."""
    run = write_json('run.json', dict(manifest='nowhere.json'))
    assert cli.main(['track', '--config', run]) == cli.EXIT_CONFIG

    (tmp_path / 'fmaps').mkdir()
    deep = write_json('deep.json', dict(manifest=sequence, feature_dir='fmaps', out_dir='deep',
                                        tracker=dict(grid=GRID,
                                                     features=dict(kind='deep-from-file'))))
    assert cli.main(['track', '--config', deep]) == cli.EXIT_DATA


def test_features_feed_deep_tracking(sequence, tmp_path, write_json):
    """Dumped feature maps can be tracked on like external deep features."""
    fmaps = tmp_path / 'fmaps'
    assert cli.main(['features', sequence, '--out', str(fmaps), '--rgb']) == cli.EXIT_OK
    fm, stride = load_feature_map(str(fmaps / 'frame_000000.fmap'))
    assert fm.shape == (32, 40, 31) and stride == 4
    assert os.path.exists(fmaps / 'frame_000000_rgb.png')

    deep = write_json('deep.json', dict(manifest=sequence, feature_dir='fmaps', out_dir='deep',
                                        tracker=dict(grid=GRID,
                                                     features=dict(kind='deep-from-file'))))
    assert cli.main(['track', '--config', deep]) == cli.EXIT_OK
    traj = pd.read_csv(tmp_path / 'deep' / 'trajectory_car.csv')
    assert (traj['cx'] - 60.).abs().max() <= 4. and (traj['cy'] - 64.).abs().max() <= 4.

    assert cli.main(['features', sequence, '--kind', 'sift']) == cli.EXIT_CONFIG
    roi = tmp_path / 'roi'
    assert cli.main(['features', sequence, '--out', str(roi), '--kind', 'raw-channels',
                     '--roi', '40,40,48,48']) == cli.EXIT_OK
    fm, _ = load_feature_map(str(roi / 'frame_000005.fmap'))
    assert fm.shape == (12, 12, 3)


def test_register(sequence, tmp_path):
    """Registration writes per-frame statistics and a new manifest."""
    out = tmp_path / 'reg'
    assert cli.main(['register', sequence, '--out', str(out)]) == cli.EXIT_OK
    table = pd.read_csv(out / 'registration.csv')
    assert list(table.columns) == ['frame', 'matches', 'inliers', 'discrepancy_px']
    assert len(table) == 6
    with open(out / 'manifest_registered.json') as f:
        assert len(json.load(f)['homographies']) == 6


def test_sweep(sequence, tmp_path, write_json):
    """Grid sweeps write one row per setting."""
    run = write_json('run.json', dict(manifest=sequence, out_dir='sweep',
                                      tracker=dict(grid=GRID)))
    assert cli.main(['sweep', '--config', run, '--values', '1,3']) == cli.EXIT_OK
    table = pd.read_csv(tmp_path / 'sweep' / 'sweep_overlap.csv')
    assert table['setting'].tolist() == ['1x1', '3x3']
    assert table['m'].tolist() == [1, 9]
    assert os.path.exists(tmp_path / 'sweep' / '3x3' / 'report.json')

    assert cli.main(['sweep', '--config', run, '--kind', 'roi-size',
                     '--values', '100', '--stride', '16']) == cli.EXIT_CONFIG
    assert cli.main(['sweep', '--config', run, '--kind', 'roi-size']) == cli.EXIT_CONFIG
