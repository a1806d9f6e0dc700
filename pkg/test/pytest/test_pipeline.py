import json
import os

import pandas as pd
import pytest

from trackr.apps.pipeline import (
    RunConfig, initial_centers, load_run_config, parse_roi, run_tracking,
)
from trackr.apps.sweeps import valid_grid_ns
from trackr.data.archive import read_track_archive
from trackr.data.stack import Rect
from trackr.registration.registrar import RegistrationMode
from trackr.utils.misc import ConfigError


def _run_doc(**kw):
    d = dict(schema_version=1, manifest='seq/manifest.json', out_dir='run', threads=1,
             tracker=dict(grid=dict(full_roi_size=96, roi_size=48, grid_n=3)))
    d.update(kw)
    return d


def test_run_config(static_sequence, write_json, tmp_path):
    """Run configs resolve paths against their own folder."""
    run = load_run_config(write_json('run.json', _run_doc(init={'car': [61, 63]})))
    assert run.manifest == str(tmp_path / 'seq' / 'manifest.json')
    assert run.out_dir == str(tmp_path / 'run')
    assert run.tracker.grid.grid_n == 3
    assert run.registration is RegistrationMode.from_manifest
    assert run.init == {'car': (61., 63.)}
    assert run.workers == 1
    run.validate()
    assert RunConfig.from_dict(run.to_dict()) == run

    tracker_fn = write_json('tracker.json', dict(grid=dict(grid_n=1, full_roi_size=48)))
    run = load_run_config(write_json('run2.json', _run_doc(tracker_config='tracker.json')))
    assert run.tracker.grid.grid_n == 1 and os.path.exists(tracker_fn)


def test_run_config_errors(static_sequence, write_json, tmp_path):
    """Unusable run configs raise ConfigError."""
    with pytest.raises(ConfigError):
        RunConfig.from_dict(_run_doc(schema_version=3))
    with pytest.raises(ConfigError):
        RunConfig.from_dict({'out_dir': 'x'})
    with pytest.raises(ConfigError):
        RunConfig.from_dict(_run_doc(registration='sometimes'))
    with pytest.raises(ConfigError):
        load_run_config(write_json('run.json', _run_doc(manifest='nowhere.json'))).validate()
    with pytest.raises(ConfigError):
        load_run_config(write_json('run.json', _run_doc(threads=-1))).validate()
    deep = dict(features=dict(kind='deep-from-file'))
    with pytest.raises(ConfigError):
        load_run_config(write_json('run.json', _run_doc(tracker=deep))).validate()
    with pytest.raises(ConfigError):
        load_run_config(write_json('run.json', _run_doc(tracker=deep,
                                                        feature_dir='missing'))).validate()
    (tmp_path / 'broken.json').write_text('{')
    with pytest.raises(ConfigError):
        load_run_config(str(tmp_path / 'broken.json'))


def test_initial_centers(static_sequence):
    """Ground truth on the first frame, unless overridden."""
    _, manifest = static_sequence
    assert initial_centers(manifest) == {'car': (60., 64.)}
    assert initial_centers(manifest, init={'car': (1., 2.), 'van': (3., 4.)}) == \
        {'car': (1., 2.), 'van': (3., 4.)}
    assert initial_centers(manifest, targets=['van'], init={'van': (3., 4.)}) == {'van': (3., 4.)}
    with pytest.raises(ConfigError):
        initial_centers(manifest, targets=['van'])


def test_run_tracking(static_sequence, write_json, tmp_path):
    """A run writes trajectories, timing, config and archive."""
    run = load_run_config(write_json('run.json', _run_doc()))
    result = run_tracking(run)

    traj = pd.read_csv(tmp_path / 'run' / 'trajectory_car.csv')
    assert list(traj.columns) == ['frame', 'cx', 'cy', 'psr', 'coasting', 'lost']
    assert traj['frame'].tolist() == list(range(6))
    assert (traj['cx'] - 60.).abs().max() <= 4. and (traj['cy'] - 64.).abs().max() <= 4.
    assert result.registration_failures == 0

    timing = pd.read_csv(tmp_path / 'run' / 'timing.csv')
    assert list(timing.columns) == ['frame', 'target', 'seconds'] and len(timing) == 6
    assert result.fps > 0

    with open(tmp_path / 'run' / 'tracker_config.json') as f:
        assert json.load(f) == run.tracker.to_dict()

    archive = read_track_archive(str(tmp_path / 'run' / 'archive.h5'))
    assert archive['car']['roi_psr'].shape == (6, 9)


def test_tracking_independent_of_workers(static_sequence, write_json, tmp_path):
    """Trajectories are bit-identical for any number of worker threads."""
    one = run_tracking(load_run_config(write_json('a.json', _run_doc(out_dir='a'))))
    four = run_tracking(load_run_config(write_json('b.json', _run_doc(out_dir='b', threads=4))))
    pd.testing.assert_frame_equal(one.trajectories['car'], four.trajectories['car'])
    with open(tmp_path / 'a' / 'trajectory_car.csv', 'rb') as fa, \
            open(tmp_path / 'b' / 'trajectory_car.csv', 'rb') as fb:
        assert fa.read() == fb.read()


def test_helpers():
    """ROI parsing and valid grid sizes."""
    assert parse_roi('1,2,30,40') == Rect(1, 2, 30, 40)
    with pytest.raises(ConfigError):
        parse_roi('1,2,3')
    assert valid_grid_ns(96, 48) == [1, 2, 3, 4, 5, 7]
    assert valid_grid_ns(48, 48) == [1]
