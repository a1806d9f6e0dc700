import json

import numpy as np
import pandas as pd
import pytest

from trackr.data.manifest import (
    FrameEntry, ManifestError, SequenceManifest, load_manifest, read_ground_truth,
    save_manifest,
)
from trackr.sim.generator import downsample
from trackr.sim.scenario import SpecError


def _frames(n):
    return [dict(path=f'frames/f{i}.hsif', index=i, timestamp=i / 1.42) for i in range(n)]


def test_manifest_from_dict(tmp_path):
    """Relative paths resolve against the manifest's folder."""
    d = dict(schema_version=1, fps=1.42, channels=61, frames=_frames(3),
             ground_truth='gt_car.csv')
    fn = tmp_path / 'manifest.json'
    fn.write_text(json.dumps(d))
    m = load_manifest(str(fn))
    assert m.nframes == 3 and m.channels == 61
    assert m.frame_path(1) == str(tmp_path / 'frames' / 'f1.hsif')
    assert m.ground_truth_paths() == {'car': str(tmp_path / 'gt_car.csv')}
    assert m.homography(0) is None

    save_manifest(m, str(tmp_path / 'copy.json'))
    assert load_manifest(str(tmp_path / 'copy.json')) == m


def test_manifest_validation():
    """Inconsistent manifests are rejected."""
    base = dict(fps=1.0, channels=3, frames=_frames(2))
    with pytest.raises(ManifestError):
        SequenceManifest.from_dict({**base, 'fps': 0})
    with pytest.raises(ManifestError):
        SequenceManifest.from_dict({**base, 'schema_version': 2})
    with pytest.raises(ManifestError):
        SequenceManifest.from_dict({**base, 'frames': _frames(2)[::-1]})
    with pytest.raises(ManifestError):
        SequenceManifest.from_dict({**base, 'homographies': [np.eye(3).ravel().tolist()]})
    with pytest.raises(ManifestError):
        SequenceManifest.from_dict({**base, 'wavelengths': [500., 600.]})
    with pytest.raises(ManifestError):
        SequenceManifest.from_dict({'fps': 1.0, 'channels': 3})

    m = SequenceManifest.from_dict({**base, 'homographies': [np.eye(3).ravel().tolist()] * 2,
                                    'ground_truth': {'a': 'a.csv', 'b': 'b.csv'}})
    assert np.array_equal(m.homography(1), np.eye(3))
    assert sorted(m.ground_truth_paths()) == ['a', 'b']


def test_read_ground_truth(tmp_path):
    """Ground-truth tables need the box columns and increasing frames."""
    fn = tmp_path / 'gt.csv'
    pd.DataFrame(dict(frame=[0, 1], cx=[1., 2.], cy=[3., 4.], w=[8, 8], h=[6, 6],
                      occluded=[0, 1], note=['a', 'b'])).to_csv(fn, index=False)
    df = read_ground_truth(str(fn))
    assert list(df.columns) == ['frame', 'cx', 'cy', 'w', 'h', 'occluded']
    assert df['occluded'].tolist() == [False, True]

    pd.DataFrame(dict(frame=[0], cx=[1.], cy=[3.])).to_csv(fn, index=False)
    with pytest.raises(ManifestError):
        read_ground_truth(str(fn))

    pd.DataFrame(dict(frame=[1, 1], cx=[1., 1.], cy=[3., 3.], w=[2, 2], h=[2, 2])).to_csv(
        fn, index=False)
    with pytest.raises(ManifestError):
        read_ground_truth(str(fn))


def test_downsample():
    """Every n-th frame is kept and the frame rate drops accordingly."""
    m = SequenceManifest(
        frames=tuple(FrameEntry(f'f{i}', i, i / 1.42) for i in range(10)),
        fps=1.42, channels=1,
        homographies=tuple(tuple(np.eye(3).ravel()) for _ in range(10)))
    ds = downsample(m, 2)
    assert [f.index for f in ds.frames] == [0, 2, 4, 6, 8]
    assert ds.fps == pytest.approx(0.71)
    assert len(ds.homographies) == 5
    assert downsample(m, 1) is m
    with pytest.raises(SpecError):
        downsample(m, 0)
    with pytest.raises(SpecError):
        downsample(m, 10)
