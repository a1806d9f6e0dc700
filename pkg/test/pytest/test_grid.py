import itertools

import numpy as np
import pytest

from trackr.data.stack import Rect
from trackr.kcf.correlation import ResponseMap
from trackr.tracker.grid import Fusion, GridConfig, full_roi, fuse, grid_rois, overlap
from trackr.utils.misc import ConfigError, ContractViolation


def _response(peak, psr, size=12):
    values = np.zeros((size, size))
    values[peak] = 1.
    return ResponseMap(values=values, psr=psr, peak=peak)


def test_grid_geometry():
    """A 96 px full ROI holds 4x4 ROIs of 48 px at a 16 px stride."""
    cfg = GridConfig(full_roi_size=96, roi_size=48, grid_n=4)
    assert cfg.stride == 16 and cfg.m == 16
    assert overlap(cfg) == pytest.approx(2 / 3)

    rois = grid_rois(cfg, (100., 100.))
    assert len(rois) == 16
    assert full_roi(cfg, (100., 100.)) == Rect(52, 52, 96, 96)
    assert rois[0] == Rect(52, 52, 48, 48)
    assert rois[1] == Rect(68, 52, 48, 48)
    assert rois[4] == Rect(52, 68, 48, 48)
    assert rois[-1] == Rect(100, 100, 48, 48)


def test_single_roi():
    """One ROI sits on the center and does not overlap anything."""
    cfg = GridConfig(full_roi_size=48, roi_size=48, grid_n=1)
    assert cfg.stride == 0 and overlap(cfg) == 0.
    assert grid_rois(cfg, (30., 40.)) == [Rect.centered(30., 40., 48, 48)]


def test_grid_validation():
    """Only integer tilings are accepted."""
    with pytest.raises(ConfigError):
        GridConfig(full_roi_size=96, roi_size=40, grid_n=4)
    with pytest.raises(ConfigError):
        GridConfig(full_roi_size=48, roi_size=96, grid_n=1)
    with pytest.raises(ConfigError):
        GridConfig(full_roi_size=48, roi_size=48, grid_n=2)
    with pytest.raises(ConfigError):
        GridConfig(grid_n=0)
    with pytest.raises(ConfigError):
        GridConfig.from_dict(dict(fusion='average'))

    cfg = GridConfig.from_dict(dict(grid_n=3, fusion='hard'))
    assert cfg.stride == 24 and cfg.fusion is Fusion.hard
    assert GridConfig.from_dict(cfg.to_dict()) == cfg


def test_hard_fusion():
    """The most confident ROI decides."""
    cfg = GridConfig(full_roi_size=64, roi_size=48, grid_n=2, psr_threshold=7., fusion=Fusion.hard)
    rois = [Rect(0, 0, 48, 48), Rect(16, 0, 48, 48)]
    res = fuse([_response((0, 0), 8.), _response((1, 2), 12.)], rois, cfg, 4)
    assert not res.coasting
    assert res.best_psr == 12.
    assert res.center == (40. + 8., 24. + 4.)


def test_soft_fusion():
    """Agreeing ROIs add up; unconfident ones are ignored."""
    cfg = GridConfig(full_roi_size=64, roi_size=48, grid_n=2, psr_threshold=7., fusion=Fusion.soft)
    rois = [Rect(0, 0, 48, 48), Rect(16, 0, 48, 48)]

    single = fuse([_response((1, 2), 10.)], rois[:1], cfg, 4)
    assert single.center == (24. + 8., 24. + 4.)

    agree = fuse([_response((0, 0), 10.), _response((0, 8), 10.)], rois, cfg, 4)
    assert agree.center == (24., 24.)

    ignored = fuse([_response((0, 0), 10.), _response((3, 3), 3.)], rois, cfg, 4)
    assert ignored.center == (24., 24.)
    assert ignored.best_psr == 10.


def test_coasting():
    """Without a confident ROI the previous position is kept."""
    cfg = GridConfig(full_roi_size=64, roi_size=48, grid_n=2, psr_threshold=7.)
    rois = [Rect(0, 0, 48, 48), Rect(16, 0, 48, 48)]
    responses = [_response((1, 1), 5.), _response((2, 2), 7.)]
    res = fuse(responses, rois, cfg, 4, previous=(10., 11.))
    assert res.coasting and res.center == (10., 11.) and res.best_psr == 7.
    assert fuse(responses, rois, cfg, 4).center == (32., 24.)


def test_fusion_contract():
    """Empty or misaligned inputs are programming errors."""
    cfg = GridConfig()
    with pytest.raises(ContractViolation):
        fuse([], [], cfg, 4)
    with pytest.raises(ContractViolation):
        fuse([_response((0, 0), 10.)], [Rect(0, 0, 48, 48)] * 2, cfg, 4)


@pytest.mark.parametrize('peak', [(6, 6), (6, 0), (0, 6), (11, 5)])
def test_fusion_modes_agree_on_peaks(peak):
    """A single confident ROI is read the same way by both fusion modes,
    including peaks on the last index of the half-open shift range."""
    rois = [Rect(16, 8, 48, 48)]
    hard = GridConfig(full_roi_size=48, roi_size=48, grid_n=1, fusion=Fusion.hard)
    soft = GridConfig(full_roi_size=48, roi_size=48, grid_n=1, fusion=Fusion.soft)
    resp = _response(peak, 10.)
    assert fuse([resp], rois, hard, 4).center == fuse([resp], rois, soft, 4).center
    if peak == (6, 6):
        assert fuse([resp], rois, hard, 4).center == (40. - 24., 32. - 24.)


@pytest.mark.parametrize('fusion', [Fusion.hard, Fusion.soft])
def test_fusion_ignores_roi_order(fusion):
    """Permuting the ROIs together with their responses changes nothing."""
    cfg = GridConfig(full_roi_size=64, roi_size=48, grid_n=2, psr_threshold=7., fusion=fusion)
    rois = [Rect(0, 0, 48, 48), Rect(16, 0, 48, 48), Rect(0, 16, 48, 48), Rect(16, 16, 48, 48)]
    responses = [_response((1, 5), 12.), _response((1, 1), 9.),
                 _response((9, 5), 8.), _response((3, 3), 5.)]
    expected = fuse(responses, rois, cfg, 4)
    assert not expected.coasting and expected.best_psr == 12.
    for perm in itertools.permutations(range(4)):
        res = fuse([responses[i] for i in perm], [rois[i] for i in perm], cfg, 4)
        assert res == expected
