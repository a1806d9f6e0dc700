"""trackr.sim.generator

Rendering of synthetic sequences.

Every frame is rendered by mapping its pixels to canonical coordinates with
the frame's homography (the inverse of the camera jitter applied to it) and
evaluating the scene there: value-noise background, textured targets, and
opaque occluders on top. Output per sequence::

    <out_dir>/
        manifest.json
        scenario.json
        gt_<target>.csv           # frame,cx,cy,w,h,occluded
        frames/frame_000000.hsif
        ...
"""
import os
from concurrent.futures import Executor
from dataclasses import replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..data.formats import save_frame
from ..data.manifest import (
    FrameEntry, SequenceManifest, homographies_to_tuples, read_ground_truth,
    save_manifest, write_ground_truth,
)
from ..data.stack import ChannelStack
from ..log import getLogger
from ..registration.homography import Homography
from .scenario import OccluderSpec, ScenarioSpec, SpecError, TargetSpec, save_scenario

__license__ = 'MIT'

logger = getLogger(__name__)

FRAME_PATTERN = 'frames/frame_{index:06d}.hsif'
JITTER_CLAMP = 3.

_STREAM_BACKGROUND = 1
_STREAM_TARGET = 2
_STREAM_JITTER = 3
_STREAM_CANOPY = 4
_STREAM_FRAME = 5


class ValueNoise:
    """Smoothly interpolated lattice noise in [0, 1], summed over octaves.

    :param extent: ``(xmin, ymin, xmax, ymax)`` region that will be sampled.
    :param scale: lattice spacing of the first octave in pixels.
    """

    def __init__(self, rng: np.random.Generator, extent: Tuple[float, float, float, float],
                 scale: float, octaves: int):
        self.xmin, self.ymin, xmax, ymax = extent
        self.layers = []
        for o in range(octaves):
            spacing = max(scale / 2 ** o, 1.)
            nx = int(np.ceil((xmax - self.xmin) / spacing)) + 3
            ny = int(np.ceil((ymax - self.ymin) / spacing)) + 3
            self.layers.append((spacing, rng.random((ny, nx)), 0.5 ** o))
        self.norm = sum(amp for _, _, amp in self.layers)

    def __call__(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        total = np.zeros(np.broadcast(x, y).shape)
        for spacing, lattice, amp in self.layers:
            ny, nx = lattice.shape
            gx = np.clip((x - self.xmin) / spacing + 1., 0., nx - 1 - 1e-9)
            gy = np.clip((y - self.ymin) / spacing + 1., 0., ny - 1 - 1e-9)
            ix, iy = np.floor(gx).astype(int), np.floor(gy).astype(int)
            fx, fy = gx - ix, gy - iy
            sx, sy = fx * fx * (3 - 2 * fx), fy * fy * (3 - 2 * fy)
            top = lattice[iy, ix] * (1 - sx) + lattice[iy, ix + 1] * sx
            bottom = lattice[iy + 1, ix] * (1 - sx) + lattice[iy + 1, ix + 1] * sx
            total += amp * (top * (1 - sy) + bottom * sy)
        return total / self.norm


def camera_poses(spec: ScenarioSpec) -> List[Homography]:
    """Per-frame homographies frame -> canonical.

    The camera performs a random walk in translation and rotation about the
    image center, clamped to three times the per-frame maximum. Frame 0 is
    the canonical frame.
    """
    rng = np.random.default_rng([spec.seed, _STREAM_JITTER])
    mt, mr = spec.jitter.max_translation, spec.jitter.max_rotation_deg
    center = ((spec.width - 1) / 2., (spec.height - 1) / 2.)
    tx = ty = rot = 0.
    ret = []
    for i in range(spec.frames):
        if i > 0:
            dtx, dty = rng.uniform(-1, 1, 2) * mt
            drot = rng.uniform(-1, 1) * mr
            tx = float(np.clip(tx + dtx, -JITTER_CLAMP * mt, JITTER_CLAMP * mt))
            ty = float(np.clip(ty + dty, -JITTER_CLAMP * mt, JITTER_CLAMP * mt))
            rot = float(np.clip(rot + drot, -JITTER_CLAMP * mr, JITTER_CLAMP * mr))
        if tx == 0 and ty == 0 and rot == 0:
            ret.append(Homography.identity())
        else:
            applied = Homography.rigid(rot, tx, ty, center)
            ret.append(applied.inverse())
    return ret


def spectral_profile(channels: int) -> np.ndarray:
    """Smooth per-channel background reflectance."""
    c = np.arange(channels)
    return 0.55 + 0.25 * np.cos(2 * np.pi * c / max(channels, 2))


class SceneRenderer:
    """Evaluates the scene of ``spec`` at canonical coordinates."""

    def __init__(self, spec: ScenarioSpec):
        self.spec = spec
        margin = (JITTER_CLAMP * spec.jitter.max_translation
                  + 0.5 * np.hypot(spec.width, spec.height)
                  * abs(np.sin(np.deg2rad(JITTER_CLAMP * spec.jitter.max_rotation_deg)))
                  + 4.)
        extent = (-margin, -margin, spec.width + margin, spec.height + margin)
        bg = spec.background
        self.background = ValueNoise(np.random.default_rng([spec.seed, _STREAM_BACKGROUND]),
                                     extent, bg.noise_scale, bg.octaves)
        self.canopy = ValueNoise(np.random.default_rng([spec.seed, _STREAM_CANOPY]),
                                 extent, bg.noise_scale, 1)
        self.target_textures = []
        for k, tgt in enumerate(spec.targets):
            w, h = tgt.size
            self.target_textures.append(
                ValueNoise(np.random.default_rng([spec.seed, _STREAM_TARGET, k]),
                           (0., 0., float(w), float(h)), 4., 2))
        self.profile = spectral_profile(spec.channels)

    def canopy_mask(self, occ: OccluderSpec, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        r = occ.rect
        inside = (x >= r.x) & (x < r.right) & (y >= r.y) & (y < r.bottom)
        if occ.coverage < 1:
            inside &= self.canopy(x, y) < occ.coverage
        return inside

    def occluder_mask(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """``True`` where canonical points are hidden by canopy."""
        mask = np.zeros(np.broadcast(x, y).shape, dtype=bool)
        for occ in self.spec.occluders:
            mask |= self.canopy_mask(occ, x, y)
        return mask

    def render(self, index: int, pose: Homography) -> ChannelStack:
        spec = self.spec
        t = index / spec.fps
        vs, us = np.mgrid[0:spec.height, 0:spec.width].astype(np.float64)
        if pose.is_identity():
            x, y = us, vs
        else:
            pts = pose.apply(np.c_[us.ravel(), vs.ravel()])
            x = pts[:, 0].reshape(us.shape)
            y = pts[:, 1].reshape(us.shape)

        n = self.background(x, y)
        c = spec.background.contrast
        img = self.profile[:, None, None] * ((1. - c) + c * n)[None]

        for tgt, tex in zip(spec.targets, self.target_textures):
            x0, y0, x1, y1 = tgt.rect_at(t)
            inside = (x >= x0) & (x < x1) & (y >= y0) & (y < y1)
            if not np.any(inside):
                continue
            tn = tex(x[inside] - x0, y[inside] - y0)
            alb = tgt.albedo_for(spec.channels)
            img[:, inside] = alb[:, None] * (1. + tgt.texture * (tn - 0.5))[None]

        for occ in spec.occluders:
            img[:, self.canopy_mask(occ, x, y)] = occ.albedo

        if spec.frame_noise > 0:
            rng = np.random.default_rng([spec.seed, _STREAM_FRAME, index])
            img = img + rng.normal(0., spec.frame_noise, img.shape)
        return ChannelStack(np.clip(img, 0., 1.))

    def occluded(self, tgt: TargetSpec, index: int) -> bool:
        """Whether every pixel of the target is hidden by an occluder."""
        x0, y0, x1, y1 = tgt.rect_at(index / self.spec.fps)
        xs = np.arange(int(np.ceil(x0)), int(np.ceil(x1)), dtype=float)
        ys = np.arange(int(np.ceil(y0)), int(np.ceil(y1)), dtype=float)
        if xs.size == 0 or ys.size == 0 or len(self.spec.occluders) == 0:
            return False
        gy, gx = np.meshgrid(ys, xs, indexing='ij')
        return bool(np.all(self.occluder_mask(gx, gy)))


def ground_truth(spec: ScenarioSpec, renderer: Optional[SceneRenderer] = None) -> Dict[str, pd.DataFrame]:
    """Per-target tables with columns ``frame,cx,cy,w,h,occluded``."""
    renderer = renderer or SceneRenderer(spec)
    ret = {}
    for tgt in spec.targets:
        rows = []
        for i in range(spec.frames):
            cx, cy = tgt.position(i / spec.fps)
            rows.append(dict(frame=i, cx=cx, cy=cy, w=tgt.size[0], h=tgt.size[1],
                             occluded=renderer.occluded(tgt, i)))
        ret[tgt.id] = pd.DataFrame(rows, columns=['frame', 'cx', 'cy', 'w', 'h', 'occluded'])
    return ret


def generate(spec: ScenarioSpec, out_dir: str,
             executor: Optional[Executor] = None) -> SequenceManifest:
    """Render ``spec`` to ``out_dir``.

    Identical scenarios produce identical files.

    :param executor: if given, frames are rendered on its workers.
    :raises SpecError: if the scenario is invalid, e.g., a target leaves the
        canvas.
    """
    spec.validate()
    os.makedirs(os.path.join(out_dir, 'frames'), exist_ok=True)
    poses = camera_poses(spec)
    renderer = SceneRenderer(spec)

    def write(i: int) -> str:
        rel = FRAME_PATTERN.format(index=i)
        save_frame(os.path.join(out_dir, rel), renderer.render(i, poses[i]))
        return rel

    if executor is None:
        paths = [write(i) for i in range(spec.frames)]
    else:
        paths = list(executor.map(write, range(spec.frames)))

    gt = {}
    for tid, df in ground_truth(spec, renderer).items():
        fn = f'gt_{tid}.csv'
        write_ground_truth(os.path.join(out_dir, fn), df)
        gt[tid] = fn

    manifest = SequenceManifest(
        frames=tuple(FrameEntry(p, i, i / spec.fps) for i, p in enumerate(paths)),
        fps=spec.fps,
        channels=spec.channels,
        homographies=homographies_to_tuples([h.matrix for h in poses]),
        ground_truth=gt if len(gt) > 0 else None,
        wavelengths=spec.wavelengths,
        base_dir=os.path.abspath(out_dir),
    )
    save_manifest(manifest, os.path.join(out_dir, 'manifest.json'))
    save_scenario(spec, os.path.join(out_dir, 'scenario.json'))
    logger.info(f"Rendered {spec.frames} frames with {len(spec.targets)} target(s) to {out_dir}.")
    return manifest


def downsample(manifest: SequenceManifest, factor: int) -> SequenceManifest:
    """Keep every ``factor``-th frame, starting with the first.

    Homographies are relative to the canonical frame already and are kept
    as they are for the remaining frames. Ground truth is matched by frame
    index, so evaluation on the result only sees the remaining frames.

    :raises SpecError: if ``factor`` is below 1 or not below the frame count.
    """
    if factor < 1:
        raise SpecError(f"downsampling factor must be at least 1, got {factor}.")
    if factor == 1:
        return manifest
    if factor >= manifest.nframes:
        raise SpecError(
            f"downsampling factor {factor} leaves nothing of {manifest.nframes} frames.")
    homs = None
    if manifest.homographies is not None:
        homs = manifest.homographies[::factor]
    return replace(manifest, frames=manifest.frames[::factor],
                   fps=manifest.fps / factor, homographies=homs)


def write_downsampled(manifest: SequenceManifest, factor: int, out_dir: str,
                      name: Optional[str] = None) -> SequenceManifest:
    """Downsample and write the manifest plus filtered ground-truth tables
    to ``out_dir``; frame paths keep pointing at the original files."""
    ds = downsample(manifest, factor)
    name = name or f'manifest_ds{factor}'
    keep = {f.index for f in ds.frames}
    gt: Dict[str, str] = {}
    for tid, path in manifest.ground_truth_paths().items():
        df = read_ground_truth(path)
        fn = f'gt_{tid}_ds{factor}.csv'
        write_ground_truth(os.path.join(out_dir, fn), df[df['frame'].isin(keep)])
        gt[tid] = fn
    frames = tuple(replace(f, path=os.path.relpath(manifest.resolve(f.path), out_dir))
                   for f in ds.frames)
    out = replace(ds, frames=frames, ground_truth=gt if len(gt) > 0 else None,
                  base_dir=os.path.abspath(out_dir))
    save_manifest(out, os.path.join(out_dir, f'{name}.json'))
    return out
