"""trackr.sim.scenario

Description of a synthetic sequence: canvas, frame rate, targets moving
along waypoint paths, opaque occluders, camera jitter and background texture.
Scenarios are read from and written to JSON.
"""
import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .. import config_entry
from ..data.stack import Rect

__license__ = 'MIT'


class SpecError(ValueError):
    """Invalid or unrealizable scenario."""
    pass


@dataclass(frozen=True)
class TargetSpec:
    """A vehicle-like textured rectangle.

    :param path: waypoints ``(x, y)`` of the target center, canonical pixels;
        the first one is the initial position.
    :param speed: pixels per second along the path; the target stops at the
        last waypoint.
    :param albedo: one value per channel, or a single value for all.
    :param texture: relative amplitude of the target's surface texture.
    """
    id: str
    size: Tuple[int, int]
    path: Tuple[Tuple[float, float], ...]
    speed: float = 0.
    albedo: Tuple[float, ...] = (0.9,)
    texture: float = 0.3

    def position(self, t: float) -> Tuple[float, float]:
        """Center after ``t`` seconds."""
        pts = np.asarray(self.path, dtype=float)
        if len(pts) == 1 or self.speed == 0:
            return float(pts[0, 0]), float(pts[0, 1])
        s = self.speed * t
        seglen = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        for (p0, p1), ln in zip(zip(pts[:-1], pts[1:]), seglen):
            if s <= ln:
                f = s / ln if ln > 0 else 0.
                q = p0 + f * (p1 - p0)
                return float(q[0]), float(q[1])
            s -= ln
        return float(pts[-1, 0]), float(pts[-1, 1])

    def rect_at(self, t: float) -> Tuple[float, float, float, float]:
        """Continuous ``(x0, y0, x1, y1)`` extent after ``t`` seconds."""
        cx, cy = self.position(t)
        w, h = self.size
        return cx - w / 2., cy - h / 2., cx + w / 2., cy + h / 2.

    def albedo_for(self, channels: int) -> np.ndarray:
        a = np.asarray(self.albedo, dtype=float)
        return np.full(channels, a[0]) if a.size == 1 else a


@dataclass(frozen=True)
class OccluderSpec:
    """Opaque occluder ("tree") covering part of ``rect``.

    :param coverage: fraction of the rectangle that is canopy; 1 fills it.
    :param albedo: constant canopy value in all channels.
    """
    rect: Rect
    coverage: float = 1.
    albedo: float = 0.12


@dataclass(frozen=True)
class JitterSpec:
    """Camera jitter: random-walk increments per frame."""
    max_translation: float = 0.
    max_rotation_deg: float = 0.


@dataclass(frozen=True)
class BackgroundSpec:
    """Value-noise texture: ``noise_scale`` is the coarsest lattice spacing in
    pixels; each further octave halves it. ``contrast`` is the share of the
    background reflectance modulated by the noise; 0 gives a flat background."""
    noise_scale: float = 16.
    octaves: int = 3
    contrast: float = 0.7


@dataclass(frozen=True)
class ScenarioSpec:
    width: int
    height: int
    frames: int
    fps: float
    channels: int = 1
    targets: Tuple[TargetSpec, ...] = ()
    occluders: Tuple[OccluderSpec, ...] = ()
    jitter: JitterSpec = field(default_factory=JitterSpec)
    background: BackgroundSpec = field(default_factory=BackgroundSpec)
    seed: int = 0
    frame_noise: float = 0.
    wavelengths: Optional[Tuple[float, ...]] = None

    def validate(self) -> None:
        """Check the scenario, including that every target stays on the
        canvas in every frame.

        :raises SpecError: naming the offending frame and target.
        """
        if self.width < 16 or self.height < 16:
            raise SpecError(f"canvas of {self.width}x{self.height} px is too small.")
        if self.frames < 1:
            raise SpecError(f"need at least one frame, got {self.frames}.")
        if not self.fps > 0:
            raise SpecError(f"fps must be positive, got {self.fps}.")
        if self.channels < 1:
            raise SpecError(f"need at least one channel, got {self.channels}.")
        if self.wavelengths is not None and len(self.wavelengths) != self.channels:
            raise SpecError(f"{len(self.wavelengths)} wavelengths for {self.channels} channels.")
        if self.jitter.max_translation < 0 or self.jitter.max_rotation_deg < 0:
            raise SpecError("jitter limits must be non-negative.")
        if self.background.noise_scale < 1 or self.background.octaves < 1:
            raise SpecError("background needs noise_scale >= 1 and at least one octave.")
        if not 0 <= self.background.contrast <= 1:
            raise SpecError(f"background contrast must be in [0, 1], got {self.background.contrast}.")
        if self.frame_noise < 0:
            raise SpecError("frame_noise must be non-negative.")
        ids = [t.id for t in self.targets]
        if len(set(ids)) != len(ids):
            raise SpecError(f"target ids must be unique, got {ids}.")
        for occ in self.occluders:
            if not 0 < occ.coverage <= 1:
                raise SpecError(f"occluder coverage must be in (0, 1], got {occ.coverage}.")
        for tgt in self.targets:
            if tgt.size[0] < 1 or tgt.size[1] < 1:
                raise SpecError(f"target '{tgt.id}' needs a positive size.")
            if len(tgt.path) < 1:
                raise SpecError(f"target '{tgt.id}' needs at least one waypoint.")
            if tgt.speed < 0:
                raise SpecError(f"target '{tgt.id}' has negative speed.")
            if len(tgt.albedo) not in (1, self.channels):
                raise SpecError(f"target '{tgt.id}' albedo needs 1 or {self.channels} values.")
            for i in range(self.frames):
                x0, y0, x1, y1 = tgt.rect_at(i / self.fps)
                if x0 < 0 or y0 < 0 or x1 > self.width or y1 > self.height:
                    raise SpecError(
                        f"target '{tgt.id}' leaves the {self.width}x{self.height} canvas "
                        f"on frame {i} (extent {x0:.1f}, {y0:.1f}, {x1:.1f}, {y1:.1f}).")

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "ScenarioSpec":
        """Build from a JSON document; background defaults come from the
        ``sim`` section of the trackr config."""
        simcfg = config_entry('sim', default={}) or {}
        try:
            targets = tuple(
                TargetSpec(
                    id=str(t.get('id', f'target{i}')),
                    size=(int(t['size'][0]), int(t['size'][1])),
                    path=tuple((float(p[0]), float(p[1])) for p in
                               (t.get('path') or [t['position']])),
                    speed=float(t.get('speed', 0.)),
                    albedo=tuple(float(a) for a in np.atleast_1d(t.get('albedo', 0.9))),
                    texture=float(t.get('texture', 0.3)),
                ) for i, t in enumerate(d.get('targets', [])))
            occluders = tuple(
                OccluderSpec(rect=Rect(*o['rect']),
                             coverage=float(o.get('coverage', 1.)),
                             albedo=float(o.get('albedo', 0.12)))
                for o in d.get('occluders', []))
            jit = d.get('camera_jitter', {}) or {}
            bg = {**simcfg, **(d.get('background', {}) or {})}
            wl = d.get('wavelengths')
            spec = cls(
                width=int(d['width']), height=int(d['height']),
                frames=int(d['frames']), fps=float(d['fps']),
                channels=int(d.get('channels', 1)),
                targets=targets, occluders=occluders,
                jitter=JitterSpec(float(jit.get('max_translation', 0.)),
                                  float(jit.get('max_rotation_deg', 0.))),
                background=BackgroundSpec(float(bg.get('noise_scale', 16.)),
                                          int(bg.get('octaves', 3)),
                                          float(bg.get('contrast', 0.7))),
                seed=int(d.get('seed', 0)),
                frame_noise=float(d.get('frame_noise', 0.)),
                wavelengths=None if wl is None else tuple(float(w) for w in wl),
            )
        except (KeyError, IndexError, TypeError, ValueError) as e:
            if isinstance(e, SpecError):
                raise
            raise SpecError(f"malformed scenario: {e!r}")
        return spec

    def to_dict(self) -> Dict[str, Any]:
        ret: Dict[str, Any] = {
            'width': self.width, 'height': self.height,
            'frames': self.frames, 'fps': self.fps, 'channels': self.channels,
            'seed': self.seed, 'frame_noise': self.frame_noise,
            'targets': [dict(id=t.id, size=list(t.size), path=[list(p) for p in t.path],
                             speed=t.speed, albedo=list(t.albedo), texture=t.texture)
                        for t in self.targets],
            'occluders': [dict(rect=[o.rect.x, o.rect.y, o.rect.w, o.rect.h],
                               coverage=o.coverage, albedo=o.albedo)
                          for o in self.occluders],
            'camera_jitter': dict(max_translation=self.jitter.max_translation,
                                  max_rotation_deg=self.jitter.max_rotation_deg),
            'background': dict(noise_scale=self.background.noise_scale,
                               octaves=self.background.octaves,
                               contrast=self.background.contrast),
        }
        if self.wavelengths is not None:
            ret['wavelengths'] = list(self.wavelengths)
        return ret


def load_scenario(path: str) -> ScenarioSpec:
    try:
        with open(path, 'r') as f:
            d = json.load(f)
    except json.JSONDecodeError as e:
        raise SpecError(f"{path}: not valid JSON ({e})")
    return ScenarioSpec.from_dict(d)


def save_scenario(spec: ScenarioSpec, path: str) -> None:
    with open(path, 'w') as f:
        json.dump(spec.to_dict(), f, indent=2)
