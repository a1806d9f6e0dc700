import json

import numpy as np
import pytest
from scipy import ndimage

from trackr.data.stack import ChannelStack
from trackr.sim.generator import generate
from trackr.sim.scenario import ScenarioSpec


def textured(height, width, channels=1, seed=0, smooth=1.5):
    """Smooth random texture in [0, 1]."""
    rng = np.random.default_rng(seed)
    data = rng.random((channels, height, width))
    data = ndimage.gaussian_filter(data, sigma=(0, smooth, smooth))
    data -= data.min()
    data /= data.max()
    return ChannelStack(data)


def scenario_dict(**kw):
    d = dict(
        width=160, height=128, frames=6, fps=1.0, channels=3, seed=7,
        targets=[dict(id='car', size=[16, 10], path=[[60, 64]], speed=0.,
                      albedo=[0.95, 0.9, 0.85], texture=0.4)],
        background=dict(noise_scale=12., octaves=3),
    )
    d.update(kw)
    return d


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def texture():
    return textured


@pytest.fixture
def scenario():
    return scenario_dict


@pytest.fixture
def static_sequence(tmp_path):
    """A short simulated sequence with a single static target."""
    out = tmp_path / 'seq'
    manifest = generate(ScenarioSpec.from_dict(scenario_dict()), str(out))
    return out, manifest


@pytest.fixture
def write_json(tmp_path):
    def write(name, doc):
        p = tmp_path / name
        p.write_text(json.dumps(doc))
        return str(p)
    return write
