import numpy as np
import pytest
from hypothesis import settings

from fieldsense.basis import compute_svd, truncate
from fieldsense.fielddata import GridGeometry, snr_noise_std, synth_field

settings.register_profile("default", max_examples=50, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def grid8():
    return GridGeometry.full(8, 8)


@pytest.fixture
def rank3(grid8):
    """Noiseless rank-3 synthetic set with a nonzero per-cell mean."""
    ts = synth_field(grid8, 3, 50, 0.0, seed=1)
    offset = np.linspace(10.0, 20.0, ts.m)
    return ts.with_data(ts.data + offset[:, None])


@pytest.fixture
def noisy5():
    """12x12 grid, 5 modes, 20 dB SNR."""
    geometry = GridGeometry.full(12, 12)
    clean = synth_field(geometry, 5, 100, 0.0, seed=3)
    return synth_field(geometry, 5, 100, snr_noise_std(clean.data, 20), seed=3)


def make_basis(ts, r):
    return truncate(compute_svd(ts), r)
