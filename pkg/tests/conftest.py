import numpy as np
import pytest

from artifact.spectral_core import Grid1D, SpectralField


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_field(rng, n, reality="complex", decay=0.0):
    k = np.fft.fftfreq(n, 1.0 / n)
    c = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / (1 + np.abs(k)) ** decay
    if reality == "real":
        c = 0.5 * (c + np.conj(np.roll(c[::-1], 1)))
        c[n // 2] = 0.0
    return SpectralField(c, Grid1D(n), reality)


@pytest.fixture
def field_factory(rng):
    return lambda n, reality="complex", decay=0.0: random_field(rng, n, reality, decay)
