import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from artifact.errors import ConsistencyError, DimensionError
from artifact.spectral_core import (DispersionSymbol, Grid1D, SpectralField, antiderivative,
                                    dealias, mean_zero_project, propagate_linear, resample,
                                    spectral_derivative, to_physical, to_spectral)

KDV = DispersionSymbol.kdv()


def test_grid_invariants():
    g = Grid1D(16)
    assert list(np.sort(g.wavenumbers)) == list(range(-8, 8))
    assert np.count_nonzero(g.wavenumbers == 0) == 1
    for bad in (6, 9, 0, -8):
        with pytest.raises(ValueError):
            Grid1D(bad)


def test_constant_samples():
    f = to_spectral(np.ones(8), Grid1D(8))
    assert f.values[0] == pytest.approx(np.sqrt(8), abs=1e-14)
    assert np.max(np.abs(f.values[1:])) < 1e-15


def test_cosine_single_mode():
    g = Grid1D(8)
    f = to_spectral(np.cos(g.points), g)
    mag = np.abs(f.values)
    assert mag[1] == pytest.approx(mag[-1], abs=1e-14)
    assert mag[1] > 1
    others = np.delete(mag, [1, 7])
    assert np.max(others) < 1e-14


@settings(max_examples=30, deadline=None)
@given(p=st.integers(3, 10), seed=st.integers(0, 2 ** 32 - 1))
def test_round_trip(p, seed):
    n = 2 ** p
    r = np.random.default_rng(seed)
    s = r.standard_normal(n) + 1j * r.standard_normal(n)
    back = to_physical(to_spectral(s, Grid1D(n)))
    assert np.max(np.abs(back - s)) <= 1e-13 * np.max(np.abs(s))


def test_real_round_trip_and_length_error():
    g = Grid1D(64)
    s = np.random.default_rng(1).standard_normal(64)
    f = to_spectral(s, g)
    assert f.reality == "real"
    out = to_physical(f)
    assert not np.iscomplexobj(out)
    assert np.max(np.abs(out - s)) < 1e-13
    with pytest.raises(DimensionError):
        to_spectral(np.ones(10), g)


def test_to_physical_examples(field_factory):
    g = Grid1D(16)
    c = np.zeros(16, complex)
    c[0] = 4.0
    assert np.allclose(to_physical(SpectralField(c, g)), 1.0, atol=1e-15)
    assert np.all(to_physical(SpectralField.zeros(g)) == 0)
    f = field_factory(32)
    x = to_physical(f)
    assert abs(np.sum(np.abs(x) ** 2) - np.sum(np.abs(f.values) ** 2)) < 1e-12 * np.sum(np.abs(x) ** 2)


def test_hermitian_violation_detected():
    c = np.zeros(16, complex)
    c[1] = 1.0
    with pytest.raises(ConsistencyError):
        to_physical(SpectralField(c, Grid1D(16), "real"))


def test_propagate_identity_and_phase(field_factory):
    f = field_factory(32)
    assert np.array_equal(propagate_linear(f, KDV, 0.0).values, f.values)
    g = Grid1D(16)
    c = np.zeros(16, complex)
    c[2] = 1.0
    tau = 0.01
    out = propagate_linear(SpectralField(c, g), KDV, tau).values
    assert abs(out[2] - np.exp(1j * tau * 8 / 6)) < 1e-15


@pytest.mark.parametrize("sym", [KDV, DispersionSymbol.schrodinger(), DispersionSymbol((0.3, -1, 2, 0.5))])
def test_propagate_unitary_and_group_law(field_factory, sym):
    f = field_factory(128)
    for t in (1.0, 0.37, 13.0):
        assert abs(propagate_linear(f, sym, t).norm() - f.norm()) < 1e-13 * f.norm()
    a = propagate_linear(propagate_linear(f, sym, 0.3), sym, 0.45).values
    b = propagate_linear(f, sym, 0.75).values
    assert np.max(np.abs(a - b)) < 1e-12 * f.norm()


def test_derivative_examples():
    g = Grid1D(32)
    x = g.points
    d = to_physical(spectral_derivative(to_spectral(np.sin(x), g), 1))
    assert np.max(np.abs(d - np.cos(x))) < 1e-12
    z = spectral_derivative(SpectralField.zeros(g), 2)
    assert np.all(z.values == 0)
    e = to_spectral(np.exp(3j * x), g)
    d2 = spectral_derivative(e, 2)
    assert np.allclose(d2.values, -9 * e.values, atol=1e-12)


def test_odd_derivative_drops_nyquist_on_real_fields(field_factory):
    f = field_factory(16, "real")
    c = np.array(f.values)
    c[8] = 2.0
    d = spectral_derivative(SpectralField(c, f.grid, "real"), 1)
    assert d.values[8] == 0
    to_physical(d)  # still Hermitian


def test_antiderivative(field_factory):
    g = Grid1D(32)
    x = g.points
    a = to_physical(antiderivative(to_spectral(np.cos(x), g)))
    assert np.max(np.abs(a - np.sin(x))) < 1e-12
    const = antiderivative(to_spectral(np.full(32, 3.0), g))
    assert np.max(np.abs(const.values)) == 0.0
    f = mean_zero_project(field_factory(64))
    back = spectral_derivative(antiderivative(f), 1)
    assert np.max(np.abs(back.values - f.values)) < 1e-12 * f.norm()
    h = field_factory(64)
    comp = antiderivative(spectral_derivative(h, 1))
    assert np.max(np.abs(comp.values - mean_zero_project(h).values)) < 1e-12 * h.norm()


def test_mean_zero_project(field_factory):
    g = Grid1D(8)
    assert np.all(mean_zero_project(to_spectral(np.ones(8), g)).values == 0)
    c = np.zeros(8, complex)
    c[0], c[1] = 3.0, 2j
    p = mean_zero_project(SpectralField(c, g)).values
    assert p[0] == 0 and p[1] == 2j
    f = field_factory(32)
    once = mean_zero_project(f)
    assert np.array_equal(mean_zero_project(once).values, once.values)
    assert np.array_equal(mean_zero_project(once).values[1:], f.values[1:])


def test_dealias():
    g = Grid1D(16)
    f = SpectralField(np.ones(16, complex), g)
    out = dealias(f, 2 / 3).values
    k = g.wavenumbers
    assert np.all(out[np.abs(k) > 5] == 0)
    assert np.all(out[np.abs(k) <= 5] == 1)
    assert np.array_equal(dealias(f, 1.0).values, f.values)
    assert np.all(dealias(SpectralField.zeros(g), 0.5).values == 0)


def test_resample_preserves_function(field_factory):
    f = dealias(field_factory(32, "real"), 0.5)
    up = resample(f, 64)
    x = up.grid.points
    assert np.allclose(to_physical(up)[::2], to_physical(f), atol=1e-12)
    down = resample(up, 32)
    assert np.allclose(down.values, f.values, atol=1e-13)
    assert len(x) == 64
