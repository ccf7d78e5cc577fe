"""Periodic 1D Fourier representation on [0, 2pi).

Coefficients are stored in the standard FFT order
``k = 0, 1, ..., N/2-1, -N/2, ..., -1`` under the unitary DFT convention
(``1/sqrt(N)`` in both directions), so Parseval holds without scale factors.
Coefficient arrays may carry leading batch axes; the mode axis is always last.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import tape as T
from .errors import ConsistencyError, DimensionError

__all__ = [
    "Grid1D", "SpectralField", "DispersionSymbol",
    "to_spectral", "to_physical", "propagate_linear", "spectral_derivative",
    "antiderivative", "mean_zero_project", "dealias", "resample",
    "hermitian_part", "hermitian_defect", "REAL", "COMPLEX",
]

REAL = "real"
COMPLEX = "complex"
HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid of ``n_modes`` points on a periodic interval of length 2*pi."""

    n_modes: int
    length: float = field(default=2 * np.pi, init=False)

    def __post_init__(self):
        n = self.n_modes
        if int(n) != n or n < 8 or n % 2:
            raise ValueError(f"n_modes must be an even integer >= 8, got {n}")
        object.__setattr__(self, "n_modes", int(n))

    @property
    def wavenumbers(self) -> np.ndarray:
        """Integer wavenumbers in storage (FFT) order."""
        return _wavenumbers(self.n_modes)

    @property
    def points(self) -> np.ndarray:
        return np.arange(self.n_modes) * (2 * np.pi / self.n_modes)


@lru_cache(maxsize=64)
def _wavenumbers(n):
    k = np.fft.fftfreq(n, 1.0 / n).round().astype(np.int64)
    k.setflags(write=False)
    return k


@lru_cache(maxsize=64)
def _odd_derivative_k(n):
    k = _wavenumbers(n).astype(float)
    k[n // 2] = 0.0
    k.setflags(write=False)
    return k


@lru_cache(maxsize=128)
def dealias_mask(n: int, fraction: float) -> np.ndarray:
    k = _wavenumbers(n)
    m = np.abs(k) <= fraction * (n / 2) + 1e-12
    m.setflags(write=False)
    return m


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a periodic field plus grid metadata.

    ``coeffs`` is a complex array whose last axis has length ``grid.n_modes``;
    it may also be a :class:`~artifact.tape.Var` when recorded on a tape.
    """

    coeffs: object
    grid: Grid1D
    reality: str = COMPLEX

    def __post_init__(self):
        if self.reality not in (REAL, COMPLEX):
            raise ValueError(f"reality must be 'real' or 'complex', got {self.reality!r}")
        c = self.coeffs
        if not T.is_var(c):
            c = np.asarray(c, dtype=complex)
            object.__setattr__(self, "coeffs", c)
        if c.ndim < 1 or c.shape[-1] != self.grid.n_modes:
            raise DimensionError(
                f"coefficient length {c.shape[-1] if c.ndim else 0} != n_modes {self.grid.n_modes}")

    @property
    def n(self) -> int:
        return self.grid.n_modes

    @property
    def k(self) -> np.ndarray:
        return self.grid.wavenumbers

    @property
    def values(self) -> np.ndarray:
        """Coefficient array with any tape wrapper removed."""
        return T.value_of(self.coeffs)

    def with_coeffs(self, coeffs) -> "SpectralField":
        return SpectralField(coeffs, self.grid, self.reality)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2)))

    def copy(self) -> "SpectralField":
        return self.with_coeffs(np.array(self.values))

    @classmethod
    def zeros(cls, grid: Grid1D, reality: str = COMPLEX) -> "SpectralField":
        return cls(np.zeros(grid.n_modes, complex), grid, reality)


@dataclass(frozen=True)
class DispersionSymbol:
    """Real polynomial symbol ``omega(k) = sum_j coefficients[j] * k**j``."""

    coefficients: tuple

    def __post_init__(self):
        c = tuple(float(x) for x in self.coefficients)
        if not all(np.isfinite(c)):
            raise ValueError("dispersion coefficients must be finite reals")
        while len(c) > 1 and c[-1] == 0.0:
            c = c[:-1]
        object.__setattr__(self, "coefficients", c)

    @property
    def order(self) -> float:
        """Growth exponent alpha with omega(k) ~ |k|^alpha."""
        return float(len(self.coefficients) - 1)

    def __call__(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        out = np.zeros_like(k)
        for c in reversed(self.coefficients):
            out = out * k + c
        return out

    def on_grid(self, n: int) -> np.ndarray:
        return _symbol_on_grid(self, n)

    @classmethod
    def kdv(cls, c: float = 1.0 / 6.0) -> "DispersionSymbol":
        """omega(k) = -c k^3, the symbol of u_t + c u_xxx = 0."""
        return cls((0.0, 0.0, 0.0, -c))

    @classmethod
    def schrodinger(cls) -> "DispersionSymbol":
        """omega(k) = k^2."""
        return cls((0.0, 0.0, 1.0))


@lru_cache(maxsize=256)
def _symbol_on_grid(sym, n):
    w = sym(_wavenumbers(n))
    w.setflags(write=False)
    return w


@lru_cache(maxsize=512)
def _phase(sym, n, t):
    p = np.exp(-1j * t * sym.on_grid(n))
    p.setflags(write=False)
    return p


def hermitian_defect(coeffs) -> float:
    """Relative violation of c_{-k} = conj(c_k)."""
    c = np.asarray(T.value_of(coeffs))
    flipped = np.conj(np.roll(c[..., ::-1], 1, axis=-1))
    scale = max(np.max(np.abs(c)) if c.size else 0.0, 1e-300)
    return float(np.max(np.abs(c - flipped)) / scale) if c.size else 0.0


def hermitian_part(coeffs):
    """Projection onto Hermitian-symmetric coefficient arrays (real fields)."""
    c = coeffs
    flipped = T.conj(_reflect(c))
    return 0.5 * (c + flipped)


def _reflect(c):
    n = T.value_of(c).shape[-1]
    idx = (-np.arange(n)) % n
    if T.is_var(c):
        return c[..., idx]
    return c[..., idx]


def to_spectral(samples, grid: Grid1D, reality: str | None = None) -> SpectralField:
    """Unitary forward DFT of grid samples."""
    s = np.asarray(samples)
    if s.ndim < 1 or s.shape[-1] != grid.n_modes:
        raise DimensionError(f"samples length {s.shape[-1] if s.ndim else 0} != n_modes {grid.n_modes}")
    if reality is None:
        reality = COMPLEX if np.iscomplexobj(s) else REAL
    c = np.fft.fft(s, norm="ortho")
    if reality == REAL:
        c = hermitian_part(c)
    return SpectralField(c, grid, reality)


def to_physical(field: SpectralField):
    """Unitary inverse DFT; real fields return real samples."""
    out = T.ifft(field.coeffs)
    if field.reality == REAL:
        v = T.value_of(out)
        scale = max(float(np.max(np.abs(v))), 1e-300) if v.size else 1.0
        if v.size and np.max(np.abs(v.imag)) > HERMITIAN_TOL * max(scale, 1.0):
            raise ConsistencyError("real-valued field violates Hermitian symmetry")
        return T.real(out)
    return out


def propagate_linear(field: SpectralField, sym: DispersionSymbol, t: float) -> SpectralField:
    """Apply exp(-i t omega(k)) to every coefficient."""
    if t == 0:
        return field
    return field.with_coeffs(field.coeffs * _phase(sym, field.n, float(t)))


def spectral_derivative(field: SpectralField, order: int = 1) -> SpectralField:
    """Multiply by (ik)^order; the Nyquist mode is dropped for odd orders on real fields."""
    if order < 1 or int(order) != order:
        raise ValueError("order must be a positive integer")
    n = field.n
    if order % 2 and field.reality == REAL:
        k = _odd_derivative_k(n)
    else:
        k = _wavenumbers(n).astype(float)
    return field.with_coeffs(field.coeffs * (1j * k) ** order)


def antiderivative(field: SpectralField) -> SpectralField:
    """Multiply by 1/(ik) for k != 0 and zero the mean."""
    return field.with_coeffs(field.coeffs * _inverse_ik(field.n, field.reality == REAL))


@lru_cache(maxsize=64)
def _inverse_ik(n, drop_nyquist):
    k = _wavenumbers(n).astype(float)
    out = np.zeros(n, complex)
    nz = k != 0
    out[nz] = 1.0 / (1j * k[nz])
    if drop_nyquist:
        out[n // 2] = 0.0
    out.setflags(write=False)
    return out


@lru_cache(maxsize=64)
def _mean_zero_mask(n):
    m = np.ones(n)
    m[0] = 0.0
    m.setflags(write=False)
    return m


def mean_zero_project(field: SpectralField) -> SpectralField:
    """Zero the k=0 coefficient."""
    return field.with_coeffs(field.coeffs * _mean_zero_mask(field.n))


def dealias(field: SpectralField, fraction: float) -> SpectralField:
    """Zero all coefficients with |k| > fraction * N/2."""
    if not 0 < fraction <= 1:
        raise ValueError("fraction must lie in (0, 1]")
    if fraction == 1.0:
        return field
    return field.with_coeffs(field.coeffs * dealias_mask(field.n, float(fraction)))


def resample(field: SpectralField, n_modes: int) -> SpectralField:
    """Same function on another grid: pad or truncate by wavenumber.

    Unitary coefficients scale with sqrt(N) for a fixed function, so the kept
    modes are multiplied by sqrt(n_new / n_old). On truncation the new Nyquist
    mode is dropped to keep real fields Hermitian.
    """
    new = Grid1D(n_modes)
    c = np.asarray(field.values)
    n_old = field.n
    k_old = _wavenumbers(n_old)
    k_new = _wavenumbers(n_modes)
    out = np.zeros(c.shape[:-1] + (n_modes,), complex)
    lim = min(n_old, n_modes) // 2
    keep_old = np.abs(k_old) < lim
    pos_new = {int(k): i for i, k in enumerate(k_new)}
    idx_new = np.array([pos_new[int(k)] for k in k_old[keep_old]])
    out[..., idx_new] = c[..., keep_old]
    out *= np.sqrt(n_modes / n_old)
    return SpectralField(out, new, field.reality)
