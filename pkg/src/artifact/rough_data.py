"""Random H^gamma initial data and out-of-distribution profiles."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral_core import COMPLEX, REAL, Grid1D, SpectralField, to_spectral

__all__ = ["RoughFieldSpec", "sample_rough_field", "ood_profile", "standard_normals"]


@dataclass(frozen=True)
class RoughFieldSpec:
    gamma: float
    n_modes: int
    seed: int
    reality: str = REAL

    def __post_init__(self):
        if not np.isfinite(self.gamma):
            raise ValueError("gamma must be finite")
        if self.reality not in (REAL, COMPLEX):
            raise ValueError("reality must be 'real' or 'complex'")


def standard_normals(seed: int, keys: np.ndarray, count: int = 2) -> np.ndarray:
    """``count`` standard normals per key, independent of how many keys are asked for.

    Each key gets its own Philox counter block, so a draw for wavenumber k
    does not depend on the grid size.
    """
    seed = int(seed) & (2 ** 64 - 1)
    out = np.empty((len(keys), count))
    for i, key in enumerate(keys):
        bg = np.random.Philox(key=np.array([seed, int(key) & (2 ** 64 - 1)], dtype=np.uint64))
        out[i] = np.random.Generator(bg).standard_normal(count)
    return out


def _encode(k: int) -> int:
    # non-negative integer key for a signed wavenumber
    return 2 * k if k >= 0 else -2 * k - 1


def sample_rough_field(spec: RoughFieldSpec) -> SpectralField:
    """Coefficients |k|^{-(gamma+1/2)} xi_k with xi_k standard complex Gaussian.

    The coefficients are used directly as unitary DFT coefficients. k=0 is zero;
    real fields draw k>0 only and reflect (the Nyquist mode stays zero).
    """
    grid = Grid1D(spec.n_modes)
    n = grid.n_modes
    k = grid.wavenumbers
    c = np.zeros(n, complex)
    amp = lambda kk: np.abs(kk) ** (-(spec.gamma + 0.5))
    if spec.reality == REAL:
        pos = np.arange(1, n // 2)
        z = standard_normals(spec.seed, [_encode(x) for x in pos])
        xi = (z[:, 0] + 1j * z[:, 1]) / np.sqrt(2.0)
        c[pos] = amp(pos) * xi
        c[n - pos] = np.conj(c[pos])
    else:
        nz = np.nonzero(k)[0]
        nz = nz[k[nz] != -n // 2]
        z = standard_normals(spec.seed, [_encode(int(x)) for x in k[nz]])
        xi = (z[:, 0] + 1j * z[:, 1]) / np.sqrt(2.0)
        c[nz] = amp(k[nz]) * xi
    return SpectralField(c, grid, spec.reality)


def ood_profile(kind: str, grid: Grid1D, width: float = 0.1, reality: str = REAL) -> SpectralField:
    """riemann_step: +1 on [0, pi), -1 on [pi, 2pi); delta_pulse: periodic Gaussian
    of standard deviation ``width`` centred at pi with unit L1 mass. Both mean-zero."""
    x = grid.points
    if kind == "riemann_step":
        s = np.where(x < np.pi, 1.0, -1.0)
    elif kind == "delta_pulse":
        if not width > 0:
            raise ValueError("width must be positive")
        # periodic Gaussian via its Fourier series: exact for any width, unit mass
        k = np.arange(1, grid.n_modes // 2)
        s = (1 + 2 * np.sum(np.exp(-0.5 * (width * k[None, :]) ** 2)
                            * np.cos(k[None, :] * (x[:, None] - np.pi)), axis=1)) / (2 * np.pi)
    else:
        raise ValueError(f"unknown OOD profile {kind!r}")
    f = to_spectral(s.astype(complex) if reality == COMPLEX else s, grid, reality)
    c = np.array(f.values)
    c[0] = 0.0
    return SpectralField(c, grid, reality)
