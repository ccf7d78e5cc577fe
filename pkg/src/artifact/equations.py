"""KdV, cubic NLS and quadratic NLS in the form u_t = -i omega(D) u + N(u)."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import tape as T
from .errors import ArityError, ConsistencyError
from .spectral_core import (COMPLEX, REAL, DispersionSymbol, SpectralField,
                            _odd_derivative_k, _wavenumbers, dealias_mask)

__all__ = ["EquationKind", "EquationSpec", "nonlinearity", "resonance_phase",
           "mass", "hamiltonian", "nonlinearity_coeffs"]


class EquationKind(str, Enum):
    KDV = "kdv"
    CUBIC_NLS = "cubic_nls"
    QUADRATIC_NLS = "quadratic_nls"


_ALIASES = {"kdv": EquationKind.KDV, "cnls": EquationKind.CUBIC_NLS,
            "cubic_nls": EquationKind.CUBIC_NLS, "qnls": EquationKind.QUADRATIC_NLS,
            "quadratic_nls": EquationKind.QUADRATIC_NLS}


@dataclass(frozen=True)
class EquationSpec:
    """Equation definition.

    ``dealias_fraction`` defaults to 2/3 for the quadratic nonlinearities and
    1/2 for the cubic one; 1.0 disables dealiasing.
    """

    kind: EquationKind
    symbol: DispersionSymbol
    lam: float = 1.0
    dealias_fraction: float | None = None

    def __post_init__(self):
        kind = _ALIASES.get(str(getattr(self.kind, "value", self.kind)))
        if kind is None:
            raise ValueError(f"unknown equation kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if self.dealias_fraction is None:
            frac = 0.5 if kind is EquationKind.CUBIC_NLS else 2.0 / 3.0
            object.__setattr__(self, "dealias_fraction", frac)
        if not 0 < self.dealias_fraction <= 1:
            raise ValueError("dealias_fraction must lie in (0, 1]")
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def reality(self) -> str:
        return REAL if self.kind is EquationKind.KDV else COMPLEX

    @property
    def degree(self) -> int:
        return 3 if self.kind is EquationKind.CUBIC_NLS else 2

    @classmethod
    def kdv(cls, c: float = 1.0 / 6.0, dealias_fraction=None) -> "EquationSpec":
        """u_t + c u_xxx + u u_x = 0 (default c = 1/6)."""
        return cls(EquationKind.KDV, DispersionSymbol.kdv(c), 1.0, dealias_fraction)

    @classmethod
    def cubic_nls(cls, lam: float = 1.0, dealias_fraction=None) -> "EquationSpec":
        return cls(EquationKind.CUBIC_NLS, DispersionSymbol.schrodinger(), lam, dealias_fraction)

    @classmethod
    def quadratic_nls(cls, lam: float = 1.0, dealias_fraction=None) -> "EquationSpec":
        return cls(EquationKind.QUADRATIC_NLS, DispersionSymbol.schrodinger(), lam, dealias_fraction)

    @classmethod
    def from_name(cls, name: str, lam: float = 1.0, **kw) -> "EquationSpec":
        kind = _ALIASES.get(name)
        if kind is None:
            raise ValueError(f"unknown equation {name!r}")
        if kind is EquationKind.KDV:
            return cls.kdv(**kw)
        if kind is EquationKind.CUBIC_NLS:
            return cls.cubic_nls(lam, **kw)
        return cls.quadratic_nls(lam, **kw)

    def mask(self, n: int) -> np.ndarray:
        return dealias_mask(n, float(self.dealias_fraction))

    def kdv_dispersion_constant(self) -> float:
        """c in omega = -c k^3; raises if the symbol is not a pure cubic."""
        co = self.symbol.coefficients
        if len(co) != 4 or any(co[:3]):
            raise ValueError("symbol is not of the form -c k^3")
        return -co[3]


def _check(eq: EquationSpec, u: SpectralField):
    if u.reality != eq.reality:
        raise ConsistencyError(f"{eq.kind.value} expects a {eq.reality}-valued field")


def nonlinearity_coeffs(eq: EquationSpec, c):
    """N(u) on a raw coefficient array (or tape Var), pseudo-spectrally and dealiased."""
    n = T.value_of(c).shape[-1]
    frac = eq.dealias_fraction
    mask = eq.mask(n) if frac < 1 else None
    cm = c * mask if mask is not None else c
    p = T.ifft(cm)
    if eq.kind is EquationKind.KDV:
        p = T.real(p)
        q = T.fft(p * p)
        if mask is not None:
            q = q * mask
        return q * (-0.5j * _odd_derivative_k(n))
    if eq.kind is EquationKind.CUBIC_NLS:
        q = T.fft(T.abs2(p) * p) * (1j * eq.lam)
    else:
        q = T.fft(p * p) * (1j * eq.lam)
    return q * mask if mask is not None else q


def nonlinearity(eq: EquationSpec, u: SpectralField) -> SpectralField:
    """N(u): -u u_x (KdV), i lam |u|^2 u (cubic NLS), i lam u^2 (quadratic NLS)."""
    _check(eq, u)
    return u.with_coeffs(nonlinearity_coeffs(eq, u.coeffs))


def resonance_phase(eq: EquationSpec, k: int, inputs) -> int:
    """Resonance phase in exact integer arithmetic (default symbols).

    kdv: k^3 - k1^3 - k2^3 with k = k1 + k2; cubic_nls: k^2 + k1^2 - k2^2 - k3^2
    with k = -k1 + k2 + k3; quadratic_nls: k^2 - k1^2 - k2^2 with k = k1 + k2.
    """
    ks = [int(x) for x in inputs]
    k = int(k)
    if eq.kind is EquationKind.CUBIC_NLS:
        if len(ks) != 3:
            raise ArityError("cubic_nls phase takes three input wavenumbers")
        k1, k2, k3 = ks
        if -k1 + k2 + k3 != k:
            raise ValueError("convolution constraint k = -k1 + k2 + k3 violated")
        return k * k + k1 * k1 - k2 * k2 - k3 * k3
    if len(ks) != 2:
        raise ArityError(f"{eq.kind.value} phase takes two input wavenumbers")
    k1, k2 = ks
    if k1 + k2 != k:
        raise ValueError("convolution constraint k = k1 + k2 violated")
    if eq.kind is EquationKind.KDV:
        return k ** 3 - k1 ** 3 - k2 ** 3
    return k * k - k1 * k1 - k2 * k2


def mass(eq: EquationSpec, u: SpectralField):
    """sum_k |u_k|^2 (equals sum_j |u_j|^2 by Parseval)."""
    return np.sum(np.abs(u.values) ** 2, axis=-1)


def hamiltonian(eq: EquationSpec, u: SpectralField):
    """Conserved energy functional in grid-sum units (integrals times N/2pi).

    kdv: (c/2) sum k^2 |u_k|^2 - (1/6) sum_j u_j^3, i.e. (1/12) sum k^2|u_k|^2 - ...
    at the default c = 1/6; cubic_nls: sum k^2 |u_k|^2 - (lam/2) sum_j |u_j|^4;
    quadratic_nls: sum k^2 |u_k|^2 - (2 lam/3) Re sum_j u_j^3. The potential
    term is evaluated on the dealiased field.
    """
    c = np.asarray(u.values)
    n = c.shape[-1]
    k = _wavenumbers(n).astype(float)
    cm = c * eq.mask(n) if eq.dealias_fraction < 1 else c
    p = np.fft.ifft(cm, norm="ortho")
    if eq.kind is EquationKind.KDV:
        kin = 0.5 * eq.kdv_dispersion_constant() * np.sum(k ** 2 * np.abs(c) ** 2, axis=-1)
        return kin - np.sum(p.real ** 3, axis=-1) / 6.0
    kin = np.sum(eq.symbol.on_grid(n) * np.abs(c) ** 2, axis=-1)
    if eq.kind is EquationKind.CUBIC_NLS:
        return kin - eq.lam / 2.0 * np.sum(np.abs(p) ** 4, axis=-1)
    return kin - 2.0 * eq.lam / 3.0 * np.real(np.sum(p ** 3, axis=-1))
