"""One-step maps: splitting, exponential and resonance-based integrators.

Every method integrates u_t = -i omega u + N(u). Explicit kinds are written
against the tape-agnostic operations of :mod:`artifact.tape`, so they can be
differentiated; the implicit kind and the reference solver work on plain
arrays only.

Splitting kinds (lie, strang) use the exact pointwise nonlinear flow, which
cannot be combined with a spectral cut-off. They therefore solve the
un-dealiased semi-discretisation; compare them against an ``EquationSpec``
built with ``dealias_fraction=1.0``.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from . import tape as T
from .equations import EquationKind, EquationSpec, nonlinearity_coeffs
from .errors import ConfigError, ConsistencyError, DivergenceError
from .spectral_core import SpectralField, _inverse_ik, _phase, _wavenumbers

__all__ = ["IntegratorKind", "PicardConfig", "phi1", "step", "step_coeffs",
           "increment_coeffs", "implicit_midpoint_coeffs", "reference_solve",
           "reference_step_coeffs", "measure_defect", "register_plugin",
           "EXPLICIT_LRI_KINDS", "DEFAULT_DEFECT_SUBSTEPS"]

phi1 = T.phi1
DEFAULT_DEFECT_SUBSTEPS = 64


class IntegratorKind(str, Enum):
    LIE = "lie"
    STRANG = "strang"
    ETD1 = "etd1"
    LAWSON1 = "lawson1"
    RES1_KDV = "res1_kdv"
    RES1_NLS = "res1_nls"
    IMPLICIT_LRI = "implicit_lri"
    ELRI1 = "elri1"
    ELRI2 = "elri2"
    ULRI = "ulri"
    BS22 = "bs22"
    FILTERED = "filtered"


PLUGIN_KINDS = {IntegratorKind.ELRI1, IntegratorKind.ELRI2, IntegratorKind.ULRI,
                IntegratorKind.BS22, IntegratorKind.FILTERED}
EXPLICIT_LRI_KINDS = {IntegratorKind.RES1_KDV, IntegratorKind.RES1_NLS}

_COMPAT = {
    IntegratorKind.LIE: {EquationKind.CUBIC_NLS, EquationKind.QUADRATIC_NLS},
    IntegratorKind.STRANG: {EquationKind.CUBIC_NLS, EquationKind.QUADRATIC_NLS},
    IntegratorKind.RES1_KDV: {EquationKind.KDV},
    IntegratorKind.RES1_NLS: {EquationKind.CUBIC_NLS},
}

_PLUGINS: dict[IntegratorKind, Callable] = {}


def register_plugin(kind, fn: Callable) -> None:
    """Install ``fn(eq, coeffs, tau) -> coeffs`` as the step of a plug-in kind."""
    kind = IntegratorKind(kind)
    if kind not in PLUGIN_KINDS:
        raise ValueError(f"{kind.value} is a built-in kind, not a plug-in slot")
    _PLUGINS[kind] = fn


@dataclass(frozen=True)
class PicardConfig:
    max_iterations: int = 200
    tolerance: float = 1e-13

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")


def _kind(kind) -> IntegratorKind:
    try:
        return IntegratorKind(getattr(kind, "value", kind))
    except ValueError:
        raise ConfigError(f"unknown integrator kind {kind!r}") from None


def check_compatible(kind, eq: EquationSpec) -> IntegratorKind:
    kind = _kind(kind)
    allowed = _COMPAT.get(kind)
    if allowed is not None and eq.kind not in allowed:
        raise ConfigError(f"integrator {kind.value} does not apply to {eq.kind.value}")
    return kind


# ---------------------------------------------------------------- building blocks

def _U(eq, n, t):
    return _phase(eq.symbol, n, float(t))


def _res1_kdv(eq, c, tau):
    # u+ = U(tau)u + (1/6c)[U(tau) P((d^-1 u)^2) - P((U(tau) d^-1 u)^2)]
    n = T.value_of(c).shape[-1]
    mask = eq.mask(n)
    inv = _inverse_ik(n, True) * mask
    Ut = _U(eq, n, tau)
    coef = 1.0 / (6.0 * eq.kdv_dispersion_constant())
    w = c * inv
    a = T.real(T.ifft(w))
    b = T.real(T.ifft(w * Ut))
    keep = mask.astype(float)
    keep[0] = 0.0
    sa = T.fft(a * a) * (keep * Ut * coef)
    sb = T.fft(b * b) * (keep * coef)
    return c * Ut + sa - sb


def _res1_nls(eq, c, tau):
    # u+ = U(tau)[u + i tau lam P(u^2 phi1(2 i tau k^2) conj(u))]
    n = T.value_of(c).shape[-1]
    mask = eq.mask(n)
    k2 = _wavenumbers(n).astype(float) ** 2
    filt = T.phi1(2j * tau * k2)
    Ut = _U(eq, n, tau)
    p = T.ifft(c * mask)
    cb = T.ifft(T.fft(T.conj(p)) * filt)
    inc = T.fft(p * p * cb) * (1j * tau * eq.lam * mask * Ut)
    return c * Ut + inc


def _etd1(eq, c, tau):
    n = T.value_of(c).shape[-1]
    Ut = _U(eq, n, tau)
    w = eq.symbol.on_grid(n)
    return c * Ut + nonlinearity_coeffs(eq, c) * (tau * T.phi1(-1j * tau * w))


def _lawson1(eq, c, tau):
    n = T.value_of(c).shape[-1]
    Ut = _U(eq, n, tau)
    return (c + nonlinearity_coeffs(eq, c) * tau) * Ut


def _nonlinear_flow(eq, c, t):
    # exact pointwise flow of u_t = N(u), no dealiasing
    p = T.ifft(c)
    if eq.kind is EquationKind.CUBIC_NLS:
        pv = T.value_of(p)
        rot = np.exp(1j * eq.lam * t * (pv.real ** 2 + pv.imag ** 2))
        if T.is_var(p):
            raise NotImplementedError("splitting steps are not differentiable")
        return T.fft(rot * pv)
    if eq.kind is EquationKind.QUADRATIC_NLS:
        pv = T.value_of(p)
        return T.fft(pv / (1.0 - 1j * eq.lam * t * pv))
    raise ConfigError("splitting applies to NLS equations only")


def _lie(eq, c, tau):
    n = T.value_of(c).shape[-1]
    return _nonlinear_flow(eq, c * _U(eq, n, tau), tau)


def _strang(eq, c, tau):
    n = T.value_of(c).shape[-1]
    h = _U(eq, n, tau / 2)
    return _nonlinear_flow(eq, c * h, tau) * h


_EXPLICIT = {
    IntegratorKind.LIE: _lie,
    IntegratorKind.STRANG: _strang,
    IntegratorKind.ETD1: _etd1,
    IntegratorKind.LAWSON1: _lawson1,
    IntegratorKind.RES1_KDV: _res1_kdv,
    IntegratorKind.RES1_NLS: _res1_nls,
}


def implicit_midpoint_coeffs(eq: EquationSpec, c, tau: float,
                             picard: PicardConfig = PicardConfig()):
    """Symmetric midpoint rule on the twisted variable v = U(-t)u, by Picard iteration.

    Untwisted, the fixed point is x = U(tau)u + tau U(tau/2) N((U(tau/2)u + U(-tau/2)x)/2).
    Works on batches; convergence is required for every batch member.
    """
    c = np.asarray(c)
    n = c.shape[-1]
    Ut = _U(eq, n, tau)
    Uh = _U(eq, n, tau / 2)
    Uhc = np.conj(Uh)
    lin = c * Ut
    half = 0.5 * (c * Uh)
    x = lin + tau * Uh * nonlinearity_coeffs(eq, c * Uh)
    res = np.inf
    for _ in range(picard.max_iterations):
        xn = lin + tau * Uh * nonlinearity_coeffs(eq, half + 0.5 * (x * Uhc))
        diff = np.sqrt(np.sum(np.abs(xn - x) ** 2, axis=-1))
        scale = np.maximum(np.sqrt(np.sum(np.abs(xn) ** 2, axis=-1)), 1e-300)
        res = float(np.max(diff / scale))
        x = xn
        if not np.isfinite(res):
            break
        if res <= picard.tolerance:
            return x
    raise DivergenceError(
        f"Picard iteration did not converge in {picard.max_iterations} iterations "
        f"(relative residual {res:.3e})", residual=res)


def step_coeffs(kind, eq: EquationSpec, c, tau: float, picard: PicardConfig | None = None):
    """One step on a raw coefficient array (leading batch axes allowed)."""
    kind = check_compatible(kind, eq)
    if kind is IntegratorKind.IMPLICIT_LRI:
        return implicit_midpoint_coeffs(eq, T.value_of(c), tau, picard or PicardConfig())
    if kind in PLUGIN_KINDS:
        fn = _PLUGINS.get(kind)
        if fn is None:
            raise ConfigError(f"plug-in integrator {kind.value} is not registered")
        return fn(eq, c, tau)
    return _EXPLICIT[kind](eq, c, tau)


def increment_coeffs(kind, eq: EquationSpec, c, tau: float):
    """Nonlinear increment J(u) = step(u) - U(tau) u of an explicit kind."""
    n = T.value_of(c).shape[-1]
    return step_coeffs(kind, eq, c, tau) - c * _U(eq, n, tau)


def step(kind, eq: EquationSpec, u: SpectralField, tau: float,
         picard: PicardConfig | None = None) -> SpectralField:
    """Advance ``u`` by one step of size ``tau``."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    if u.reality != eq.reality:
        raise ConsistencyError(f"{eq.kind.value} expects a {eq.reality}-valued field")
    return u.with_coeffs(step_coeffs(kind, eq, u.coeffs, tau, picard))


def _substeps(total: float, h: float) -> int:
    m = total / h
    r = int(round(m))
    if r < 1 or abs(m - r) > 1e-9 * max(1.0, m):
        raise ValueError(f"{h} does not divide {total}")
    return r


def reference_step_coeffs(eq: EquationSpec, c, tau: float, substeps: int = DEFAULT_DEFECT_SUBSTEPS,
                          picard: PicardConfig = PicardConfig()):
    h = tau / substeps
    x = np.asarray(c)
    for _ in range(substeps):
        x = implicit_midpoint_coeffs(eq, x, h, picard)
    return x


def reference_solve(eq: EquationSpec, u0: SpectralField, t_final: float, tau_ref: float,
                    cadence: float | None = None,
                    picard: PicardConfig = PicardConfig()) -> list[SpectralField]:
    """implicit_lri trajectory at step ``tau_ref``, sampled every ``cadence`` (default t_final)."""
    if t_final == 0:
        return [u0]
    cadence = t_final if cadence is None else cadence
    per = _substeps(cadence, tau_ref)
    outs = _substeps(t_final, cadence)
    traj = [u0]
    x = np.asarray(u0.values)
    for _ in range(outs):
        for _ in range(per):
            x = implicit_midpoint_coeffs(eq, x, tau_ref, picard)
        traj.append(u0.with_coeffs(x))
    return traj


def measure_defect(eq: EquationSpec, base, u: SpectralField, tau: float,
                   tau_ref: float | None = None) -> SpectralField:
    """reference_step(u, tau) - step(base, u, tau), the reference using tau/tau_ref substeps
    (64 when tau_ref is omitted)."""
    sub = DEFAULT_DEFECT_SUBSTEPS if tau_ref is None else _substeps(tau, tau_ref)
    ref = reference_step_coeffs(eq, u.values, tau, sub)
    return u.with_coeffs(ref - step_coeffs(base, eq, u.values, tau))
