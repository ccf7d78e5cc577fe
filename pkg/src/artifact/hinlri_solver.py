"""Hybrid step: Picard-refined explicit LRI plus a latent neural correction.

One step from u^n:

    u^(0) = U(tau) u^n + J(u^n)                      (the base LRI step)
    v^(m) = U(tau) u^n + J(F(u^(m-1))),  m = 1..M
    r^(m) = v^(m) - u^(m-1)
    u^(m) = v^(m) + tau e^(m)   if m % kappa == 0, else v^(m)

where J(w) = step(base, w) - U(tau) w is the nonlinear increment of the base
scheme and the correction is

    e = s P G(R r / s, R u^n / s, tau),   s = lambda(u^n) * sqrt(N / N_basis).

The frame map F is ``U(-tau)`` by default ("twisted"): the iterate is pulled
back to the start of the step before the increment is re-evaluated, which keeps
the refinement consistent with the Duhamel integral. ``frame="literal"``
evaluates J at u^(m-1) itself. The sqrt(N / N_basis) factor is a grid
normalisation: the same function gives the same latent inputs on every grid.
For real equations the prolonged correction is projected onto Hermitian
coefficients.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import tape as T
from .equations import EquationSpec
from .errors import ConfigError, DivergenceError
from .integrators import EXPLICIT_LRI_KINDS, IntegratorKind, _U, check_compatible, increment_coeffs
from .latent_corrector import (CorrectorParams, TrunkBasis, _latent_apply, _scale_from_coeffs,
                               lipschitz_bound)
from .spectral_core import REAL, SpectralField, hermitian_part

__all__ = ["HinLriConfig", "hinlri_step", "hinlri_step_coeffs", "solve", "check_stability",
           "solve_coeffs"]


@dataclass(frozen=True)
class HinLriConfig:
    picard_m: int = 2
    trigger_kappa: int = 2
    base_kind: IntegratorKind = IntegratorKind.RES1_KDV
    frame: str = "twisted"

    def __post_init__(self):
        if self.picard_m < 1 or self.trigger_kappa < 1:
            raise ConfigError("picard_m and trigger_kappa must be positive")
        if self.trigger_kappa > self.picard_m:
            raise ConfigError("trigger_kappa must not exceed picard_m")
        kind = IntegratorKind(getattr(self.base_kind, "value", self.base_kind))
        if kind not in EXPLICIT_LRI_KINDS:
            raise ConfigError(f"base_kind must be an explicit LRI, got {kind.value}")
        object.__setattr__(self, "base_kind", kind)
        if self.frame not in ("twisted", "literal"):
            raise ConfigError("frame must be 'twisted' or 'literal'")

    def trigger_steps(self) -> list[int]:
        return [m for m in range(1, self.picard_m + 1) if m % self.trigger_kappa == 0]


def check_stability(tau: float, params: CorrectorParams) -> float:
    """Return the corrected Lipschitz bound; raise unless tau * L < 1."""
    L = lipschitz_bound(params, corrected=True)
    if not tau * L < 1:
        raise ConfigError(f"stability condition tau*L < 1 violated (tau={tau}, L={L:.4g})")
    return L


def _correction(c_n, r, tau, eq, basis, params, reality):
    n = T.value_of(c_n).shape[-1]
    phi = basis.at_grid(n)
    g = math.sqrt(n / basis.n_modes)
    lam = _scale_from_coeffs(params, c_n, basis.n_modes)
    s = lam * g
    r_c = T.matmul(r, np.conj(phi)) / s
    u_c = T.matmul(c_n, np.conj(phi)) / s
    e_c = _latent_apply(params, r_c, u_c, tau)
    e = T.matmul(e_c, phi.T) * s
    if reality == REAL:
        e = hermitian_part(e)
    return e


def hinlri_step_coeffs(c_n, tau: float, eq: EquationSpec, basis: TrunkBasis,
                       params: CorrectorParams, cfg: HinLriConfig, return_correction: bool = False):
    """Array-level step (batch axes allowed; tape variables allowed)."""
    n = T.value_of(c_n).shape[-1]
    Ut = _U(eq, n, tau)
    back = np.conj(Ut)
    lin = c_n * Ut
    kind = cfg.base_kind
    prev = lin + increment_coeffs(kind, eq, c_n, tau)
    corr = None
    for m in range(1, cfg.picard_m + 1):
        arg = prev * back if cfg.frame == "twisted" else prev
        v = lin + increment_coeffs(kind, eq, arg, tau)
        if m % cfg.trigger_kappa == 0:
            e = _correction(c_n, v - prev, tau, eq, basis, params, eq.reality)
            corr = e * tau
            prev = v + corr
        else:
            prev = v
    if return_correction:
        return prev, corr
    return prev


def hinlri_step(u_n: SpectralField, tau: float, eq: EquationSpec, basis: TrunkBasis,
                params: CorrectorParams, cfg: HinLriConfig = HinLriConfig(),
                check: bool = True) -> SpectralField:
    """One HIN-LRI step; refuses to run unless tau * L < 1."""
    check_compatible(cfg.base_kind, eq)
    if check:
        check_stability(tau, params)
    return u_n.with_coeffs(hinlri_step_coeffs(u_n.coeffs, tau, eq, basis, params, cfg))


def _n_steps(t_final, tau):
    m = t_final / tau
    r = int(round(m))
    if abs(m - r) > 1e-9 * max(1.0, m):
        raise ConfigError("t_final / tau must be an integer")
    return r


def solve_coeffs(c0, t_final: float, tau: float, eq: EquationSpec, basis: TrunkBasis,
                 params: CorrectorParams, cfg: HinLriConfig = HinLriConfig(), check: bool = True):
    """Trajectory of coefficient arrays [c^0, ..., c^L]."""
    check_compatible(cfg.base_kind, eq)
    steps = _n_steps(t_final, tau)
    if check and steps:
        check_stability(tau, params)
    traj = [c0]
    c = c0
    for i in range(steps):
        c = hinlri_step_coeffs(c, tau, eq, basis, params, cfg)
        if not np.all(np.isfinite(T.value_of(c))):
            raise DivergenceError(f"non-finite state at step {i + 1}", step_index=i + 1)
        traj.append(c)
    return traj


def solve(u0: SpectralField, t_final: float, tau: float, eq: EquationSpec, basis: TrunkBasis,
          params: CorrectorParams, cfg: HinLriConfig = HinLriConfig(),
          check: bool = True) -> list[SpectralField]:
    """[u^0, ..., u^L] with L = t_final / tau, each step by hinlri_step."""
    return [u0.with_coeffs(c) for c in
            solve_coeffs(u0.coeffs, t_final, tau, eq, basis, params, cfg, check)]
