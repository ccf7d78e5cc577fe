"""Verification experiments and the evaluation harness.

Every study returns a small result object with ``rows()`` (one dict per
experiment cell, stable key order) and ``summary()`` (fitted statistics),
which :func:`artifact.cli_io.emit_results` writes as CSV and JSON.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .equations import EquationSpec, hamiltonian, mass
from .errors import ArtifactError, DivergenceError
from .hinlri_solver import HinLriConfig, solve_coeffs
from .integrators import IntegratorKind, reference_solve, step_coeffs
from .kernels import direct_product_coeffs
from .rough_data import RoughFieldSpec, sample_rough_field
from .spectral_core import Grid1D, SpectralField, dealias_mask, resample, _wavenumbers

__all__ = ["ConvergenceReport", "fit_order", "convergence_study", "log_envelope_test",
           "EnvelopeResult", "RefinementResult", "refinement_scan", "cfl_threshold_formula",
           "eta_kernel", "factorization_residual", "DriftReport", "invariant_drift",
           "error_spectrum", "spectrum_slope", "catalan_term_count", "convolution_bench",
           "timing_bench", "tct_breakeven", "HinLriMethod", "EULER_LINEAR"]

EULER_LINEAR = "euler_linear"


@dataclass(frozen=True)
class HinLriMethod:
    """Bundle that lets the studies run the hybrid solver like an integrator kind."""

    basis: object
    params: object
    cfg: HinLriConfig = HinLriConfig()
    check: bool = True

    name = "hinlri"


def _method_name(method) -> str:
    if isinstance(method, HinLriMethod):
        return "hinlri"
    return getattr(method, "value", str(method))


def _advance(method, eq, c0, t_final, tau):
    steps = int(round(t_final / tau))
    if abs(steps * tau - t_final) > 1e-9 * max(1.0, t_final):
        raise ValueError("t_final / tau must be an integer")
    if isinstance(method, HinLriMethod):
        return solve_coeffs(c0, t_final, tau, eq, method.basis, method.params, method.cfg,
                            method.check)[-1]
    c = c0
    if method == EULER_LINEAR:
        fac = 1.0 - 1j * tau * eq.symbol.on_grid(c0.shape[-1])
        for i in range(steps):
            c = c * fac
        return c
    for i in range(steps):
        c = step_coeffs(method, eq, c, tau)
        if not np.all(np.isfinite(c)):
            raise DivergenceError(f"non-finite state at step {i + 1}", step_index=i + 1)
    return c


# ---------------------------------------------------------------- convergence

def fit_order(taus, errors):
    """Least-squares slope of log(error) against log(tau), and the RMS residual."""
    x = np.log(np.asarray(taus, float))
    y = np.log(np.asarray(errors, float))
    A = np.stack([x, np.ones_like(x)], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - A @ coef
    return float(coef[0]), float(np.sqrt(np.mean(res ** 2)))


@dataclass
class ConvergenceReport:
    tau_values: list
    errors: list
    empirical_order: float
    fit_residual: float
    diverged: list = field(default_factory=list)
    method: str = ""

    def __post_init__(self):
        if len(self.tau_values) != len(self.errors):
            raise ValueError("tau_values and errors differ in length")
        if any(b >= a for a, b in zip(self.tau_values, self.tau_values[1:])):
            raise ValueError("tau_values must be strictly decreasing")
        if not self.diverged:
            self.diverged = [False] * len(self.errors)

    @classmethod
    def from_errors(cls, taus, errors, method="", diverged=None):
        taus = [float(t) for t in taus]
        errors = [float(e) for e in errors]
        diverged = list(diverged) if diverged is not None else [not np.isfinite(e) for e in errors]
        keep = [i for i, d in enumerate(diverged) if not d and np.isfinite(errors[i]) and errors[i] > 0]
        if len(keep) >= 2:
            order, res = fit_order([taus[i] for i in keep], [errors[i] for i in keep])
        else:
            order, res = float("nan"), float("nan")
        return cls(taus, errors, order, res, diverged, method)

    def rows(self):
        return [{"method": self.method, "tau": t, "error": e, "diverged": d}
                for t, e, d in zip(self.tau_values, self.errors, self.diverged)]

    def summary(self):
        return {"method": self.method, "empirical_order": self.empirical_order,
                "fit_residual": self.fit_residual, "n_diverged": int(sum(self.diverged))}


def _initial(eq, gamma, n, seed):
    return sample_rough_field(RoughFieldSpec(gamma, n, int(seed), eq.reality))


def convergence_study(method, eq: EquationSpec, gamma: float, taus, n: int, t_final: float,
                      seeds=(0,), ref_divisor: int = 16, initial=None) -> ConvergenceReport:
    """Mean L2 error at ``t_final`` over seeds for each tau, with the fitted order.

    The reference is implicit_lri at min(taus) / ref_divisor. ``initial`` may
    supply coefficient arrays instead of sampled rough data. Diverged runs are
    flagged and left out of the fit.
    """
    taus = [float(t) for t in taus]
    if len(taus) < 3:
        raise ValueError("a convergence study needs at least 3 tau values")
    taus = sorted(taus, reverse=True)
    tau_ref = taus[-1] / ref_divisor
    inits = list(initial) if initial is not None else [_initial(eq, gamma, n, s).values for s in seeds]
    refs = []
    for c0 in inits:
        u0 = SpectralField(np.asarray(c0), Grid1D(len(c0)), eq.reality)
        refs.append(reference_solve(eq, u0, t_final, tau_ref)[-1].values)
    errors, diverged = [], []
    for tau in taus:
        errs = []
        bad = False
        for c0, ref in zip(inits, refs):
            try:
                with np.errstate(over="ignore", invalid="ignore"):
                    c = _advance(method, eq, np.asarray(c0), t_final, tau)
                e = float(np.linalg.norm(c - ref))
                if not np.isfinite(e):
                    bad = True
            except DivergenceError:
                e, bad = float("inf"), True
            errs.append(e)
        errors.append(float(np.mean(errs)) if not bad else float("inf"))
        diverged.append(bad)
    return ConvergenceReport.from_errors(taus, errors, _method_name(method), diverged)


@dataclass(frozen=True)
class EnvelopeResult:
    classification: str
    residual_ratio: float
    power_residual: float
    log_residual: float


def log_envelope_test(report: ConvergenceReport, gamma: float, rtol: float = 1e-9) -> EnvelopeResult:
    """Compare fits C tau^gamma and C tau^gamma ln(1/tau) in log space.

    Each model has one free constant; its residual is the spread of
    log(error) - log(model shape). The smaller residual wins; ties go to the
    power law. ``residual_ratio`` is log_residual / power_residual.
    """
    t = np.asarray(report.tau_values, float)
    e = np.asarray(report.errors, float)
    ok = np.isfinite(e) & (e > 0) & ~np.asarray(report.diverged, bool)
    if ok.sum() < 2:
        raise ValueError("need at least two finite errors")
    t, e = t[ok], e[ok]
    y = np.log(e)
    rp = y - gamma * np.log(t)
    rl = rp - np.log(np.log(1.0 / t))
    sp = float(np.sqrt(np.mean((rp - rp.mean()) ** 2)))
    sl = float(np.sqrt(np.mean((rl - rl.mean()) ** 2)))
    ratio = sl / sp if sp > 0 else (math.inf if sl > 0 else 1.0)
    if sl < sp * (1 - rtol) and not math.isclose(sl, sp, rel_tol=rtol, abs_tol=1e-15):
        cls = "log_envelope"
    else:
        cls = "power_law"
    return EnvelopeResult(cls, ratio, sp, sl)


# ---------------------------------------------------------------- refinement

def cfl_threshold_formula(tau: float) -> float:
    """(2 pi / tau)^(1/3), the threshold formula quoted for RES1 refinement."""
    return (2 * np.pi / tau) ** (1.0 / 3.0)


@dataclass
class RefinementResult:
    grids: list
    errors: list
    n_star: int | None
    analytic_threshold: float | None = None
    formula_threshold: float | None = None
    method: str = ""

    def rows(self):
        return [{"method": self.method, "n": n, "error": e} for n, e in zip(self.grids, self.errors)]

    def summary(self):
        return {"method": self.method, "n_star": self.n_star,
                "analytic_threshold": self.analytic_threshold,
                "formula_threshold": self.formula_threshold}


def detect_divergence(grids, errors, factor: float = 10.0):
    """Smallest N whose error exceeds ``factor`` x the minimum over smaller N."""
    best = math.inf
    for n, e in zip(grids, errors):
        if best < math.inf and (not np.isfinite(e) or e > factor * best):
            return int(n)
        if np.isfinite(e):
            best = min(best, e)
    return None


def refinement_scan(method, eq: EquationSpec, tau: float, grids, gamma: float = 0.5,
                    seed: int = 0, t_final: float = 1.0, base_grid: int | None = None,
                    ref_divisor: int = 16) -> RefinementResult:
    """Error at ``t_final`` on each grid for a fixed tau, and the divergence threshold N*.

    The initial datum is sampled on ``base_grid`` (default max(grids)) and
    resampled to each grid, so every N sees the same function truncated to
    its resolvable modes. The reference is
    implicit_lri at tau / ref_divisor on the same grid (the exact linear flow
    for ``EULER_LINEAR``).
    """
    grids = sorted(int(n) for n in grids)
    if len(grids) < 3:
        raise ValueError("a refinement scan needs at least 3 grid sizes")
    base = _initial(eq, gamma, base_grid or grids[-1], seed)
    errors = []
    for n in grids:
        u0 = resample(base, n)
        if method == EULER_LINEAR:
            ref = u0.values * np.exp(-1j * eq.symbol.on_grid(n) * t_final)
        else:
            ref = reference_solve(eq, u0, t_final, tau / ref_divisor)[-1].values
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                c = _advance(method, eq, u0.values, t_final, tau)
            e = float(np.linalg.norm(c - ref))
        except DivergenceError:
            e = float("inf")
        errors.append(e if np.isfinite(e) else float("inf"))
    analytic = None
    if method == EULER_LINEAR and eq.symbol.order > 0:
        # tau * max|omega(k)| = 1 with k_max = N/2
        lead = abs(eq.symbol.coefficients[-1])
        analytic = 2.0 * (1.0 / (tau * lead)) ** (1.0 / eq.symbol.order)
    return RefinementResult(grids, errors, detect_divergence(grids, errors), analytic,
                            cfl_threshold_formula(tau), _method_name(method))


# ---------------------------------------------------------------- kernels and identities

def _mean_phase(tau, phi):
    # M_tau(e^{-i s phi}) = (e^{-i tau phi} - 1) / (-i tau phi), series-guarded
    z = -1j * tau * np.asarray(phi, dtype=float)
    small = np.abs(z) < 1e-4
    zs = np.where(small, 1.0, z)
    out = np.where(small, 1 + z / 2 + z * z / 6 + z ** 3 / 24, np.expm1(zs) / zs)
    return out


def eta_kernel(tau, phi1, phi2):
    """M(phi1 + phi2) - M(phi1) M(phi2) with M the step average of a pure phase."""
    if not np.all(np.asarray(tau) > 0):
        raise ValueError("tau must be positive")
    p1 = np.asarray(phi1, float)
    p2 = np.asarray(phi2, float)
    out = _mean_phase(tau, p1 + p2) - _mean_phase(tau, p1) * _mean_phase(tau, p2)
    return out[()] if out.ndim == 0 else out


def factorization_residual(k: int, k1: int, eps: float) -> float:
    """|w(k) - w(k1) - w(k2) - 3 k k1 k2| / |3 k k1 k2| for w(k) = k^3 + eps k^2."""
    k, k1 = int(k), int(k1)
    k2 = k - k1
    den = 3 * k * k1 * k2
    if den == 0:
        raise ValueError("k, k1 and k - k1 must all be nonzero")
    cubic = k ** 3 - k1 ** 3 - k2 ** 3 - den          # exactly 0 in integer arithmetic
    quad = k * k - k1 * k1 - k2 * k2
    return abs(cubic + eps * quad) / abs(den)


def catalan_term_count(p: int) -> int:
    """Catalan number C_{p+1}: 2, 5, 14, 42, 132 for p = 1..5."""
    if int(p) != p or p < 1:
        raise ValueError("p must be a positive integer")
    n = int(p) + 1
    return math.comb(2 * n, n) // (n + 1)


# ---------------------------------------------------------------- invariants and spectra

@dataclass
class DriftReport:
    times: np.ndarray
    mass_drift: np.ndarray
    hamiltonian_drift: np.ndarray
    hamiltonian_absolute: bool = False

    @property
    def max_mass_drift(self) -> float:
        return float(np.max(self.mass_drift))

    @property
    def max_hamiltonian_drift(self) -> float:
        return float(np.max(self.hamiltonian_drift))

    def rows(self):
        return [{"t": float(t), "mass_drift": float(m), "hamiltonian_drift": float(h)}
                for t, m, h in zip(self.times, self.mass_drift, self.hamiltonian_drift)]

    def summary(self):
        return {"max_mass_drift": self.max_mass_drift,
                "max_hamiltonian_drift": self.max_hamiltonian_drift,
                "hamiltonian_absolute": self.hamiltonian_absolute}


def invariant_drift(trajectory, eq: EquationSpec, dt: float = 1.0) -> DriftReport:
    """|I(t) - I(0)| / |I(0)| for mass and Hamiltonian along a trajectory.

    When H(0) = 0 the absolute Hamiltonian drift is reported and flagged.
    """
    traj = list(trajectory)
    if not traj:
        raise ValueError("trajectory is empty")
    m = np.array([mass(eq, u) for u in traj])
    h = np.array([hamiltonian(eq, u) for u in traj])
    md = np.abs(m - m[0]) / (abs(m[0]) if m[0] != 0 else 1.0)
    absolute = h[0] == 0
    hd = np.abs(h - h[0]) / (1.0 if absolute else abs(h[0]))
    return DriftReport(np.arange(len(traj)) * dt, md, hd, bool(absolute))


def error_spectrum(u_num: SpectralField, u_ref: SpectralField) -> np.ndarray:
    """sqrt(sum_{|k| = b} |u_num_k - u_ref_k|^2) for b = 0..N/2."""
    if u_num.grid != u_ref.grid:
        raise ValueError("fields live on different grids")
    n = u_num.n
    k = np.abs(_wavenumbers(n))
    d = np.abs(np.asarray(u_num.values) - np.asarray(u_ref.values)) ** 2
    return np.sqrt(np.bincount(k, weights=d, minlength=n // 2 + 1))


def spectrum_slope(spectrum, kmin: int = 1, kmax: int | None = None) -> float:
    """Log-log slope of a binned spectrum over kmin..kmax (nonzero bins only)."""
    s = np.asarray(spectrum, float)
    kmax = len(s) - 1 if kmax is None else kmax
    b = np.arange(kmin, kmax + 1)
    b = b[s[b] > 0]
    slope, _ = fit_order(b, s[b])
    return slope


# ---------------------------------------------------------------- cost accounting

def _median_time(fn, repeats, warmup=2):
    for _ in range(warmup):
        fn()
    ts = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        ts.append(time.perf_counter() - t0)
    q1, med, q3 = np.percentile(ts, [25, 50, 75])
    return med, q3 - q1


@dataclass
class BenchResult:
    rows_: list
    slopes: dict

    def rows(self):
        return list(self.rows_)

    def summary(self):
        return dict(self.slopes)


def convolution_bench(grids, repeats: int = 7, seed: int = 0, fit_min: int = 64) -> BenchResult:
    """FFT pseudo-spectral product vs brute-force circular convolution.

    Both paths return dealiased coefficients of u*v; ``max_abs_diff`` compares
    them. Slopes are fitted over N >= ``fit_min``.
    """
    rows = []
    rng = np.random.default_rng(seed)
    for n in sorted(int(x) for x in grids):
        if n > 4096:
            raise ValueError("brute-force convolution is capped at N = 4096")
        a = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        mask = dealias_mask(n, 2.0 / 3.0)
        am, bm = a * mask, b * mask

        def fft_path():
            p = np.fft.ifft(am, norm="ortho") * np.fft.ifft(bm, norm="ortho")
            return np.fft.fft(p, norm="ortho") * mask

        def brute_path():
            return direct_product_coeffs(am, bm) * mask

        diff = float(np.max(np.abs(fft_path() - brute_path())))
        reps = max(3, repeats if n <= 1024 else 3)
        tf, qf = _median_time(fft_path, reps)
        tb, qb = _median_time(brute_path, reps)
        rows.append({"n": n, "fft_ms": tf * 1e3, "fft_iqr_ms": qf * 1e3, "brute_ms": tb * 1e3,
                     "brute_iqr_ms": qb * 1e3, "max_abs_diff": diff})
    sel = [r for r in rows if r["n"] >= fit_min] or rows
    slopes = {}
    if len(sel) >= 2:
        slopes["fft_slope"] = fit_order([r["n"] for r in sel], [r["fft_ms"] for r in sel])[0]
        slopes["brute_slope"] = fit_order([r["n"] for r in sel], [r["brute_ms"] for r in sel])[0]
    slopes["max_abs_diff"] = max(r["max_abs_diff"] for r in rows) if rows else 0.0
    return BenchResult(rows, slopes)


def timing_bench(methods, eq: EquationSpec, grids, repeats: int = 100, warmup: int = 5,
                 gamma: float = 0.5, tau: float = 2.0 ** -8, seed: int = 0) -> BenchResult:
    """Median wall-clock ms per step (with IQR) for each (method, N).

    ``methods`` holds integrator kinds and/or HinLriMethod bundles. The summary
    lists, per N, each method's ratio to the first method.
    """
    rows = []
    for n in sorted(int(x) for x in grids):
        c0 = _initial(eq, gamma, n, seed).values
        for m in methods:
            if isinstance(m, HinLriMethod):
                from .hinlri_solver import hinlri_step_coeffs

                def fn(m=m):
                    return hinlri_step_coeffs(c0, tau, eq, m.basis, m.params, m.cfg)
            else:
                def fn(m=m):
                    return step_coeffs(m, eq, c0, tau)
            med, iqr = _median_time(fn, repeats, warmup)
            rows.append({"method": _method_name(m), "n": n, "ms_per_step": med * 1e3,
                         "iqr_ms": iqr * 1e3})
    summary = {}
    if rows:
        first = _method_name(methods[0])
        for n in sorted({r["n"] for r in rows}):
            base = next(r["ms_per_step"] for r in rows if r["n"] == n and r["method"] == first)
            for r in rows:
                if r["n"] == n and r["method"] != first:
                    summary[f"ratio_{r['method']}_vs_{first}_n{n}"] = r["ms_per_step"] / base
    return BenchResult(rows, summary)


def tct_breakeven(c_num: float, c_hyb: float, c_td: float):
    """Break-even workload W* = c_td / (c_num - c_hyb); None when the hybrid is not cheaper."""
    if c_num <= c_hyb:
        return None
    return c_td / (c_num - c_hyb)
