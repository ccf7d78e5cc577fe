"""Acceptance suite: one pass/fail line per criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` or ``python tests/test_acceptance.py``.
Each criterion function returns (ok, detail); the pytest wrappers print the
line and assert ``ok``. Tolerances are fixed here and never loosened to make a
run pass.
"""
import functools
import math
import sys
import time

import numpy as np
import pytest

from _fixtures import gradient_setting, sitl_gradient_error
from _oracles import adjoint_error, project_complex
from artifact import tape as T
from artifact.checkpoint import load_model, save_model
from artifact.diagnostics import (ConvergenceReport, HinLriMethod, convergence_study,
                                  convolution_bench, eta_kernel, factorization_residual,
                                  fit_order, invariant_drift, log_envelope_test,
                                  refinement_scan, tct_breakeven, timing_bench)
from artifact.equations import EquationSpec, mass
from artifact.hinlri_solver import HinLriConfig, hinlri_step
from artifact.integrators import reference_solve, step, step_coeffs
from artifact.latent_corrector import (build_trunk_basis, init_corrector, latent_forward,
                                       lipschitz_bound, prolong, restrict, spectral_normalize,
                                       zero_corrector)
from artifact.rough_data import RoughFieldSpec, ood_profile, sample_rough_field
from artifact.sitl_training import TrainingConfig, make_windows, mini_retrain
from artifact.spectral_core import (DispersionSymbol, Grid1D, SpectralField, antiderivative,
                                    mean_zero_project, propagate_linear, spectral_derivative,
                                    to_physical, to_spectral)
from artifact.workflows import DeskSetup, final_error, ood_riemann_states, train_corrector

KDV = EquationSpec.kdv()


def _cplx(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _smooth_kdv(g):
    return to_spectral(np.cos(g.points) + 0.5 * np.sin(2 * g.points), g)


def _smooth_nls(g):
    return to_spectral(np.exp(1j * g.points) * (1 + 0.5 * np.cos(g.points)), g)


# ---------------------------------------------------------------- 1 spectral exactness

def criterion_1():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = {"round_trip": 0.0, "unitarity": 0.0, "group": 0.0, "antideriv": 0.0, "split_mass": 0.0}
    # grids up to the desk training grid; at N = 256 the KdV phase k^3 t / 6
    # reaches 2.6e5 rad and its last-bit rounding alone exceeds the group-law bound
    for n in (16, 64, 128):
        g = Grid1D(n)
        x = _cplx(rng, n)
        back = to_physical(to_spectral(x, g))
        worst["round_trip"] = max(worst["round_trip"], np.max(np.abs(back - x)) / np.max(np.abs(x)))
        f = SpectralField(_cplx(rng, n), g)
        for sym in (DispersionSymbol.kdv(), DispersionSymbol.schrodinger()):
            for t in (0.37, 1.0, 13.0):
                worst["unitarity"] = max(worst["unitarity"],
                                         abs(propagate_linear(f, sym, t).norm() - f.norm()) / f.norm())
            a = propagate_linear(propagate_linear(f, sym, 0.3), sym, 0.45).values
            b = propagate_linear(f, sym, 0.75).values
            worst["group"] = max(worst["group"], np.max(np.abs(a - b)) / f.norm())
        comp = antiderivative(spectral_derivative(f, 1))
        worst["antideriv"] = max(worst["antideriv"],
                                 np.max(np.abs(comp.values - mean_zero_project(f).values)) / f.norm())
    eq = EquationSpec.cubic_nls(dealias_fraction=1.0)
    for kind in ("lie", "strang"):
        u = sample_rough_field(RoughFieldSpec(1.0, 64, 2, "complex"))
        m0 = mass(eq, u)
        for _ in range(20):
            u = step(kind, eq, u, 0.05)
            worst["split_mass"] = max(worst["split_mass"], abs(mass(eq, u) - m0) / m0)
    limits = {"round_trip": 1e-13, "unitarity": 1e-13, "group": 1e-12, "antideriv": 1e-12,
              "split_mass": 1e-12}
    dt = time.perf_counter() - t0
    ok = all(worst[k] < limits[k] for k in limits) and dt < 60
    return ok, " ".join(f"{k}={v:.1e}" for k, v in worst.items()) + f" ({dt:.1f}s)"


# ---------------------------------------------------------------- 2 algebraic identities

def criterion_2():
    t0 = time.perf_counter()
    zero_ok = True
    for k in range(-100, 101):
        for k1 in range(-100, 101):
            k2 = k - k1
            if k == 0 or k1 == 0 or k2 == 0 or abs(k2) > 100:
                continue
            if factorization_residual(k, k1, 0.0) != 0.0:
                zero_ok = False
    linear_ok = True
    for k, k1 in [(2, 1), (9, 4), (-6, 11), (100, -3), (57, 99)]:
        r1 = factorization_residual(k, k1, 0.01)
        for m in (2, 3, 0.5):
            linear_ok &= math.isclose(factorization_residual(k, k1, 0.01 * m), m * r1, rel_tol=1e-14)
    r = factorization_residual(2, 1, 0.01)
    # the worked value |0.01 (4 - 1 - 1)| / 6 = 3.333...e-3; the quoted 3.33e-3 is
    # that number shown to three digits and sits 3.3e-6 away from it
    expect = abs(0.01 * (4 - 1 - 1)) / 6
    dt = time.perf_counter() - t0
    ok = zero_ok and linear_ok and abs(r - expect) <= 1e-6 and dt < 60
    return ok, (f"zero={zero_ok} linear={linear_ok} r(2,1,0.01)={r:.6e} "
                f"(gap to 3.33e-3: {abs(r - 3.33e-3):.1e}) ({dt:.1f}s)")


# ---------------------------------------------------------------- 3 mismatch kernel

def _gauss_mean(tau, phi, panels=1000, order=10):
    # 1e4-point composite Gauss-Legendre mean of exp(-i phi s) over [0, tau]
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, tau, panels + 1)
    half = 0.5 * np.diff(edges)
    s = (0.5 * (edges[:-1] + edges[1:])[:, None] + half[:, None] * x).ravel()
    ws = (half[:, None] * w).ravel()
    return np.exp(-1j * np.outer(phi, s)) @ ws / tau


def criterion_3():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    tau = rng.uniform(1e-3, 1.0, 200)
    p1 = rng.uniform(-50, 50, 200)
    p2 = rng.uniform(-50, 50, 200)
    q = np.array([_gauss_mean(t, np.array([a + b, a, b])) for t, a, b in zip(tau, p1, p2)])
    quad_err = float(np.max(np.abs(eta_kernel(tau, p1, p2) - (q[:, 0] - q[:, 1] * q[:, 2]))))
    small = []
    for a, b in [(1.0, 1.0), (3.0, -2.0), (-5.0, 0.5)]:
        lead = -1e-6 * a * b / 12
        small.append(abs(eta_kernel(1e-3, a, b).real - lead) / abs(lead))
    m = 10_000
    tau = 10 ** rng.uniform(-4, 0, m)
    p1 = np.sign(rng.standard_normal(m)) * 10 ** rng.uniform(-3, 4, m)
    p2 = np.sign(rng.standard_normal(m)) * 10 ** rng.uniform(-3, 4, m)
    bound = np.minimum.reduce([np.abs(p1 / p2), np.abs(p2 / p1), tau * np.abs(p1), tau * np.abs(p2)])
    ratio = float(np.max(np.abs(eta_kernel(tau, p1, p2)) / bound))
    dt = time.perf_counter() - t0
    ok = quad_err < 1e-10 and max(small) < 0.01 and ratio <= 2.0 and dt < 60
    return ok, (f"quadrature={quad_err:.1e} small_tau_rel={max(small):.1e} "
                f"max|eta|/bound={ratio:.3f} ({dt:.1f}s)")


# ---------------------------------------------------------------- 4 classical orders

def criterion_4():
    t0 = time.perf_counter()
    g = Grid1D(64)
    taus = [2.0 ** -j for j in range(4, 9)]
    orders = {}
    for kind in ("etd1", "res1_kdv", "lawson1"):
        orders[kind] = convergence_study(kind, KDV, 0.0, taus, 64, 1.0,
                                         initial=[_smooth_kdv(g).values]).empirical_order
    cn = EquationSpec.cubic_nls(dealias_fraction=1.0)
    orders["strang"] = convergence_study("strang", cn, 0.0, taus, 64, 1.0,
                                         initial=[_smooth_nls(g).values]).empirical_order
    rough_taus = [2.0 ** -j for j in range(4, 10)]
    rough = convergence_study("res1_kdv", KDV, 0.5, rough_taus, 256, 1.0, seeds=(0, 1, 2))
    # classifier calibration on synthetic curves over the same tau grid
    cal_pow = log_envelope_test(ConvergenceReport.from_errors(
        rough_taus, [t ** 0.5 for t in rough_taus]), 0.5).classification
    cal_log = log_envelope_test(ConvergenceReport.from_errors(
        rough_taus, [t ** 0.5 * math.log(1 / t) for t in rough_taus]), 0.5).classification
    env = log_envelope_test(rough, 0.5)
    dt = time.perf_counter() - t0
    ok = (abs(orders["strang"] - 2.0) <= 0.2
          and all(abs(orders[k] - 1.0) <= 0.2 for k in ("etd1", "res1_kdv", "lawson1"))
          and rough.empirical_order <= 0.7
          and cal_pow == "power_law" and cal_log == "log_envelope"
          and env.classification == "log_envelope" and dt < 600)
    detail = " ".join(f"{k}={v:.3f}" for k, v in orders.items())
    return ok, (f"{detail} rough_res1_kdv={rough.empirical_order:.3f} "
                f"envelope={env.classification} (ratio {env.residual_ratio:.2f}) ({dt:.1f}s)")


# ---------------------------------------------------------------- 5 latent corrector

def _random_latent(K, seed, **kw):
    p = init_corrector(K, zero_last=False, seed=seed, **kw)
    r = np.random.default_rng(seed + 100)
    arr = p.numpy_arrays()
    for name in arr:
        if name.startswith(("enc", "dec", "mix")):
            arr[name] = r.standard_normal(arr[name].shape) * 3.0
    return spectral_normalize(p.with_arrays(arr))


def _hs(c, s):
    k = np.fft.fftfreq(c.shape[-1], 1.0 / c.shape[-1])
    return np.sqrt(np.sum((1 + k ** 2) ** s * np.abs(c) ** 2))


def criterion_5(tmp_dir):
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    n, K = 128, 8
    snaps = [sample_rough_field(RoughFieldSpec(0.5, n, s)).values for s in range(32)]
    basis = build_trunk_basis(snaps, K, positive_frequencies=True)
    params = _random_latent(K, 5)
    path = f"{tmp_dir}/acc5.ckpt"
    save_model(path, basis, params)
    b2, p2, _, _ = load_model(path)
    ortho = max(basis.orthonormality_error(), b2.orthonormality_error())
    round_trip = np.array_equal(b2.columns, basis.columns) and all(
        np.array_equal(p2.arrays[k], v) for k, v in params.arrays.items())
    norms = [np.linalg.norm(m, 2) for m in params.latent_matrices()]
    post = max(norms) <= params.w_max * (1 + 1e-8)
    again = spectral_normalize(params)
    idem = max(float(np.max(np.abs(a - b)) / np.max(np.abs(b)))
               for a, b in zip(again.latent_matrices(), params.latent_matrices()))
    L = lipschitz_bound(params)
    sampled = 0.0
    for _ in range(100):
        a, b = _cplx(rng, K), _cplx(rng, K)
        da, db = _cplx(rng, K), _cplx(rng, K)
        s = 10 ** rng.uniform(-3, 0)
        y1 = latent_forward(params, a, b, 0.01)
        y2 = latent_forward(params, a + s * da, b + s * db, 0.01)
        sampled = max(sampled, np.linalg.norm(y1 - y2)
                      / (s * np.sqrt(np.linalg.norm(da) ** 2 + np.linalg.norm(db) ** 2)))
    bound_ok = True
    kmax = basis.support_kmax()
    tau = 0.01
    for _ in range(50):
        u = sample_rough_field(RoughFieldSpec(rng.uniform(-0.5, 1.5), n,
                                              int(rng.integers(1 << 30)))).values
        r = _cplx(rng, n) * rng.uniform(0.01, 1)
        out = prolong(basis, latent_forward(params, restrict(basis, r), restrict(basis, u), tau))
        inp0 = np.sqrt(_hs(r, 0) ** 2 + _hs(u, 0) ** 2 + tau ** 2)
        inp1 = np.sqrt(_hs(r, 1) ** 2 + _hs(u, 1) ** 2 + tau ** 2)
        bound_ok &= _hs(out, 0) <= L * inp0
        bound_ok &= _hs(out, 1) <= L * inp1
        bound_ok &= _hs(out, 1) <= np.sqrt(1 + kmax ** 2) * L * inp0
    dt = time.perf_counter() - t0
    ok = (ortho < 1e-12 and round_trip and post and idem <= 1e-10 and sampled <= L
          and bound_ok and dt < 120)
    return ok, (f"orthonormality={ortho:.1e} round_trip={round_trip} normalize_post={post} "
                f"idempotence={idem:.1e} sampled_lip={sampled:.3f}<=L={L:.3f} "
                f"H0/H1_bound={bool(bound_ok)} ({dt:.1f}s)")


# ---------------------------------------------------------------- 6 gradients

def _primitive_errors(rng):
    from test_tape import ELEMENTWISE
    errs = {}
    wt = _cplx(rng, 16)
    for name, (fn, kind) in sorted(ELEMENTWISE.items()):
        if kind == "small":
            x, h = _cplx(rng, 16) * 1e-6, 5e-6
        elif kind == "pos":
            x, h = rng.uniform(0.5, 2.0, 16), 1e-4
        elif kind == "r":
            x, h = rng.standard_normal(16), 1e-4
        else:
            x, h = _cplx(rng, 16), 1e-4
        errs[name] = adjoint_error(lambda v: fn(v, wt), x, rng, h=h)
    A, B = _cplx(rng, 3, 5), _cplx(rng, 5, 4)
    w2 = _cplx(rng, 3, 4)
    errs["matmul"] = max(adjoint_error(lambda a: project_complex(T.matmul(a, B), w2), A, rng),
                         adjoint_error(lambda b: project_complex(T.matmul(A, b), w2), B, rng))
    n = 32
    g = Grid1D(n)
    x, w = _cplx(rng, n), _cplx(rng, n)
    errs["propagate_linear"] = adjoint_error(
        lambda c: project_complex(propagate_linear(SpectralField(c, g), DispersionSymbol.kdv(),
                                                   0.3).coeffs, w), x, rng)
    basis = build_trunk_basis([_cplx(rng, n) for _ in range(8)], 4)
    wk = _cplx(rng, 4)
    errs["restrict"] = adjoint_error(lambda c: project_complex(restrict(basis, c), wk), x, rng)
    errs["prolong"] = adjoint_error(lambda z: project_complex(prolong(basis, z), w), _cplx(rng, 4), rng)
    return errs


def criterion_6():
    t0 = time.perf_counter()
    errs = _primitive_errors(np.random.default_rng(6))
    worst_name = max(errs, key=errs.get)
    # whole training loss: N=64, 4 unrolled steps, K=8, 50 random directions,
    # two-point central differences with step 1e-6
    full = sitl_gradient_error(*gradient_setting(n=64, unroll=4, K=8), directions=50, h=1e-6)
    dt = time.perf_counter() - t0
    ok = errs[worst_name] < 1e-8 and full < 1e-6 and dt < 300
    return ok, (f"primitives worst={errs[worst_name]:.1e} ({worst_name}, {len(errs)} checked) "
                f"full_sitl={full:.1e} ({dt:.1f}s)")


# ---------------------------------------------------------------- 7 safe start

def _picard_oracle(eq, kind, c, tau, M):
    k = np.fft.fftfreq(len(c), 1.0 / len(c))
    U = np.exp(-1j * eq.symbol(k) * tau)
    prev = step_coeffs(kind, eq, c, tau)
    for _ in range(M):
        w = prev / U
        prev = U * c + (step_coeffs(kind, eq, w, tau) - U * w)
    return prev


def criterion_7():
    t0 = time.perf_counter()
    n, K, tau = 64, 8, 2.0 ** -6
    snaps = [sample_rough_field(RoughFieldSpec(0.5, n, s)).values for s in range(24)]
    basis = build_trunk_basis(snaps, K, positive_frequencies=True)
    cfg = HinLriConfig()
    worst = 0.0
    for p in (zero_corrector(K), init_corrector(K, seed=4)):
        u = sample_rough_field(RoughFieldSpec(0.5, n, 7))
        ref = u.values
        for _ in range(32):
            u = hinlri_step(u, tau, KDV, basis, p, cfg)
            ref = _picard_oracle(KDV, "res1_kdv", ref, tau, cfg.picard_m)
            worst = max(worst, np.max(np.abs(u.values - ref)) / np.max(np.abs(ref)))
    dt = time.perf_counter() - t0
    return worst <= 1e-14 and dt < 60, f"max_rel_diff_32_steps={worst:.1e} ({dt:.1f}s)"


# ---------------------------------------------------------------- 8 desk training

@functools.lru_cache(maxsize=None)
def desk_model():
    tcfg = TrainingConfig(tau=2.0 ** -8, epochs=30)
    t0 = time.perf_counter()
    model = train_corrector(KDV, DeskSetup(), tcfg, HinLriConfig())
    return model, tcfg, time.perf_counter() - t0


def criterion_8():
    model, tcfg, t_train = desk_model()
    t0 = time.perf_counter()
    hin = HinLriConfig()
    tau = tcfg.tau
    r0, r1 = model.log.rows[0], model.log.rows[-1]
    a = r1["val_loss"] / r0["val_loss"]
    b = r1["defect_ratio"]
    held = model.val_windows.c0[:4]
    eh = np.mean([final_error(KDV, c, 1.0, tau, (model.basis, model.params, hin)) for c in held])
    eb = np.mean([final_error(KDV, c, 1.0, tau, "res1_kdv") for c in held])
    method = HinLriMethod(model.basis, model.params, hin)
    order = convergence_study(method, KDV, 0.5, [2.0 ** -j for j in range(5, 11)], 128, 0.5,
                              initial=held[:2]).empirical_order
    scan = refinement_scan(method, KDV, tau, [64, 128, 256, 512], t_final=1.0, seed=10_000)
    dt = t_train + time.perf_counter() - t0
    parts = {"a": a < 0.5, "b": b < 0.5, "c": eh <= eb / 3, "d": order >= 0.85,
             "e": scan.n_star is None}
    ok = all(parts.values()) and dt < 3600
    return ok, (f"(a) val_ratio={a:.3f} (b) defect_ratio={b:.3f} (c) err_ratio={eh / eb:.3f} "
                f"(d) order={order:.3f} (e) n_star={scan.n_star} "
                f"[{''.join(k for k, v in parts.items() if v) or '-'} pass] ({dt:.0f}s)")


# ---------------------------------------------------------------- 9 structure preservation

def _drift(kind, eq, u0, tau, t_final=1.0):
    u, traj = u0, [u0]
    for _ in range(int(round(t_final / tau))):
        u = step(kind, eq, u, tau)
        traj.append(u)
    return invariant_drift(traj, eq)


def criterion_9():
    t0 = time.perf_counter()
    g = Grid1D(64)
    cn = EquationSpec.cubic_nls()
    traj = reference_solve(cn, _smooth_nls(g), 5.0, 2.0 ** -8, cadence=0.5)
    implicit = invariant_drift(traj, cn).max_mass_drift
    taus = [2.0 ** -j for j in range(4, 9)]
    mass_d = [_drift("res1_nls", cn, _smooth_nls(g), t).max_mass_drift for t in taus]
    mass_slope = fit_order(taus, mass_d)[0]
    cn1 = EquationSpec.cubic_nls(dealias_fraction=1.0)
    ham_d = [_drift("strang", cn1, _smooth_nls(g), t).max_hamiltonian_drift for t in taus]
    ham_slope = fit_order(taus, ham_d)[0]
    dt = time.perf_counter() - t0
    ok = implicit < 1e-10 and abs(mass_slope - 1.0) <= 0.3 and abs(ham_slope - 2.0) <= 0.4 and dt < 900
    return ok, (f"implicit_mass_drift={implicit:.1e} res1_mass_slope={mass_slope:.3f} "
                f"strang_H_slope={ham_slope:.3f} ({dt:.1f}s)")


# ---------------------------------------------------------------- 10 cost accounting

def criterion_10():
    model, tcfg, _ = desk_model()
    t0 = time.perf_counter()
    conv = convolution_bench([64, 128, 256, 512, 1024], repeats=5).summary()
    timing = timing_bench(["res1_kdv", HinLriMethod(model.basis, model.params, HinLriConfig())],
                          KDV, [1024], repeats=100, tau=tcfg.tau).summary()
    ratio = timing["ratio_hinlri_vs_res1_kdv_n1024"]
    tct = (tct_breakeven(3.0, 1.0, 10.0) == 5.0 and tct_breakeven(1.0, 1.0, 5.0) is None
           and tct_breakeven(2.5, 0.5, 0.0) == 0.0 and tct_breakeven(0.5, 1.0, 5.0) is None)
    dt = time.perf_counter() - t0
    ok = (1.7 <= conv["brute_slope"] <= 2.2 and conv["max_abs_diff"] < 1e-10
          and 1.05 <= ratio <= 2.0 and tct and dt < 600)
    return ok, (f"brute_slope={conv['brute_slope']:.2f} path_diff={conv['max_abs_diff']:.1e} "
                f"hinlri/base_n1024={ratio:.2f} tct_exact={tct} ({dt:.1f}s)")


# ---------------------------------------------------------------- 11 out of distribution

def criterion_11():
    model, tcfg, _ = desk_model()
    t0 = time.perf_counter()
    hin = HinLriConfig()
    tau, t_final = tcfg.tau, 0.25
    c = ood_profile("riemann_step", Grid1D(128)).values
    zero_shot = final_error(KDV, c, t_final, tau, (model.basis, model.params, hin))
    base = final_error(KDV, c, t_final, tau, "res1_kdv")
    ood = make_windows(KDV, ood_riemann_states(128, 50, seed=1), tcfg)
    tuned = mini_retrain(model.params, ood, 10, KDV, model.basis, tcfg, hin)
    after = final_error(KDV, c, t_final, tau, (model.basis, tuned, hin))
    dt = time.perf_counter() - t0
    ok = zero_shot <= base and after < zero_shot and dt < 1200
    return ok, f"zero_shot={zero_shot:.6e} base={base:.6e} after_retrain={after:.6e} ({dt:.1f}s)"


# ---------------------------------------------------------------- pytest wrappers

def _report(number, result, capsys=None):
    ok, detail = result
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    if capsys is not None:
        with capsys.disabled():
            print("\n" + line)
    else:
        print(line)
    return ok


def _run(number, fn, capsys, *args):
    with np.errstate(over="ignore", invalid="ignore"):
        result = fn(*args)
    assert _report(number, result, capsys), result[1]


def test_criterion_1(capsys):
    _run(1, criterion_1, capsys)


def test_criterion_2(capsys):
    _run(2, criterion_2, capsys)


def test_criterion_3(capsys):
    _run(3, criterion_3, capsys)


def test_criterion_4(capsys):
    _run(4, criterion_4, capsys)


def test_criterion_5(capsys, tmp_path):
    _run(5, criterion_5, capsys, str(tmp_path))


def test_criterion_6(capsys):
    _run(6, criterion_6, capsys)


def test_criterion_7(capsys):
    _run(7, criterion_7, capsys)


@pytest.mark.slow
def test_criterion_8(capsys):
    _run(8, criterion_8, capsys)


def test_criterion_9(capsys):
    _run(9, criterion_9, capsys)


@pytest.mark.slow
def test_criterion_10(capsys):
    _run(10, criterion_10, capsys)


@pytest.mark.slow
def test_criterion_11(capsys):
    _run(11, criterion_11, capsys)


if __name__ == "__main__":
    import tempfile
    with tempfile.TemporaryDirectory() as tmp, np.errstate(over="ignore", invalid="ignore"):
        results = [_report(i, fn(*args)) for i, fn, args in [
            (1, criterion_1, ()), (2, criterion_2, ()), (3, criterion_3, ()),
            (4, criterion_4, ()), (5, criterion_5, (tmp,)), (6, criterion_6, ()),
            (7, criterion_7, ()), (8, criterion_8, ()), (9, criterion_9, ()),
            (10, criterion_10, ()), (11, criterion_11, ())]]
    print(f"{sum(results)}/{len(results)} criteria pass")
    sys.exit(0 if all(results) else 1)
