import csv

import numpy as np
import pytest

from _fixtures import gradient_setting, sitl_gradient_error
from artifact.equations import EquationSpec
from artifact.errors import DivergenceError
from artifact.hinlri_solver import HinLriConfig, hinlri_step_coeffs
from artifact.latent_corrector import (build_trunk_basis, init_corrector, lipschitz_report,
                                       spectral_normalize, zero_corrector)
from artifact.sitl_training import (AdamW, BourgainNormConfig, TrainingConfig, TrainingLog,
                                    bourgain_loss, cosine_lr, defect_ratio, loss_and_grad,
                                    make_windows, mini_retrain, reconstruct_trajectory,
                                    sample_initial_states, sitl_loss, train)
from artifact.spectral_core import DispersionSymbol, Grid1D, propagate_linear, to_spectral

KDV = EquationSpec.kdv()
N, K = 32, 4
TAU = 2.0 ** -6


@pytest.fixture(scope="module")
def small():
    cfg = TrainingConfig(unroll_steps=4, batch=3, epochs=2, tau=TAU, defect_samples=4,
                         defect_substeps=8)
    init = sample_initial_states(KDV, 0.5, N, range(8))
    basis = build_trunk_basis(list(sample_initial_states(KDV, 0.5, N, range(50, 70))), K,
                              positive_frequencies=True)
    win = make_windows(KDV, init[:6], cfg, ref_substeps=4, seeds=range(6))
    val = make_windows(KDV, init[6:], cfg, ref_substeps=4, seeds=range(6, 8))
    params = init_corrector(K, hidden=16, zero_last=False, seed=2)
    return cfg, basis, win, val, params


def same_params(a, b):
    return all(np.array_equal(a.arrays[k], b.arrays[k]) for k in a.arrays)


# ---------------------------------------------------------------- reconstruction

def test_reconstruction_examples(rng):
    sym = KDV.symbol
    states = [rng.standard_normal(16) + 1j * rng.standard_normal(16) for _ in range(4)]
    out = reconstruct_trajectory(states, 0.1, sym, [0.0, 0.1, 0.2])
    for o, s in zip(out, states):
        assert np.array_equal(o, s)
    # midpoint against a separate evaluation of the interpolation formula
    k = np.fft.fftfreq(16, 1 / 16)
    U = lambda t: np.exp(1j * k ** 3 / 6 * t)
    t = 0.15
    expect = U(0.05) * states[1] + 0.5 * (states[2] - U(0.1) * states[1])
    got = reconstruct_trajectory(states, 0.1, sym, [t])[0]
    assert np.max(np.abs(got - expect)) < 1e-14
    # exact linear states: reconstruction is the exact flow everywhere
    g = Grid1D(32)
    u0 = to_spectral(np.cos(g.points) + 0.3 * np.sin(3 * g.points), g)
    lin = [propagate_linear(u0, sym, j * 0.1) for j in range(5)]
    for tq in np.linspace(0, 0.39, 17):
        r = reconstruct_trajectory(lin, 0.1, sym, [tq])[0]
        assert np.max(np.abs(r.values - propagate_linear(u0, sym, tq).values)) < 1e-12
    with pytest.raises(ValueError):
        reconstruct_trajectory(states, 0.1, sym, [0.3])


# ---------------------------------------------------------------- Bourgain loss

def test_bourgain_zero_and_shape(rng):
    cfg = BourgainNormConfig(0.5, 8)
    x = rng.standard_normal((8, 16)) + 0j
    assert bourgain_loss(x, x, cfg, -0.5, KDV.symbol) == 0.0
    with pytest.raises(ValueError):
        bourgain_loss(x, x[:, :8], cfg, 0.0, KDV.symbol)
    with pytest.raises(ValueError):
        BourgainNormConfig(0.5, 3)


@pytest.mark.parametrize("s", [-0.5, 0.0, 1.0])
def test_bourgain_single_bin(rng, s):
    T_, M, n = 0.75, 8, 16
    cfg = BourgainNormConfig(T_, M)
    kidx, j = 3, 2
    c = 0.4 - 0.9j
    t = np.arange(M) * T_ / M
    sig = 2 * np.pi * j / T_
    err = np.zeros((M, n), complex)
    err[:, kidx] = c * np.exp(-1j * sig * t)
    truth = rng.standard_normal((M, n)) + 1j * rng.standard_normal((M, n))
    a = T_ * abs(c)
    w = -kidx ** 3 / 6
    expect = (2 * np.pi / T_) * (1 + kidx ** 2) ** s * np.sqrt(1 + (sig - w) ** 2) * a ** 2
    got = bourgain_loss(truth + err, truth, cfg, s, KDV.symbol)
    assert got == pytest.approx(expect, rel=1e-12)


def test_bourgain_degenerate_reduction(rng):
    # time-constant error, s = 0, omega = 0: only sigma = 0 carries energy and
    # the weight is 1, so the loss is 2 pi T ||e||^2
    T_, M = 0.5, 4
    cfg = BourgainNormConfig(T_, M)
    e = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    zero = DispersionSymbol((0.0,))
    got = bourgain_loss(np.tile(e, (M, 1)), np.zeros((M, 16)), cfg, 0.0, zero)
    assert got == pytest.approx(2 * np.pi * T_ * np.linalg.norm(e) ** 2, rel=1e-13)


# ---------------------------------------------------------------- training loop

def test_zero_epochs_returns_initial(small):
    cfg, basis, win, val, params = small
    z = TrainingConfig(**{**cfg.__dict__, "epochs": 0})
    out, tlog = train(win, z, KDV, basis, params, validation=val)
    assert same_params(out, params)
    assert len(tlog.rows) == 1


def test_lr_zero_leaves_params(small):
    cfg, basis, win, val, params = small
    z = TrainingConfig(**{**cfg.__dict__, "lr": 0.0})
    out, tlog = train(win, z, KDV, basis, params, validation=val)
    assert same_params(out, params)
    vl = tlog.column("val_loss")
    assert all(v == vl[0] for v in vl)
    assert same_params(mini_retrain(params, win, 3, KDV, basis, z), params)


def test_training_constraint_and_frozen_basis(small, tmp_path):
    cfg, basis, win, val, params = small
    cols = basis.columns.copy()
    seen = []

    def hook(epoch, p, tlog, opt):
        seen.append(max(np.linalg.norm(m, 2) for m in p.latent_matrices()))
    hot = TrainingConfig(**{**cfg.__dict__, "lr": 3e-2})
    out, tlog = train(win, hot, KDV, basis, params, validation=val, on_epoch=hook,
                      log_path=tmp_path / "log.csv")
    assert not same_params(out, params)
    assert max(seen) <= params.w_max * (1 + 1e-8)
    assert np.array_equal(basis.columns, cols)
    for steps in (1, 2, 3):
        p = mini_retrain(params, win, steps, KDV, basis, hot)
        assert max(np.linalg.norm(m, 2) for m in p.latent_matrices()) <= p.w_max * (1 + 1e-8)
    rows = list(csv.DictReader(open(tmp_path / "log.csv")))
    assert list(rows[0]) == list(TrainingLog.COLUMNS)
    assert len(rows) == 3 and float(rows[2]["lipschitz_bound"]) == pytest.approx(tlog.rows[2]["lipschitz_bound"])


def test_gradients_cover_parameters_only(small):
    cfg, basis, win, val, params = small
    _, grads = loss_and_grad(params, win.subset([0, 1]), KDV, basis, cfg, HinLriConfig())
    assert set(grads) == set(params.arrays)
    assert any(np.any(g != 0) for g in grads.values())


def test_full_loss_gradient_fourth_order():
    # a step of 1e-4 with the fourth-order stencil keeps truncation and rounding
    # both below 1e-6; at step 1e-6 rounding in (prediction - truth) dominates
    setting = gradient_setting()
    assert sitl_gradient_error(*setting, directions=20, h=1e-4, fourth_order=True) < 1e-6


def test_batch_permutation_invariance(small):
    cfg, basis, win, val, params = small
    hin = HinLriConfig()
    a = float(sitl_loss(params, win, KDV, basis, cfg, hin))
    b = float(sitl_loss(params, win.subset([4, 2, 0, 5, 1, 3]), KDV, basis, cfg, hin))
    assert b == pytest.approx(a, rel=1e-13)


def test_non_finite_loss_aborts(small):
    cfg, basis, win, val, params = small
    bad = win.subset(np.arange(6))
    bad.c0[0, 1] = np.nan
    with pytest.raises(DivergenceError), np.errstate(invalid="ignore"):
        train(bad, cfg, KDV, basis, params)


def test_mini_retrain_determinism(small):
    cfg, basis, win, val, params = small
    a = mini_retrain(params, win, 2, KDV, basis, cfg, seed=4)
    b = mini_retrain(params, win, 2, KDV, basis, cfg, seed=4)
    assert same_params(a, b)
    with pytest.raises(ValueError):
        mini_retrain(params, win, 0, KDV, basis, cfg)


# ---------------------------------------------------------------- defect ratio

def test_defect_ratio_examples(small):
    cfg, basis, win, val, params = small
    states = win.c0
    assert defect_ratio(zero_corrector(K), basis, KDV, states, TAU) == 1.0
    assert defect_ratio(init_corrector(K, hidden=16, seed=5), basis, KDV, states, TAU) == 1.0
    # oracle fixture: targets that are exactly the correction the corrector adds
    _, corr = hinlri_step_coeffs(states, TAU, KDV, basis, params, HinLriConfig(),
                                 return_correction=True)
    assert defect_ratio(params, basis, KDV, states, TAU, targets=corr) == 0.0
    with pytest.raises(ValueError):
        defect_ratio(params, basis, KDV, states[:0], TAU)


# ---------------------------------------------------------------- optimiser pieces

def test_adamw_first_step_closed_form(rng):
    p = {"enc0": rng.standard_normal((3, 2)), "ln_g": rng.standard_normal(3)}
    g = {"enc0": rng.standard_normal((3, 2)), "ln_g": rng.standard_normal(3)}
    opt = AdamW(lr=0.1, weight_decay=0.01, eps=1e-8)
    out = opt.step(p, g)
    for name, decays in (("enc0", True), ("ln_g", False)):
        expect = p[name] - 0.1 * g[name] / (np.abs(g[name]) + 1e-8)
        if decays:
            expect = expect - 0.1 * 0.01 * p[name]
        assert np.allclose(out[name], expect, rtol=0, atol=1e-14)


def test_cosine_lr():
    assert cosine_lr(1e-3, 0.0, 0, 10) == 1e-3
    assert cosine_lr(1e-3, 1e-5, 10, 10) == pytest.approx(1e-5)
    assert cosine_lr(1e-3, 0.0, 5, 10) == pytest.approx(5e-4)
    assert cosine_lr(1e-3, 0.0, 3, 0) == 1e-3


def test_training_config_invariants():
    with pytest.raises(ValueError):
        TrainingConfig(b=0.4)
    assert TrainingConfig().sobolev_index(KDV) == -0.5
    assert TrainingConfig().sobolev_index(EquationSpec.cubic_nls()) == 0.0
    d = TrainingConfig()
    assert (d.unroll_steps, d.batch, d.lr, d.weight_decay) == (16, 8, 1e-3, 1e-4)


def test_lipschitz_report_logged(small):
    cfg, basis, win, val, params = small
    _, tlog = train(win, TrainingConfig(**{**cfg.__dict__, "epochs": 0}), KDV, basis, params)
    assert tlog.rows[0]["lipschitz_bound"] == pytest.approx(lipschitz_report(params)["corrected"])
    assert spectral_normalize(params) is not None
