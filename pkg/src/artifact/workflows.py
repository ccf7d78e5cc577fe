"""End-to-end pipelines shared by the CLI and the acceptance suite."""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field

import numpy as np

from .checkpoint import save_model
from .equations import EquationSpec
from .hinlri_solver import HinLriConfig, solve_coeffs
from .integrators import reference_solve, step_coeffs
from .latent_corrector import CorrectorParams, TrunkBasis, build_trunk_basis, init_corrector
from .rough_data import ood_profile
from .sitl_training import (TrainingConfig, TrainingLog, TrainingWindow, _defect_targets,
                            make_windows, sample_initial_states, train)
from .spectral_core import Grid1D, SpectralField, _wavenumbers, to_spectral

__all__ = ["DeskSetup", "TrainedModel", "defect_basis", "train_corrector", "ood_riemann_states",
           "final_error", "VALIDATION_SEED_OFFSET"]

log = logging.getLogger(__name__)
VALIDATION_SEED_OFFSET = 10_000


@dataclass(frozen=True)
class DeskSetup:
    """Sizes of a training run (desk-scale defaults)."""

    n_modes: int = 128
    latent_dim: int = 16
    gamma: float = 0.5
    n_train: int = 64
    n_val: int = 16
    w_max: float = 1.34
    enc_layers: int = 4
    dec_layers: int = 4
    basis_weight: float = 2.0
    snapshot_stride: int = 4
    init_seed: int = 0


@dataclass
class TrainedModel:
    basis: TrunkBasis
    params: CorrectorParams
    log: TrainingLog
    train_windows: TrainingWindow
    val_windows: TrainingWindow
    best_params: CorrectorParams | None = None
    extras: dict = field(default_factory=dict)


def defect_basis(eq: EquationSpec, states: np.ndarray, tau: float, k: int, hin: HinLriConfig,
                 weight: float = 2.0, substeps: int = 64) -> TrunkBasis:
    """Trunk basis from defect snapshots of the hybrid step's physical part.

    Snapshots are ref(u) - step_zero_corrector(u) for the given states,
    restricted to positive frequencies and weighted by |k|^weight before the
    SVD; the returned columns are orthonormal in the plain coefficient inner
    product.
    """
    n = states.shape[-1]
    placeholder = build_trunk_basis(states, k, positive_frequencies=True)
    d = _defect_targets(eq, states, tau, hin, substeps, placeholder)
    w = np.abs(_wavenumbers(n)).astype(float) ** weight
    return build_trunk_basis(d * w, k, positive_frequencies=True)


def train_corrector(eq: EquationSpec, setup: DeskSetup, tcfg: TrainingConfig,
                    hin: HinLriConfig = HinLriConfig(), checkpoint_dir=None, config: dict | None = None,
                    windows=None) -> TrainedModel:
    """Sample data, build the basis, train, and checkpoint every epoch plus the best one."""
    if windows is None:
        tr = sample_initial_states(eq, setup.gamma, setup.n_modes, range(setup.n_train))
        va = sample_initial_states(eq, setup.gamma, setup.n_modes,
                                   range(VALIDATION_SEED_OFFSET, VALIDATION_SEED_OFFSET + setup.n_val))
        wtr = make_windows(eq, tr, tcfg, seeds=range(setup.n_train))
        wva = make_windows(eq, va, tcfg)
    else:
        wtr, wva = windows
    snaps = np.swapaxes(wtr.truth[:, :, ::setup.snapshot_stride], 1, 2).reshape(-1, wtr.n)
    basis = defect_basis(eq, snaps, tcfg.tau, setup.latent_dim, hin, setup.basis_weight)
    params = init_corrector(setup.latent_dim, enc_layers=setup.enc_layers,
                            dec_layers=setup.dec_layers, w_max=setup.w_max, seed=setup.init_seed)
    best = {"val": np.inf, "params": params}

    def on_epoch(epoch, p, tlog, opt):
        vl = tlog.rows[-1]["val_loss"]
        improved = vl < best["val"]
        if improved:
            best.update(val=vl, params=p)
        if checkpoint_dir is not None:
            os.makedirs(checkpoint_dir, exist_ok=True)
            save_model(os.path.join(checkpoint_dir, f"epoch_{epoch:03d}.ckpt"), basis, p,
                       opt.state(), config)
            if improved:
                save_model(os.path.join(checkpoint_dir, "best.ckpt"), basis, p, opt.state(), config)

    params, tlog = train(wtr, tcfg, eq, basis, params, hin, validation=wva, on_epoch=on_epoch,
                         log_path=None if checkpoint_dir is None
                         else os.path.join(checkpoint_dir, "training_log.csv"))
    return TrainedModel(basis, params, tlog, wtr, wva, best["params"])


def ood_riemann_states(n: int, count: int, seed: int = 0, amplitude=(0.5, 1.5)) -> np.ndarray:
    """Shifted and rescaled Riemann steps (mean zero), one per row."""
    rng = np.random.default_rng(seed)
    grid = Grid1D(n)
    base = np.asarray(ood_profile("riemann_step", grid).values)
    k = _wavenumbers(n)
    out = []
    for _ in range(count):
        shift = rng.uniform(0, 2 * np.pi)
        a = rng.uniform(*amplitude)
        out.append(a * base * np.exp(-1j * k * shift))
    return np.array(out)


def final_error(eq: EquationSpec, c0: np.ndarray, t_final: float, tau: float, method,
                ref_divisor: int = 16, reference=None) -> float:
    """L2 error at ``t_final`` of ``method`` (an integrator kind or a (basis, params, cfg) triple)."""
    if reference is None:
        u0 = SpectralField(np.asarray(c0), Grid1D(c0.shape[-1]), eq.reality)
        reference = reference_solve(eq, u0, t_final, tau / ref_divisor)[-1].values
    if isinstance(method, tuple):
        basis, params, cfg = method
        c = solve_coeffs(c0, t_final, tau, eq, basis, params, cfg)[-1]
    else:
        c = c0
        for _ in range(int(round(t_final / tau))):
            c = step_coeffs(method, eq, c, tau)
    return float(np.linalg.norm(np.asarray(c) - reference))
