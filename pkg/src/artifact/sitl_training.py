"""Solver-in-the-loop training of the latent corrector.

The hybrid solver is unrolled for ``unroll_steps`` steps on a batch of
initial states, the discrete trajectory is reconstructed at the query times,
and the space-time error against a cached reference trajectory is measured in
the discrete X^{s,1/2} norm.

Query times default to the step endpoints (``samples_per_step=1``). Denser
cadences are available, but for rough data the piecewise reconstruction
cannot follow the resonant in-step oscillations, so interior samples add an
error floor that no corrector can remove. The
gradient comes from the reverse-mode tape, including through the Picard
refinements of every step. AdamW with cosine annealing updates the weights,
and spectral normalisation is re-applied after every update.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import tape as T
from .equations import EquationKind, EquationSpec
from .errors import DivergenceError
from .hinlri_solver import HinLriConfig, check_stability, hinlri_step_coeffs
from .integrators import DEFAULT_DEFECT_SUBSTEPS, reference_step_coeffs, step_coeffs
from .latent_corrector import (CorrectorParams, TrunkBasis, lipschitz_bound, spectral_normalize,
                               zero_corrector)
from .rough_data import RoughFieldSpec, sample_rough_field
from .spectral_core import DispersionSymbol, SpectralField, _phase, _wavenumbers

Tape = T.Tape
backward = T.backward

__all__ = ["Tape", "backward", "TrainingConfig", "BourgainNormConfig", "reconstruct_trajectory",
           "bourgain_loss", "TrainingWindow", "make_windows", "sitl_loss", "AdamW", "train",
           "defect_ratio", "mini_retrain", "TrainingLog", "evaluate_loss"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BourgainNormConfig:
    """Temporal window [0, T) sampled at ``time_samples`` uniform points."""

    time_window: float
    time_samples: int

    def __post_init__(self):
        if self.time_samples < 4:
            raise ValueError("time_samples must be at least 4")
        if not self.time_window > 0:
            raise ValueError("time_window must be positive")

    @property
    def dt(self) -> float:
        return self.time_window / self.time_samples

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.time_samples) * self.dt

    @property
    def sigma_grid(self) -> np.ndarray:
        """sigma_j = 2 pi j / T in DFT order."""
        m = self.time_samples
        return 2 * np.pi * np.fft.fftfreq(m, 1.0 / m) / self.time_window


@dataclass(frozen=True)
class TrainingConfig:
    unroll_steps: int = 16
    batch: int = 8
    lr: float = 1e-3
    weight_decay: float = 1e-4
    epochs: int = 40
    s: float | None = None
    b: float = 0.5
    seeds: int = 1
    tau: float = 2.0 ** -8
    samples_per_step: int = 1
    lr_min: float = 0.0
    betas: tuple = (0.9, 0.999)
    eps: float = 1e-8
    shuffle_seed: int = 0
    defect_samples: int = 16
    defect_substeps: int = 64

    def __post_init__(self):
        if self.b != 0.5:
            raise ValueError("b is fixed at 1/2")
        if self.unroll_steps < 1 or self.batch < 1 or self.epochs < 0:
            raise ValueError("unroll_steps and batch must be positive, epochs non-negative")

    def sobolev_index(self, eq: EquationSpec) -> float:
        if self.s is not None:
            return float(self.s)
        return -0.5 if eq.kind is EquationKind.KDV else 0.0

    def norm_config(self) -> BourgainNormConfig:
        return BourgainNormConfig(self.unroll_steps * self.tau,
                                  self.unroll_steps * self.samples_per_step)


# ---------------------------------------------------------------- reconstruction and loss

def _locate(t, tau, n_steps):
    n = int(math.floor(t / tau + 1e-9))
    if t < -1e-12 or n >= n_steps or n < 0:
        raise ValueError(f"query time {t} outside the window [0, {n_steps * tau})")
    theta = t - n * tau
    if abs(theta) < 1e-12 * max(tau, 1.0):
        theta = 0.0
    return n, theta


def _reconstruct(states, tau, sym, t_query):
    n_steps = len(states) - 1
    n = T.value_of(states[0]).shape[-1]
    Ut = _phase(sym, n, float(tau))
    out = []
    for t in t_query:
        i, theta = _locate(t, tau, n_steps)
        if theta == 0.0:
            out.append(states[i])
            continue
        a = states[i] * _phase(sym, n, float(theta))
        out.append(a + (states[i + 1] - states[i] * Ut) * (theta / tau))
    return out


def reconstruct_trajectory(states, tau: float, sym: DispersionSymbol, t_query) -> list:
    """U(t - t_n) u^n + ((t - t_n)/tau)(u^{n+1} - U(tau) u^n) on [t_n, t_{n+1})."""
    fields = isinstance(states[0], SpectralField)
    raw = [s.coeffs for s in states] if fields else list(states)
    out = _reconstruct(raw, tau, sym, t_query)
    if fields:
        return [states[0].with_coeffs(c) for c in out]
    return out


def _temporal_dft(cfg: BourgainNormConfig) -> np.ndarray:
    # F[j, m] = dt exp(i sigma_j t_m), so E_hat = E @ F.T for E laid out (..., N, M)
    sig = cfg.sigma_grid
    return cfg.dt * np.exp(1j * np.outer(sig, cfg.times))


def _weights(cfg: BourgainNormConfig, n: int, s: float, sym: DispersionSymbol) -> np.ndarray:
    k = _wavenumbers(n).astype(float)
    w = sym.on_grid(n)
    return ((1 + k * k) ** s)[:, None] * np.sqrt(1 + (cfg.sigma_grid[None, :] - w[:, None]) ** 2)


def _bourgain_nm(err, cfg, s, sym):
    """Per-sample loss of an error array laid out (..., N, M)."""
    n = T.value_of(err).shape[-2]
    F = _temporal_dft(cfg)
    eh = T.matmul(err, F.T)
    W = _weights(cfg, n, s, sym) * (2 * np.pi / cfg.time_window)
    return T.sum_(T.sum_(T.abs2(eh) * W, axis=-1), axis=-1)


def bourgain_loss(pred, truth, cfg: BourgainNormConfig, s: float, sym: DispersionSymbol) -> float:
    """(2 pi / T) sum_{k, j} <k>^{2s} <sigma_j - omega(k)> |E_hat(sigma_j, k)|^2.

    ``pred`` and ``truth`` are arrays of shape (..., M, N): M time samples of
    N spectral coefficients. Leading axes are averaged.
    """
    p = np.asarray(pred)
    q = np.asarray(truth)
    if p.shape != q.shape:
        raise ValueError(f"shape mismatch {p.shape} vs {q.shape}")
    if p.shape[-2] != cfg.time_samples:
        raise ValueError("time axis length differs from cfg.time_samples")
    err = np.swapaxes(p - q, -1, -2)
    return float(np.mean(_bourgain_nm(err, cfg, s, sym)))


# ---------------------------------------------------------------- data

@dataclass(frozen=True, eq=False)
class TrainingWindow:
    """Batch of initial states with reference samples at the query times.

    ``c0`` has shape (B, N); ``truth`` has shape (B, N, M).
    """

    c0: np.ndarray
    truth: np.ndarray
    seeds: tuple = ()

    def __len__(self):
        return self.c0.shape[0]

    @property
    def n(self) -> int:
        return self.c0.shape[-1]

    def subset(self, idx) -> "TrainingWindow":
        idx = np.asarray(idx)
        return TrainingWindow(self.c0[idx], self.truth[idx],
                              tuple(np.asarray(self.seeds)[idx].tolist()) if self.seeds else ())


def make_windows(eq: EquationSpec, initial: np.ndarray, cfg: TrainingConfig,
                 ref_substeps: int = 16, windows_per_sample: int = 1, seeds=()) -> TrainingWindow:
    """Reference windows of length unroll_steps * tau from each initial state.

    The reference is the implicit midpoint LRI at tau / samples_per_step /
    ref_substeps. Later windows start from the reference state at the end of
    the previous one.
    """
    nc = cfg.norm_config()
    h = nc.dt
    c = np.atleast_2d(np.asarray(initial, dtype=complex))
    starts, truths = [], []
    for _ in range(windows_per_sample):
        starts.append(c)
        samples = []
        x = c
        for _m in range(nc.time_samples):
            samples.append(x)
            x = reference_step_coeffs(eq, x, h, ref_substeps)
        truths.append(np.stack(samples, axis=-1))
        c = x
    seeds = tuple(seeds) * windows_per_sample if seeds else ()
    return TrainingWindow(np.concatenate(starts), np.concatenate(truths), seeds)


def sample_initial_states(eq: EquationSpec, gamma: float, n: int, seeds) -> np.ndarray:
    return np.stack([sample_rough_field(RoughFieldSpec(gamma, n, int(s), eq.reality)).values
                     for s in seeds])


# ---------------------------------------------------------------- loss through the solver

def _unroll(c0, tau, steps, eq, basis, params, hin):
    states = [c0]
    c = c0
    for _ in range(steps):
        c = hinlri_step_coeffs(c, tau, eq, basis, params, hin)
        states.append(c)
    return states


def sitl_loss(params: CorrectorParams, window: TrainingWindow, eq: EquationSpec, basis: TrunkBasis,
              cfg: TrainingConfig, hin: HinLriConfig):
    """Mean Bourgain loss of the unrolled hybrid trajectory (Var if params are on a tape)."""
    nc = cfg.norm_config()
    states = _unroll(window.c0, cfg.tau, cfg.unroll_steps, eq, basis, params, hin)
    pred = _reconstruct(states, cfg.tau, eq.symbol, nc.times)
    if any(T.is_var(p) for p in pred):
        pred = T.stack(pred, axis=-1)
    else:
        pred = np.stack(pred, axis=-1)
    per = _bourgain_nm(pred - window.truth, nc, cfg.sobolev_index(eq), eq.symbol)
    return T.mean(per)


def evaluate_loss(params, window, eq, basis, cfg, hin, batch: int = 64) -> float:
    tot = 0.0
    for i in range(0, len(window), batch):
        sub = window.subset(np.arange(i, min(i + batch, len(window))))
        tot += float(sitl_loss(params, sub, eq, basis, cfg, hin)) * len(sub)
    return tot / max(len(window), 1)


def loss_and_grad(params, window, eq, basis, cfg, hin):
    tape = Tape()
    p = params.on_tape(tape)
    loss = sitl_loss(p, window, eq, basis, cfg, hin)
    grads = backward(tape, loss)
    return float(T.value_of(loss)), grads


# ---------------------------------------------------------------- optimiser

class AdamW:
    """Adam with decoupled weight decay (applied to weight matrices only)."""

    def __init__(self, lr=1e-3, betas=(0.9, 0.999), eps=1e-8, weight_decay=1e-4):
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.t = 0
        self.m: dict = {}
        self.v: dict = {}

    @staticmethod
    def decays(name: str) -> bool:
        return name.startswith(("enc", "dec", "mix", "scale_w"))

    def step(self, arrays: dict, grads: dict, lr: float | None = None) -> dict:
        lr = self.lr if lr is None else lr
        b1, b2 = self.betas
        self.t += 1
        out = {}
        for name in sorted(arrays):
            p = arrays[name]
            g = np.asarray(grads.get(name, np.zeros_like(p)), dtype=float)
            m = self.m.get(name, np.zeros_like(p)) * b1 + (1 - b1) * g
            v = self.v.get(name, np.zeros_like(p)) * b2 + (1 - b2) * g * g
            self.m[name], self.v[name] = m, v
            mh = m / (1 - b1 ** self.t)
            vh = v / (1 - b2 ** self.t)
            new = p - lr * mh / (np.sqrt(vh) + self.eps)
            if self.weight_decay and self.decays(name):
                new = new - lr * self.weight_decay * p
            out[name] = new
        return out

    def state(self) -> dict:
        st = {"t": np.array([self.t])}
        for k, v in self.m.items():
            st["m:" + k] = v
        for k, v in self.v.items():
            st["v:" + k] = v
        return st


def cosine_lr(lr, lr_min, step, total):
    if total <= 0:
        return lr
    return lr_min + 0.5 * (lr - lr_min) * (1 + math.cos(math.pi * min(step, total) / total))


# ---------------------------------------------------------------- training loop

@dataclass
class TrainingLog:
    rows: list = field(default_factory=list)

    COLUMNS = ("epoch", "train_loss", "val_loss", "lipschitz_bound", "defect_ratio")

    def append(self, **row):
        self.rows.append({c: row.get(c, float("nan")) for c in self.COLUMNS})

    def column(self, name):
        return [r[name] for r in self.rows]

    def write_csv(self, path):
        with open(path, "w", newline="") as f:
            w = csv.DictWriter(f, fieldnames=self.COLUMNS, lineterminator="\n")
            w.writeheader()
            for r in self.rows:
                w.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v)
                            for k, v in r.items()})


def _defect_targets(eq, states, tau, hin, substeps, basis=None, latent_dim=None, against="hybrid"):
    ref = reference_step_coeffs(eq, states, tau, substeps)
    if against == "base":
        return ref - step_coeffs(hin.base_kind, eq, states, tau)
    if against != "hybrid":
        raise ValueError("against must be 'hybrid' or 'base'")
    phys = hinlri_step_coeffs(states, tau, eq, basis, zero_corrector(basis.latent_dim), hin)
    return ref - phys


def defect_ratio(params: CorrectorParams, basis: TrunkBasis, eq: EquationSpec, states,
                 tau: float, tau_ref: float | None = None, hin: HinLriConfig = HinLriConfig(),
                 targets: np.ndarray | None = None, against: str = "hybrid") -> float:
    """Median of ||tau H_neural(u) - E_defect(u)|| / ||E_defect(u)|| over ``states``.

    ``states`` is an array (S, N) of coefficients or a list of fields. The
    neural term is the correction added inside the hybrid step. With
    ``against="hybrid"`` (default) the defect is measured against the physical
    part of the hybrid step, i.e. the step with a zero corrector, which is the
    map the correction is added to. ``against="base"`` uses the bare base
    scheme instead. Samples with zero defect are skipped with a warning.
    """
    if len(states) == 0:
        raise ValueError("validation set is empty")
    c = np.stack([s.values for s in states]) if isinstance(states[0], SpectralField) else np.asarray(states)
    if targets is None:
        sub = DEFAULT_DEFECT_SUBSTEPS if tau_ref is None else int(round(tau / tau_ref))
        targets = _defect_targets(eq, c, tau, hin, sub, basis, against=against)
    _, corr = hinlri_step_coeffs(c, tau, eq, basis, params, hin, return_correction=True)
    corr = np.zeros_like(c) if corr is None else np.asarray(corr)
    den = np.linalg.norm(targets, axis=-1)
    ok = den > 0
    if not ok.all():
        log.warning("excluding %d zero-defect samples", int((~ok).sum()))
    if not ok.any():
        raise ValueError("all validation samples have zero defect")
    ratio = np.linalg.norm(corr - targets, axis=-1)[ok] / den[ok]
    return float(np.median(ratio))


def _batches(n, batch, rng):
    order = rng.permutation(n)
    return [order[i:i + batch] for i in range(0, n, batch)]


def train(datasets, cfg: TrainingConfig, eq: EquationSpec, basis: TrunkBasis,
          params: CorrectorParams, hin: HinLriConfig = HinLriConfig(),
          validation: TrainingWindow | None = None, log_path=None, on_epoch=None):
    """Train the corrector; returns (params, TrainingLog).

    ``datasets`` is a TrainingWindow or a list of them (one per grid size);
    batches are drawn round-robin across grids. Epoch 0 in the log is the
    evaluation of the initial parameters. ``on_epoch(epoch, params, log)`` is
    called after each epoch (used for checkpointing).
    """
    if isinstance(datasets, TrainingWindow):
        datasets = [datasets]
    rng = np.random.default_rng(cfg.shuffle_seed)
    opt = AdamW(cfg.lr, cfg.betas, cfg.eps, cfg.weight_decay)
    tlog = TrainingLog()
    check_stability(cfg.tau, params)
    val = validation
    dr_states = dr_targets = None
    if val is not None and cfg.defect_samples:
        dr_states = val.c0[: cfg.defect_samples]
        dr_targets = _defect_targets(eq, dr_states, cfg.tau, hin, cfg.defect_substeps, basis)

    def _evaluate(p):
        vl = evaluate_loss(p, val, eq, basis, cfg, hin) if val is not None else float("nan")
        dr = (defect_ratio(p, basis, eq, dr_states, cfg.tau, hin=hin, targets=dr_targets)
              if dr_states is not None else float("nan"))
        return vl, dr

    vl, dr = _evaluate(params)
    tl = float(np.mean([evaluate_loss(params, d, eq, basis, cfg, hin) for d in datasets]))
    tlog.append(epoch=0, train_loss=tl, val_loss=vl, lipschitz_bound=lipschitz_bound(params),
                defect_ratio=dr)
    if on_epoch:
        on_epoch(0, params, tlog, opt)
    per_epoch = sum(math.ceil(len(d) / cfg.batch) for d in datasets)
    total = per_epoch * cfg.epochs
    it = 0
    last_good = params
    for epoch in range(1, cfg.epochs + 1):
        plans = [_batches(len(d), cfg.batch, rng) for d in datasets]
        queue = []
        for j in range(max(len(p) for p in plans)):
            for g, plan in enumerate(plans):
                if j < len(plan):
                    queue.append((g, plan[j]))
        losses = []
        for g, idx in queue:
            loss, grads = loss_and_grad(params, datasets[g].subset(idx), eq, basis, cfg, hin)
            if not np.isfinite(loss) or not all(np.all(np.isfinite(v)) for v in grads.values()):
                raise DivergenceError(f"non-finite loss at epoch {epoch}, iteration {it}",
                                      residual=loss, step_index=it)
            lr = cosine_lr(cfg.lr, cfg.lr_min, it, total)
            new = opt.step(params.numpy_arrays(), grads, lr)
            params = spectral_normalize(params.with_arrays(new))
            losses.append(loss)
            it += 1
        last_good = params
        vl, dr = _evaluate(params)
        tlog.append(epoch=epoch, train_loss=float(np.mean(losses)), val_loss=vl,
                    lipschitz_bound=lipschitz_bound(params), defect_ratio=dr)
        log.info("epoch %d train %.4e val %.4e defect %.3f", epoch, np.mean(losses), vl, dr)
        if on_epoch:
            on_epoch(epoch, params, tlog, opt)
    if log_path is not None:
        tlog.write_csv(log_path)
    return last_good, tlog


def mini_retrain(params: CorrectorParams, ood: TrainingWindow, steps: int, eq: EquationSpec,
                 basis: TrunkBasis, cfg: TrainingConfig, hin: HinLriConfig = HinLriConfig(),
                 seed: int = 0) -> CorrectorParams:
    """``steps`` AdamW updates of the SITL loss on an OOD set, warm-started from ``params``."""
    if steps < 1:
        raise ValueError("steps must be at least 1")
    rng = np.random.default_rng(seed)
    opt = AdamW(cfg.lr, cfg.betas, cfg.eps, cfg.weight_decay)
    for i in range(steps):
        idx = rng.choice(len(ood), size=min(cfg.batch, len(ood)), replace=False)
        loss, grads = loss_and_grad(params, ood.subset(np.sort(idx)), eq, basis, cfg, hin)
        if not np.isfinite(loss):
            raise DivergenceError(f"non-finite loss at retraining step {i}", residual=loss)
        new = opt.step(params.numpy_arrays(), grads, cosine_lr(cfg.lr, cfg.lr_min, i, steps))
        params = spectral_normalize(params.with_arrays(new))
    return params
