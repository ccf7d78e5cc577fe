"""Command-line entry points, run configuration and result emission.

Configuration is a YAML mapping; flags override file values. Unknown keys,
type mismatches and constraint violations raise ConfigError naming the key
path. ``effective_config`` returns the fully defaulted tree, which parses
back to an identical RunConfig.

Exit codes: 0 success, 2 configuration error, 3 numerical divergence,
4 checkpoint integrity error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np
import yaml

from .checkpoint import load_checkpoint, load_model, save_checkpoint, save_model
from .errors import ConfigError, DivergenceError, IntegrityError

__all__ = ["RunConfig", "HinLriSettings", "TrainingSettings", "parse_config", "effective_config",
           "config_hash", "emit_results", "save_checkpoint", "load_checkpoint", "main", "COMMANDS"]

log = logging.getLogger(__name__)

COMMANDS = ("generate-data", "run-solver", "train", "converge", "refine", "diagnose", "bench",
            "retrain")
EQUATIONS = ("kdv", "cnls", "qnls")
_DEFAULT_INTEGRATOR = {"kdv": "res1_kdv", "cnls": "res1_nls", "qnls": "etd1"}
_CHECKPOINT_INPUT = {"run-solver", "retrain"}


@dataclass(frozen=True)
class HinLriSettings:
    picard_m: int = 2
    trigger_kappa: int = 2
    latent_dim: int = 16
    w_max: float = 1.34
    frame: str = "twisted"


@dataclass(frozen=True)
class TrainingSettings:
    epochs: int = 30
    unroll_steps: int = 16
    batch: int = 8
    lr: float = 1e-3
    weight_decay: float = 1e-4
    n_train: int = 64
    n_val: int = 16
    samples_per_step: int = 1
    retrain_steps: int = 10
    retrain_samples: int = 50


@dataclass(frozen=True)
class RunConfig:
    command: str
    equation: str = "kdv"
    lam: float | None = None
    gamma: float = 0.5
    grids: tuple = (256,)
    taus: tuple = tuple(2.0 ** -j for j in range(4, 10))
    integrator: str | None = None
    t_final: float = 1.0
    seeds: tuple = (0,)
    out: str = "results"
    checkpoint: str | None = None
    hinlri: HinLriSettings = HinLriSettings()
    training: TrainingSettings = TrainingSettings()

    @property
    def integrator_kind(self) -> str:
        return self.integrator or _DEFAULT_INTEGRATOR[self.equation]


_SECTIONS = {"hinlri": HinLriSettings, "training": TrainingSettings}


def _coerce(path, value, typ):
    origin = typ if isinstance(typ, type) else None
    if typ in ("float", float) or origin is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if typ in ("int", int) or origin is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return int(value)
    if typ in ("str", str) or origin is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    raise AssertionError(typ)


_FIELD_TYPES = {
    "command": "str", "equation": "str", "lam": "float?", "gamma": "float", "grids": "int[]",
    "taus": "float[]", "integrator": "str?", "t_final": "float", "seeds": "int[]", "out": "str",
    "checkpoint": "str?",
}


def _parse_field(path, value, spec):
    if spec.endswith("?"):
        return None if value is None else _coerce(path, value, spec[:-1])
    if spec.endswith("[]"):
        if not isinstance(value, (list, tuple)):
            value = [value]
        return tuple(_coerce(f"{path}[{i}]", v, spec[:-2]) for i, v in enumerate(value))
    return _coerce(path, value, spec)


def _parse_section(name, tree, cls):
    if not isinstance(tree, dict):
        raise ConfigError(f"{name}: expected a mapping")
    kw = {}
    types = {f.name: type(f.default).__name__ for f in dataclasses.fields(cls)}
    for k, v in tree.items():
        if k not in types:
            raise ConfigError(f"unknown key {name}.{k}")
        kw[k] = _coerce(f"{name}.{k}", v, types[k])
    return cls(**kw)


def _validate(cfg: RunConfig, check_paths: bool):
    if cfg.command not in COMMANDS:
        raise ConfigError(f"command: must be one of {', '.join(COMMANDS)}, got {cfg.command!r}")
    if cfg.equation not in EQUATIONS:
        raise ConfigError(f"equation: must be one of {', '.join(EQUATIONS)}")
    if not cfg.seeds:
        raise ConfigError("seeds: list must not be empty")
    if not cfg.grids or any(n < 8 or n % 2 for n in cfg.grids):
        raise ConfigError("grids: sizes must be even integers >= 8")
    if not cfg.taus or any(not t > 0 for t in cfg.taus):
        raise ConfigError("taus: step sizes must be positive")
    if not cfg.t_final >= 0:
        raise ConfigError("t_final: must be non-negative")
    h = cfg.hinlri
    if h.picard_m < 1 or h.trigger_kappa < 1 or h.trigger_kappa > h.picard_m:
        raise ConfigError("hinlri.trigger_kappa: need 1 <= trigger_kappa <= picard_m")
    if h.frame not in ("twisted", "literal"):
        raise ConfigError("hinlri.frame: must be 'twisted' or 'literal'")
    if h.latent_dim < 1 or not h.w_max > 0:
        raise ConfigError("hinlri.latent_dim/w_max: must be positive")
    t = cfg.training
    for name in ("epochs", "unroll_steps", "batch", "n_train", "n_val", "samples_per_step",
                 "retrain_steps", "retrain_samples"):
        if getattr(t, name) < (0 if name == "epochs" else 1):
            raise ConfigError(f"training.{name}: out of range")
    needs = cfg.command == "retrain" or cfg.integrator_kind == "hinlri"
    if check_paths and cfg.checkpoint is not None and (needs or cfg.command in _CHECKPOINT_INPUT) \
            and not os.path.exists(cfg.checkpoint):
        raise ConfigError(f"checkpoint: file {cfg.checkpoint!r} does not exist")
    if check_paths and needs and cfg.checkpoint is None:
        what = cfg.command if cfg.command == "retrain" else "integrator hinlri"
        raise ConfigError(f"checkpoint: required by {what}")


def parse_config(source=None, overrides: dict | None = None, check_paths: bool = True) -> RunConfig:
    """Build a validated RunConfig from a YAML path, a mapping, or flags only.

    ``overrides`` (e.g. from command-line flags) replace file values key by key.
    """
    if source is None:
        tree = {}
    elif isinstance(source, dict):
        tree = dict(source)
    else:
        try:
            with open(source) as f:
                tree = yaml.safe_load(f) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read config {source}: {exc}") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"config {source} is not valid YAML: {exc}") from None
    if not isinstance(tree, dict):
        raise ConfigError("config root must be a mapping")
    for k, v in (overrides or {}).items():
        if isinstance(v, dict) and isinstance(tree.get(k), dict):
            tree[k] = {**tree[k], **v}
        else:
            tree[k] = v
    if "command" not in tree:
        raise ConfigError("command: missing")
    kw = {}
    for k, v in tree.items():
        if k in _SECTIONS:
            kw[k] = _parse_section(k, v, _SECTIONS[k])
        elif k in _FIELD_TYPES:
            kw[k] = _parse_field(k, v, _FIELD_TYPES[k])
        else:
            raise ConfigError(f"unknown key {k}")
    cfg = RunConfig(**kw)
    _validate(cfg, check_paths)
    return cfg


def effective_config(cfg: RunConfig) -> dict:
    """Plain-data tree of every setting (defaults included)."""
    d = dataclasses.asdict(cfg)
    for k in ("grids", "taus", "seeds"):
        d[k] = list(d[k])
    return d


def config_hash(cfg: RunConfig) -> str:
    blob = json.dumps(effective_config(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


# ---------------------------------------------------------------- result emission

def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def emit_results(study, out_dir, name: str, cfg: RunConfig | None = None, seeds=None,
                 columns=None):
    """Write ``<name>.csv`` (one row per cell) and ``<name>.json`` (summary + provenance).

    ``study`` is any object with rows()/summary(), or a (rows, summary) pair.
    Output is a pure function of the inputs; wall-clock timestamps go to the
    ``<name>.log`` sidecar only. Returns the two paths.
    """
    if isinstance(study, tuple):
        rows, summary = study
    else:
        rows, summary = study.rows(), study.summary()
    rows = list(rows)
    if columns is None:
        columns = list(rows[0].keys()) if rows else list(getattr(study, "columns", []))
    try:
        os.makedirs(out_dir, exist_ok=True)
        csv_path = os.path.join(out_dir, f"{name}.csv")
        json_path = os.path.join(out_dir, f"{name}.json")
        with open(csv_path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(columns)
            for r in rows:
                w.writerow([_fmt(r.get(c)) for c in columns])
        doc = {"summary": summary,
               "config_hash": config_hash(cfg) if cfg is not None else None,
               "seeds": list(seeds if seeds is not None else (cfg.seeds if cfg is not None else [])),
               "config": effective_config(cfg) if cfg is not None else None}
        with open(json_path, "w") as f:
            json.dump(doc, f, sort_keys=True, indent=2, default=_json_default)
            f.write("\n")
        with open(os.path.join(out_dir, f"{name}.log"), "a") as f:
            f.write(f"{time.strftime('%Y-%m-%dT%H:%M:%S')} wrote {csv_path} and {json_path}\n")
    except OSError as exc:
        raise OSError(f"cannot write results to {out_dir}: {exc}") from exc
    return csv_path, json_path


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialise {type(o).__name__}")


# ---------------------------------------------------------------- commands

def _equation(cfg):
    from .equations import EquationSpec
    lam = {} if cfg.lam is None else {"lam": cfg.lam}
    return EquationSpec.from_name(cfg.equation, **lam)


def _hin_config(cfg, eq):
    from .equations import EquationKind
    from .hinlri_solver import HinLriConfig
    base = "res1_kdv" if eq.kind is EquationKind.KDV else "res1_nls"
    return HinLriConfig(cfg.hinlri.picard_m, cfg.hinlri.trigger_kappa, base, cfg.hinlri.frame)


def _method(cfg, eq):
    from .diagnostics import HinLriMethod
    if cfg.integrator_kind == "hinlri":
        if cfg.checkpoint is None:
            raise ConfigError("checkpoint: required for integrator hinlri")
        basis, params, _, _ = load_model(cfg.checkpoint)
        return HinLriMethod(basis, params, _hin_config(cfg, eq))
    return cfg.integrator_kind


def _training_config(cfg, tau):
    from .sitl_training import TrainingConfig
    t = cfg.training
    return TrainingConfig(unroll_steps=t.unroll_steps, batch=t.batch, lr=t.lr,
                          weight_decay=t.weight_decay, epochs=t.epochs, tau=tau,
                          samples_per_step=t.samples_per_step)


def _data_cache_path(cfg, n, tau):
    key = json.dumps({"eq": cfg.equation, "lam": cfg.lam, "gamma": cfg.gamma, "n": n, "tau": tau,
                      "training": dataclasses.asdict(cfg.training)}, sort_keys=True)
    return os.path.join(cfg.out, "data", hashlib.sha256(key.encode()).hexdigest()[:16] + ".ckpt")


def _training_windows(cfg, eq, n, tau):
    """Reference windows for training, computed once and cached under out/data."""
    from .sitl_training import TrainingWindow, make_windows, sample_initial_states
    from .workflows import VALIDATION_SEED_OFFSET
    path = _data_cache_path(cfg, n, tau)
    if os.path.exists(path):
        d = load_checkpoint(path)
        return (TrainingWindow(d["train_c0"], d["train_truth"]),
                TrainingWindow(d["val_c0"], d["val_truth"]))
    t = cfg.training
    tcfg = _training_config(cfg, tau)
    tr = make_windows(eq, sample_initial_states(eq, cfg.gamma, n, range(t.n_train)), tcfg)
    va = make_windows(eq, sample_initial_states(
        eq, cfg.gamma, n, range(VALIDATION_SEED_OFFSET, VALIDATION_SEED_OFFSET + t.n_val)), tcfg)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    save_checkpoint(path, {"train_c0": tr.c0, "train_truth": tr.truth, "val_c0": va.c0,
                           "val_truth": va.truth})
    return tr, va


def _cmd_generate_data(cfg):
    eq = _equation(cfg)
    rows = []
    for n in cfg.grids:
        tr, va = _training_windows(cfg, eq, n, cfg.taus[0])
        rows.append({"n": n, "tau": cfg.taus[0], "train_windows": len(tr), "val_windows": len(va),
                     "path": os.path.relpath(_data_cache_path(cfg, n, cfg.taus[0]), cfg.out)})
    emit_results((rows, {"grids": list(cfg.grids)}), cfg.out, "generate_data", cfg)


def _cmd_run_solver(cfg):
    from .diagnostics import _advance, invariant_drift
    from .rough_data import RoughFieldSpec, sample_rough_field
    from .spectral_core import Grid1D, SpectralField
    eq = _equation(cfg)
    method = _method(cfg, eq)
    tau = cfg.taus[-1]
    rows = []
    for n in cfg.grids:
        for s in cfg.seeds:
            u0 = sample_rough_field(RoughFieldSpec(cfg.gamma, n, s, eq.reality))
            c = _advance(method, eq, u0.values, cfg.t_final, tau)
            if not np.all(np.isfinite(c)):
                raise DivergenceError("non-finite state in run-solver")
            rep = invariant_drift([u0, SpectralField(c, Grid1D(n), eq.reality)], eq)
            rows.append({"n": n, "seed": s, "tau": tau, "final_l2": float(np.linalg.norm(c)),
                         "mass_drift": rep.max_mass_drift,
                         "hamiltonian_drift": rep.max_hamiltonian_drift})
    emit_results((rows, {"method": getattr(method, "name", str(method))}), cfg.out, "run_solver", cfg)


def _cmd_train(cfg):
    from .workflows import DeskSetup, train_corrector
    eq = _equation(cfg)
    tau = cfg.taus[0]
    n = cfg.grids[0]
    t = cfg.training
    setup = DeskSetup(n_modes=n, latent_dim=cfg.hinlri.latent_dim, gamma=cfg.gamma,
                      n_train=t.n_train, n_val=t.n_val, w_max=cfg.hinlri.w_max,
                      init_seed=cfg.seeds[0])
    windows = _training_windows(cfg, eq, n, tau)
    m = train_corrector(eq, setup, _training_config(cfg, tau), _hin_config(cfg, eq),
                        checkpoint_dir=os.path.join(cfg.out, "checkpoints"),
                        config=effective_config(cfg), windows=windows)
    save_model(os.path.join(cfg.out, "model.ckpt"), m.basis, m.params, config=effective_config(cfg))
    r0, r1 = m.log.rows[0], m.log.rows[-1]
    emit_results((m.log.rows, {"val_loss_ratio": r1["val_loss"] / r0["val_loss"],
                               "defect_ratio": r1["defect_ratio"]}),
                 cfg.out, "train", cfg, columns=list(m.log.COLUMNS))


def _cmd_converge(cfg):
    from .diagnostics import convergence_study, log_envelope_test
    eq = _equation(cfg)
    method = _method(cfg, eq)
    for n in cfg.grids:
        rep = convergence_study(method, eq, cfg.gamma, cfg.taus, n, cfg.t_final, cfg.seeds)
        env = log_envelope_test(rep, cfg.gamma)
        summary = {**rep.summary(), "envelope": env.classification,
                   "envelope_residual_ratio": env.residual_ratio}
        emit_results((rep.rows(), summary), cfg.out, f"converge_n{n}", cfg)


def _cmd_refine(cfg):
    from .diagnostics import refinement_scan
    eq = _equation(cfg)
    rs = refinement_scan(_method(cfg, eq), eq, cfg.taus[0], cfg.grids, cfg.gamma, cfg.seeds[0],
                         cfg.t_final)
    emit_results(rs, cfg.out, "refine", cfg)


def _cmd_diagnose(cfg):
    from .diagnostics import error_spectrum, invariant_drift
    from .integrators import reference_solve, step
    from .rough_data import RoughFieldSpec, sample_rough_field
    eq = _equation(cfg)
    kind = cfg.integrator_kind
    tau = cfg.taus[0]
    rows, summary = [], {}
    for n in cfg.grids:
        u0 = sample_rough_field(RoughFieldSpec(cfg.gamma, n, cfg.seeds[0], eq.reality))
        traj = [u0]
        for _ in range(int(round(cfg.t_final / tau))):
            traj.append(step(kind, eq, traj[-1], tau))
        rep = invariant_drift(traj, eq, tau)
        ref = reference_solve(eq, u0, cfg.t_final, tau / 16)[-1]
        spec = error_spectrum(traj[-1], ref)
        for b, a in enumerate(spec):
            rows.append({"n": n, "k": b, "error_amplitude": float(a)})
        summary[f"n{n}"] = rep.summary()
    emit_results((rows, summary), cfg.out, "diagnose", cfg)


def _cmd_bench(cfg):
    from .diagnostics import convolution_bench, timing_bench
    from .kernels import BACKEND
    eq = _equation(cfg)
    cb = convolution_bench(cfg.grids)
    emit_results(cb, cfg.out, "bench_convolution", cfg)
    methods = [cfg.integrator_kind, "implicit_lri"]
    if cfg.checkpoint:
        methods.append(_method(dataclasses.replace(cfg, integrator="hinlri"), eq))
    tb = timing_bench(methods, eq, cfg.grids, repeats=20, tau=cfg.taus[0])
    emit_results((tb.rows(), {**tb.summary(), "backend": BACKEND}), cfg.out, "bench_timing", cfg)


def _cmd_retrain(cfg):
    from .sitl_training import make_windows, mini_retrain
    from .workflows import ood_riemann_states
    eq = _equation(cfg)
    basis, params, _, _ = load_model(cfg.checkpoint)
    tau = cfg.taus[0]
    tcfg = _training_config(cfg, tau)
    ood = make_windows(eq, ood_riemann_states(basis.n_modes, cfg.training.retrain_samples,
                                              cfg.seeds[0]), tcfg)
    new = mini_retrain(params, ood, cfg.training.retrain_steps, eq, basis, tcfg,
                       _hin_config(cfg, eq), seed=cfg.seeds[0])
    path = os.path.join(cfg.out, "retrained.ckpt")
    os.makedirs(cfg.out, exist_ok=True)
    save_model(path, basis, new, config=effective_config(cfg))
    emit_results(([{"checkpoint": "retrained.ckpt", "steps": cfg.training.retrain_steps}], {}),
                 cfg.out, "retrain", cfg)


_HANDLERS = {"generate-data": _cmd_generate_data, "run-solver": _cmd_run_solver,
             "train": _cmd_train, "converge": _cmd_converge, "refine": _cmd_refine,
             "diagnose": _cmd_diagnose, "bench": _cmd_bench, "retrain": _cmd_retrain}


def _parse_tau_range(text):
    """'4:9' -> 2^-4..2^-9; '0.1,0.05' -> explicit list."""
    try:
        if ":" in text:
            a, b = (int(x) for x in text.split(":"))
            step = 1 if b >= a else -1
            return [2.0 ** -j for j in range(a, b + step, step)]
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise ConfigError(f"--tau-range: cannot parse {text!r}") from None


def _int_list(flag, text):
    try:
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise ConfigError(f"{flag}: expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hinlri", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="YAML run configuration")
        s.add_argument("--equation", choices=EQUATIONS)
        s.add_argument("--gamma", type=float)
        s.add_argument("--seeds", help="comma-separated seeds")
        s.add_argument("--tau-range", help="'a:b' for 2^-a..2^-b, or a comma list")
        s.add_argument("--grid", help="comma-separated grid sizes")
        s.add_argument("--out", help="output directory")
        s.add_argument("--checkpoint", help="model checkpoint")
        s.add_argument("--integrator", help="integrator kind or 'hinlri'")
        s.add_argument("--epochs", type=int, help="training epochs")
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        over = {"command": args.command}
        if args.equation:
            over["equation"] = args.equation
        if args.gamma is not None:
            over["gamma"] = args.gamma
        if args.seeds:
            over["seeds"] = _int_list("--seeds", args.seeds)
        if args.tau_range:
            over["taus"] = _parse_tau_range(args.tau_range)
        if args.grid:
            over["grids"] = _int_list("--grid", args.grid)
        if args.out:
            over["out"] = args.out
        if args.checkpoint:
            over["checkpoint"] = args.checkpoint
        if args.integrator:
            over["integrator"] = args.integrator
        if args.epochs is not None:
            over["training"] = {"epochs": args.epochs}
        cfg = parse_config(args.config, over)
        os.makedirs(cfg.out, exist_ok=True)
        with open(os.path.join(cfg.out, "effective_config.yaml"), "w") as f:
            yaml.safe_dump(effective_config(cfg), f, sort_keys=True)
        _HANDLERS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except DivergenceError as exc:
        print(f"numerical divergence: {exc}", file=sys.stderr)
        return 3
    except IntegrityError as exc:
        print(f"integrity error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
