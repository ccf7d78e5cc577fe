"""Latent neural corrector: trunk basis, scaling net, latent operator.

The latent operator maps (r_c, u_c, tau) in C^K x C^K x R to C^K. Complex
vectors enter as interleaved (Re, Im) pairs, giving an input of width 4K+1:

    encoder   dense layers [4K+1 -> h -> ... -> 2K] with GELU between them
    mixing    one dense complex K x K map over the latent slots
    decoder   dense layers [2K -> h -> ... -> 2K] with GELU between them

The operator has no bias terms, so G(0, 0, 0) = 0 and the norm bound
||G(x)|| <= L ||x|| holds with L the Lipschitz bound. The last decoder layer is
zero at initialisation, which makes the untrained corrector the zero map.

The scaling net maps an 8-vector of phase-invariant features of u through
[8 -> 64 -> 32 -> 1] with layer normalisation and GELU, then softplus.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from . import tape as T
from .errors import DimensionError, RankDeficiencyError
from .spectral_core import REAL, SpectralField, _wavenumbers

__all__ = [
    "TrunkBasis", "CorrectorParams", "build_trunk_basis", "restrict", "prolong",
    "init_corrector", "zero_corrector", "scale_estimate", "apply_scaling",
    "latent_forward", "spectral_normalize", "lipschitz_bound", "lipschitz_report",
    "scale_features", "GELU_LIPSCHITZ", "FEATURE_VERSION", "power_iteration_norm",
]

GELU_LIPSCHITZ = 1.13
FEATURE_VERSION = 1
N_FEATURES = 8
_LN_EPS = 1e-5


# ---------------------------------------------------------------- trunk basis

@dataclass(frozen=True, eq=False)
class TrunkBasis:
    """Column-orthonormal N x K complex matrix (rows indexed in FFT order)."""

    columns: np.ndarray

    def __post_init__(self):
        c = np.ascontiguousarray(self.columns, dtype=complex)
        if c.ndim != 2:
            raise DimensionError("basis must be a 2-D matrix")
        n, k = c.shape
        if k < 1 or 4 * k > n:
            raise DimensionError(f"latent dimension K={k} must satisfy 1 <= K <= N/4 (N={n})")
        c.setflags(write=False)
        object.__setattr__(self, "columns", c)

    @property
    def latent_dim(self) -> int:
        return self.columns.shape[1]

    @property
    def n_modes(self) -> int:
        return self.columns.shape[0]

    def orthonormality_error(self) -> float:
        g = self.columns.conj().T @ self.columns
        return float(np.max(np.abs(g - np.eye(self.latent_dim))))

    def at_grid(self, n: int) -> np.ndarray:
        """Columns re-indexed by wavenumber onto an n-point grid.

        Finer grids pad with zero rows. On a grid too coarse for the support the
        columns are truncated and re-orthonormalised (rank loss is an error).
        """
        if n == self.n_modes:
            return self.columns
        return _regrid(self, n)

    def support_kmax(self) -> int:
        k = _wavenumbers(self.n_modes)
        rows = np.any(np.abs(self.columns) > 0, axis=1)
        return int(np.max(np.abs(k[rows]))) if rows.any() else 0


@lru_cache(maxsize=32)
def _regrid_cached(key, n):
    basis = key
    src = basis.columns
    k_old = _wavenumbers(basis.n_modes)
    k_new = _wavenumbers(n)
    out = np.zeros((n, src.shape[1]), complex)
    pos = {int(k): i for i, k in enumerate(k_new)}
    lost = 0.0
    for i, k in enumerate(k_old):
        j = pos.get(int(k))
        if j is None or (n < basis.n_modes and abs(k) >= n // 2):
            lost += float(np.sum(np.abs(src[i]) ** 2))
        else:
            out[j] = src[i]
    if lost > 1e-20:
        # coarser grid than the basis support: truncate and re-orthonormalise
        q, r = np.linalg.qr(out)
        d = np.abs(np.diag(r))
        if d.min() <= 1e-8 * max(d.max(), 1e-300):
            raise DimensionError(f"basis loses rank when truncated to the {n}-point grid")
        out = q * np.sign(np.diag(r).real + (np.diag(r).real == 0))
    out.setflags(write=False)
    return out


def _regrid(basis, n):
    return _regrid_cached(basis, n)


def build_trunk_basis(snapshots, k: int, positive_frequencies: bool = False,
                      rank_tol: float = 1e-10) -> TrunkBasis:
    """Top-k left singular vectors of the N x S snapshot matrix.

    ``snapshots`` holds SpectralFields or raw coefficient arrays of one length.

    With ``positive_frequencies`` the snapshot rows with k <= 0 (and the
    Nyquist row) are zeroed first. For real fields this captures every
    Hermitian pair once, so no pair gets split by the rank cut.
    """
    snaps = list(snapshots)
    if len(snaps) < k:
        raise RankDeficiencyError(f"need at least {k} snapshots, got {len(snaps)}")
    if isinstance(snaps[0], SpectralField):
        grid = snaps[0].grid
        if any(s.grid != grid for s in snaps):
            raise DimensionError("snapshots must share one grid")
        snaps = [np.asarray(s.values) for s in snaps]
    if len({np.shape(s) for s in snaps}) != 1:
        raise DimensionError("snapshots must share one grid")
    a = np.stack([np.asarray(s, dtype=complex) for s in snaps], axis=1)
    if positive_frequencies:
        kk = _wavenumbers(a.shape[0])
        a = a * (kk > 0)[:, None]
    u, sv, _ = np.linalg.svd(a, full_matrices=False)
    if k > len(sv) or sv[k - 1] <= rank_tol * max(sv[0], 1e-300):
        raise RankDeficiencyError(f"snapshot matrix has numerical rank below {k}")
    q = u[:, :k]
    # a second orthonormalisation pass pins Phi^* Phi = I to rounding
    q, r = np.linalg.qr(q)
    q = q * np.sign(np.diag(r).real + (np.diag(r).real == 0))
    return TrunkBasis(q)


def restrict(basis: TrunkBasis, field) -> np.ndarray:
    """Phi^* u for a SpectralField (grids must match)."""
    c = field.coeffs if isinstance(field, SpectralField) else field
    n = T.value_of(c).shape[-1]
    if n != basis.n_modes:
        raise DimensionError(f"field has {n} modes, basis has {basis.n_modes}")
    return T.matmul(c, np.conj(basis.columns))


def prolong(basis: TrunkBasis, latent, grid=None, reality: str = "complex"):
    """Phi z, returned as a SpectralField when ``grid`` is given."""
    z = latent
    if T.value_of(z).shape[-1] != basis.latent_dim:
        raise DimensionError(f"latent length {T.value_of(z).shape[-1]} != K={basis.latent_dim}")
    out = T.matmul(z, basis.columns.T)
    if grid is not None:
        return SpectralField(out, grid, reality)
    return out


# ---------------------------------------------------------------- parameters

@dataclass(frozen=True, eq=False)
class CorrectorParams:
    """Weights of the latent operator and the scaling net.

    ``arrays`` maps names to float arrays (or tape variables during training).
    Weight matrices are stored (fan_in, fan_out) and applied as ``x @ W``.
    """

    arrays: dict
    latent_dim: int
    enc_layers: int
    dec_layers: int
    w_max: float
    hidden: int = 128
    feature_version: int = FEATURE_VERSION
    layer_norms: tuple = field(default=())

    def latent_weight_names(self) -> list[str]:
        return ([f"enc{i}" for i in range(self.enc_layers)] + ["mix"]
                + [f"dec{i}" for i in range(self.dec_layers)])

    def latent_matrices(self) -> list[np.ndarray]:
        """Weight matrices on the latent path; the mixing layer as a complex K x K matrix."""
        out = []
        for name in self.latent_weight_names():
            if name == "mix":
                out.append(T.value_of(self.arrays["mix_re"]) + 1j * T.value_of(self.arrays["mix_im"]))
            else:
                out.append(T.value_of(self.arrays[name]))
        return out

    @property
    def n_gelu(self) -> int:
        return (self.enc_layers - 1) + (self.dec_layers - 1)

    def parameter_count(self) -> int:
        return int(sum(np.size(T.value_of(v)) for v in self.arrays.values()))

    def numpy_arrays(self) -> dict:
        return {k: np.array(T.value_of(v)) for k, v in self.arrays.items()}

    def with_arrays(self, arrays: dict, layer_norms=None) -> "CorrectorParams":
        return replace(self, arrays=dict(arrays),
                       layer_norms=self.layer_norms if layer_norms is None else tuple(layer_norms))

    def on_tape(self, tape: T.Tape, names=None) -> "CorrectorParams":
        """Copy whose arrays are leaves of ``tape`` (all, or only ``names``)."""
        arr = {}
        for k, v in self.arrays.items():
            if names is None or k in names:
                arr[k] = tape.variable(np.array(T.value_of(v), dtype=float), k)
            else:
                arr[k] = T.value_of(v)
        return replace(self, arrays=arr)


def _lecun_uniform(rng, fan_in, fan_out):
    a = math.sqrt(3.0 / fan_in)
    return rng.uniform(-a, a, size=(fan_in, fan_out))


def _scaled_orthogonal(rng, fan_in, fan_out, gain):
    m = max(fan_in, fan_out)
    q, r = np.linalg.qr(rng.standard_normal((m, m)))
    q = q * np.sign(np.diag(r))
    return gain * q[:fan_in, :fan_out]


def init_corrector(latent_dim: int, hidden: int = 128, enc_layers: int = 4, dec_layers: int = 4,
                   w_max: float = 1.34, seed: int = 0, zero_last: bool = True,
                   init: str = "orthogonal") -> CorrectorParams:
    """Initial corrector; the last decoder layer is zero when ``zero_last``.

    ``enc_layers``/``dec_layers`` count weight matrices (so 4 means three hidden
    layers of width ``hidden``). ``init="orthogonal"`` gives every latent-path
    matrix all singular values equal to ``w_max``, so signals keep their size
    through the stack. ``init="lecun"`` draws variance-scaled uniform weights;
    capped at ``w_max`` their typical gain is well below the cap and the deep
    stack passes almost no signal. Weights are spectrally normalised on return.
    """
    if init not in ("orthogonal", "lecun"):
        raise ValueError(f"unknown init {init!r}")
    if enc_layers < 1 or dec_layers < 1:
        raise ValueError("encoder and decoder need at least one layer")
    rng = np.random.default_rng(seed)
    K = latent_dim
    arr = {}
    widths = [4 * K + 1] + [hidden] * (enc_layers - 1) + [2 * K]

    def draw(fan_in, fan_out):
        if init == "orthogonal":
            return _scaled_orthogonal(rng, fan_in, fan_out, w_max)
        return _lecun_uniform(rng, fan_in, fan_out)

    for i in range(enc_layers):
        arr[f"enc{i}"] = draw(widths[i], widths[i + 1])
    arr["mix_re"] = np.eye(K)
    arr["mix_im"] = np.zeros((K, K))
    widths = [2 * K] + [hidden] * (dec_layers - 1) + [2 * K]
    for i in range(dec_layers):
        arr[f"dec{i}"] = draw(widths[i], widths[i + 1])
    if zero_last:
        arr[f"dec{dec_layers - 1}"] = np.zeros_like(arr[f"dec{dec_layers - 1}"])
    sw = [N_FEATURES, 64, 32, 1]
    for i in range(3):
        arr[f"scale_w{i}"] = _lecun_uniform(rng, sw[i], sw[i + 1])
        arr[f"scale_b{i}"] = np.zeros(sw[i + 1])
        if i < 2:
            arr[f"scale_g{i}"] = np.ones(sw[i + 1])
            arr[f"scale_beta{i}"] = np.zeros(sw[i + 1])
    arr["scale_w2"] = np.zeros_like(arr["scale_w2"])
    p = CorrectorParams(arr, K, enc_layers, dec_layers, float(w_max), hidden)
    return spectral_normalize(p)


def zero_corrector(latent_dim: int, **kw) -> CorrectorParams:
    """All latent-operator weights zero (the scaling net keeps its default init)."""
    p = init_corrector(latent_dim, **kw)
    arr = p.numpy_arrays()
    for name in p.latent_weight_names():
        if name == "mix":
            arr["mix_re"][:] = 0.0
            arr["mix_im"][:] = 0.0
        else:
            arr[name][:] = 0.0
    return p.with_arrays(arr, layer_norms=[0.0] * len(p.latent_weight_names()))


# ---------------------------------------------------------------- scaling

def scale_features(c, n_ref: int):
    """Phase-invariant 8-vector of a coefficient array (leading batch axes allowed).

    Coefficients are first brought to the reference grid normalisation
    (divided by sqrt(N/n_ref)) so the same function gives the same features on
    any grid: L2 norm, H1 seminorm, max modulus, spectral centroid, spectral
    spread, largest coefficient, l1 norm of coefficients, log(1 + L2).
    """
    n = T.value_of(c).shape[-1]
    s = math.sqrt(n / n_ref)
    ct = c * (1.0 / s)
    k = _wavenumbers(n).astype(float)
    a2 = T.abs2(ct)
    m0 = T.sum_(a2, axis=-1, keepdims=True) + 1e-30
    l2 = T.sqrt(m0)
    h1 = T.sqrt(T.sum_(a2 * (k * k), axis=-1, keepdims=True) + 1e-30)
    p = T.ifft(ct)
    maxmod = T.sqrt(T.amax(T.abs2(p), axis=-1, keepdims=True) + 1e-30) * s
    cen = T.sum_(a2 * np.abs(k), axis=-1, keepdims=True) / m0
    spread = T.sqrt(T.sum_(a2 * (k * k), axis=-1, keepdims=True) / m0)
    amp = T.sqrt(a2 + 1e-30)
    cmax = T.amax(amp, axis=-1, keepdims=True)
    l1 = T.sum_(amp, axis=-1, keepdims=True)
    logl2 = T.log(l2 + 1.0)
    return T.concatenate([l2, h1, maxmod, cen, spread, cmax, l1, logl2], axis=-1)


def _layer_norm(x, g, b):
    mu = T.mean(x, axis=-1, keepdims=True)
    xc = x - mu
    var = T.mean(xc * xc, axis=-1, keepdims=True)
    return xc / T.sqrt(var + _LN_EPS) * g + b


def _scale_from_coeffs(params: CorrectorParams, c, n_ref: int):
    w = params.arrays
    h = scale_features(c, n_ref)
    for i in range(2):
        h = T.matmul(h, w[f"scale_w{i}"]) + w[f"scale_b{i}"]
        h = T.gelu(_layer_norm(h, w[f"scale_g{i}"], w[f"scale_beta{i}"]))
    out = T.matmul(h, w["scale_w2"]) + w["scale_b2"]
    return T.softplus(out)


def scale_estimate(params: CorrectorParams, u: SpectralField, n_ref: int | None = None):
    """lambda = softplus(scaling_net(features(u))) > 0, one value per batch member."""
    lam = _scale_from_coeffs(params, u.values, n_ref or u.n)
    v = np.asarray(lam)[..., 0]
    return float(v) if v.ndim == 0 else v


def apply_scaling(u: SpectralField, lam, direction: str = "forward") -> SpectralField:
    """Amplitude scaling: forward multiplies by 1/lam, inverse by lam."""
    lam_v = np.asarray(T.value_of(lam))
    if np.any(lam_v <= 0):
        raise ValueError("lam must be positive")
    if direction == "forward":
        return u.with_coeffs(u.coeffs / lam)
    if direction == "inverse":
        return u.with_coeffs(u.coeffs * lam)
    raise ValueError("direction must be 'forward' or 'inverse'")


# ---------------------------------------------------------------- latent operator

def _interleave(z):
    return T.reshape(T.stack([T.real(z), T.imag(z)], axis=-1),
                     T.value_of(z).shape[:-1] + (2 * T.value_of(z).shape[-1],))


def _deinterleave(y):
    return y[..., 0::2] + y[..., 1::2] * 1j


def _latent_apply(params: CorrectorParams, r_c, u_c, tau):
    w = params.arrays
    batch = T.value_of(r_c).shape[:-1]
    t_col = np.full(batch + (1,), float(tau))
    h = T.concatenate([_interleave(r_c), _interleave(u_c), t_col], axis=-1)
    for i in range(params.enc_layers):
        h = T.matmul(h, w[f"enc{i}"])
        if i < params.enc_layers - 1:
            h = T.gelu(h)
    z = _deinterleave(h)
    z = T.matmul(z, w["mix_re"]) + T.matmul(z, w["mix_im"]) * 1j
    h = _interleave(z)
    for i in range(params.dec_layers):
        h = T.matmul(h, w[f"dec{i}"])
        if i < params.dec_layers - 1:
            h = T.gelu(h)
    return _deinterleave(h)


def latent_forward(params: CorrectorParams, r_c, u_c, tau: float):
    """G_theta(r_c, u_c, tau) in C^K."""
    K = params.latent_dim
    if T.value_of(r_c).shape[-1] != K or T.value_of(u_c).shape[-1] != K:
        raise DimensionError(f"latent inputs must have length K={K}")
    return _latent_apply(params, r_c, u_c, tau)


# ---------------------------------------------------------------- spectral normalisation

def power_iteration_norm(w: np.ndarray, v0: np.ndarray | None = None, min_iter: int = 20,
                         max_iter: int = 5000, tol: float = 1e-12) -> tuple[float, np.ndarray]:
    """Largest singular value by power iteration on W^H W.

    Runs at least ``min_iter`` iterations and continues until the estimate
    changes by less than ``tol`` relative. Returns (sigma, right vector).
    """
    w = np.asarray(w)
    n = w.shape[1]
    if v0 is None:
        v0 = np.random.default_rng(12345).standard_normal(n)
        if np.iscomplexobj(w):
            v0 = v0 + 0j
    v = v0 / max(np.linalg.norm(v0), 1e-300)
    sigma = 0.0
    for it in range(max_iter):
        wv = w @ v
        s_new = float(np.linalg.norm(wv))
        if s_new == 0.0:
            return 0.0, v
        v = np.conj(w.T) @ wv
        v /= np.linalg.norm(v)
        if it + 1 >= min_iter and abs(s_new - sigma) <= tol * s_new:
            sigma = s_new
            break
        sigma = s_new
    return float(np.linalg.norm(w @ v)), v


_CAP_SLACK = 1e-10


def spectral_normalize(params: CorrectorParams) -> CorrectorParams:
    """Rescale every latent-path matrix with norm above w_max to norm w_max."""
    arr = params.numpy_arrays()
    norms = []
    for name in params.latent_weight_names():
        if name == "mix":
            m = arr["mix_re"] + 1j * arr["mix_im"]
        else:
            m = arr[name]
        sigma, _ = power_iteration_norm(m)
        # matrices already at the cap (to rounding) are left untouched, so the
        # map is exactly idempotent and an lr=0 update changes nothing
        if sigma > params.w_max * (1 + _CAP_SLACK):
            f = params.w_max / sigma
            if name == "mix":
                arr["mix_re"] = arr["mix_re"] * f
                arr["mix_im"] = arr["mix_im"] * f
            else:
                arr[name] = arr[name] * f
            sigma = params.w_max
        norms.append(sigma)
    return params.with_arrays(arr, layer_norms=norms)


def lipschitz_report(params: CorrectorParams) -> dict:
    """Product of exact layer spectral norms, with and without the GELU factor."""
    prod = 1.0
    for m in params.latent_matrices():
        prod *= float(np.linalg.norm(m, 2)) if m.size else 0.0
    return {"product": prod, "corrected": prod * GELU_LIPSCHITZ ** params.n_gelu,
            "n_layers": len(params.latent_weight_names()), "n_gelu": params.n_gelu}


def lipschitz_bound(params: CorrectorParams, corrected: bool = True) -> float:
    """Upper bound on the Lipschitz constant of latent_forward."""
    r = lipschitz_report(params)
    return r["corrected"] if corrected else r["product"]
