"""Hybrid resonance-based integrators with a learned latent correction.

Spectral building blocks, dispersive model equations, classical and
low-regularity integrators, the hybrid neural-corrected solver, its
solver-in-the-loop training, and the verification diagnostics.
"""
from .errors import (ArityError, ArtifactError, ConfigError, ConsistencyError, DimensionError,
                     DivergenceError, IntegrityError, RankDeficiencyError, UnsupportedVersionError)
from .spectral_core import (DispersionSymbol, Grid1D, SpectralField, antiderivative, dealias,
                            mean_zero_project, propagate_linear, resample, spectral_derivative,
                            to_physical, to_spectral)
from .equations import EquationKind, EquationSpec, hamiltonian, mass, nonlinearity, resonance_phase
from .rough_data import RoughFieldSpec, ood_profile, sample_rough_field
from .integrators import (IntegratorKind, PicardConfig, measure_defect, phi1, reference_solve,
                          step)
from .latent_corrector import (CorrectorParams, TrunkBasis, apply_scaling, build_trunk_basis,
                               init_corrector, latent_forward, lipschitz_bound, prolong, restrict,
                               scale_estimate, spectral_normalize)
from .hinlri_solver import HinLriConfig, hinlri_step, solve
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
