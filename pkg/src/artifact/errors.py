"""Exception types shared across the package."""


class ArtifactError(Exception):
    """Base class for user-facing errors."""


class DimensionError(ArtifactError, ValueError):
    """Array length or grid size mismatch."""


class ConsistencyError(ArtifactError, ValueError):
    """Data violates a type invariant (e.g. Hermitian symmetry)."""


class ArityError(ArtifactError, ValueError):
    """Wrong number of wavenumber inputs for a phase function."""


class ConfigError(ArtifactError, ValueError):
    """Invalid run configuration or violated solver precondition."""


class DivergenceError(ArtifactError, RuntimeError):
    """Iteration failed to converge or produced non-finite values."""

    def __init__(self, message, residual=None, step_index=None):
        super().__init__(message)
        self.residual = residual
        self.step_index = step_index


class IntegrityError(ArtifactError, ValueError):
    """Checkpoint corruption, truncation or hash mismatch."""


class UnsupportedVersionError(IntegrityError):
    """Checkpoint major version not understood by this reader."""


class RankDeficiencyError(ArtifactError, ValueError):
    """Requested basis size exceeds the numerical rank of the snapshots."""
