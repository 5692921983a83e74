from app.linalg.subspace import (
    EigenDecomposition,
    column_projector,
    eigendecompose,
    noise_subspace,
    residual_project,
    sample_covariance,
    signal_subspace,
)


__all__ = [
    "EigenDecomposition",
    "column_projector",
    "eigendecompose",
    "noise_subspace",
    "residual_project",
    "sample_covariance",
    "signal_subspace",
]
