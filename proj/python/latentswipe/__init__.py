"""Python bindings for the latentswipe core library."""

from ._latentswipe import (
    BanditState,
    ExperimentConfig,
    Interval,
    LaplaceOptions,
    PreferenceModel,
    ProceduralGenerator,
    Session,
    SessionConfig,
    SimilarityOracle,
    SubspaceMap,
    fit_subspace,
    moving_average,
    run_experiment,
    __version__,
)

__all__ = [
    "BanditState",
    "ExperimentConfig",
    "Interval",
    "LaplaceOptions",
    "PreferenceModel",
    "ProceduralGenerator",
    "Session",
    "SessionConfig",
    "SimilarityOracle",
    "SubspaceMap",
    "fit_subspace",
    "moving_average",
    "run_experiment",
]
