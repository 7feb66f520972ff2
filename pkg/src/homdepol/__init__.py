"""Telling true depolarization from fast random polarization rotations with HOM interference."""

from .coherent import (
    CoherentPulse,
    EstimationError,
    VisibilityEstimate,
    analytic_visibility_low_mu,
    coherent_pair_click_probability,
    max_visibility,
    model_visibility,
    run_visibility_experiment,
    visibility_surface,
)
from .discriminator import (
    ConclusiveRandomRotation,
    InconclusiveAtMaximum,
    InconclusiveInsufficientPrecision,
    InconclusiveNoEvidence,
    OutOfModelError,
    coherent_verdict,
    estimate_alpha0,
    required_pairs,
    single_photon_verdict,
)
from .fock import (
    DetectorParams,
    FockSuperposition,
    beamsplitter_transform,
    coincidence_with_losses,
    hom_coincidence_probability,
    simulate_fock_experiment,
)
from .polarization import (
    DensityMatrix,
    IdealDepolarizing,
    Pairing,
    PolarizationState,
    RandomRotation,
    TemporalProfile,
    TimeEntanglement,
    apply_channel,
    apply_ideal_depolarizing,
    apply_random_rotation_mixture,
    apply_time_entanglement_channel,
    dop,
    gaussian_overlap,
    sample_rotation,
)
from .rng import RandomStreams

__version__ = "0.1.0"

__all__ = [
    "CoherentPulse",
    "EstimationError",
    "VisibilityEstimate",
    "analytic_visibility_low_mu",
    "coherent_pair_click_probability",
    "max_visibility",
    "model_visibility",
    "run_visibility_experiment",
    "visibility_surface",
    "ConclusiveRandomRotation",
    "InconclusiveAtMaximum",
    "InconclusiveInsufficientPrecision",
    "InconclusiveNoEvidence",
    "OutOfModelError",
    "coherent_verdict",
    "estimate_alpha0",
    "required_pairs",
    "single_photon_verdict",
    "DetectorParams",
    "FockSuperposition",
    "beamsplitter_transform",
    "coincidence_with_losses",
    "hom_coincidence_probability",
    "simulate_fock_experiment",
    "DensityMatrix",
    "IdealDepolarizing",
    "Pairing",
    "PolarizationState",
    "RandomRotation",
    "TemporalProfile",
    "TimeEntanglement",
    "apply_channel",
    "apply_ideal_depolarizing",
    "apply_random_rotation_mixture",
    "apply_time_entanglement_channel",
    "dop",
    "gaussian_overlap",
    "sample_rotation",
    "RandomStreams",
]
