"""Two-photon conditional imaging: detection-first pipeline plus a
forward Bayes oracle that must agree with it everywhere."""

from .elements import (
    DetectorProfile,
    FourierLens,
    Mask,
    Propagate,
    QuadraticPhase,
    apply_backward,
    apply_chain_backward,
    apply_chain_forward,
    apply_forward,
    materialize_detector,
)
from .errors import (
    BiphotonError,
    ConfigError,
    DarkConditionalError,
    EdgeLeakageError,
    GridError,
    SamplingGuardError,
    SweepError,
    ZeroOutcomeError,
)
from .grid import (
    Field,
    TransverseGrid,
    convolve,
    dft,
    edge_energy_fraction,
    idft,
    make_grid,
    scaled_dft,
    scaled_idft,
    spectrum,
)
from .predict import (
    JointDistribution,
    conditional_from_joint,
    evolve_joint,
    joint_distribution,
    joint_for_setup,
    marginal_arm2,
    mutual_information_bits,
)
from .retrodict import (
    ConditionalDistribution,
    ImagingSetup,
    RetrodictiveResult,
    run_retrodictive,
    sweep_conditioning,
)
from .source import BiphotonField, condition, make_biphoton_delta_correlated

__version__ = "0.1.0"

__all__ = [
    "BiphotonError",
    "BiphotonField",
    "ConditionalDistribution",
    "ConfigError",
    "DarkConditionalError",
    "DetectorProfile",
    "EdgeLeakageError",
    "Field",
    "FourierLens",
    "GridError",
    "ImagingSetup",
    "JointDistribution",
    "Mask",
    "Propagate",
    "QuadraticPhase",
    "RetrodictiveResult",
    "SamplingGuardError",
    "SweepError",
    "TransverseGrid",
    "ZeroOutcomeError",
    "apply_backward",
    "apply_chain_backward",
    "apply_chain_forward",
    "apply_forward",
    "condition",
    "conditional_from_joint",
    "convolve",
    "dft",
    "edge_energy_fraction",
    "evolve_joint",
    "idft",
    "joint_distribution",
    "joint_for_setup",
    "make_biphoton_delta_correlated",
    "make_grid",
    "marginal_arm2",
    "materialize_detector",
    "mutual_information_bits",
    "run_retrodictive",
    "scaled_dft",
    "scaled_idft",
    "spectrum",
    "sweep_conditioning",
]
