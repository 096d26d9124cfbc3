"""Coverage criteria for neural-network test suites.

Activation traces in, coverage values out: the covariance-score family
(batch and only-increase incremental, plus determinant / trace / spectral
variants) next to the discrete per-neuron baselines, an axiom harness
that probes any criterion for monotonicity and order independence, and
desk-scale study tooling (layer dominance, noise suites, spectrum
diversity). The ``nncov`` CLI binds it all together.
"""

from . import axioms, criteria, experiments, linalg, toynet, trace
from ._kernels import BACKEND as KERNEL_BACKEND
from .criteria import CriterionResult, make_criterion, registered_names
from .linalg import CovarianceAccumulator, SpectralSummary, l1_norm, spectral_summary
from .trace import (
    ActivationTrace,
    LayerTrace,
    SuiteView,
    TrainingProfile,
    profile_training,
    trace_load,
    trace_save,
)

__version__ = "0.1.0"

__all__ = [
    "ActivationTrace",
    "CovarianceAccumulator",
    "CriterionResult",
    "KERNEL_BACKEND",
    "LayerTrace",
    "SpectralSummary",
    "SuiteView",
    "TrainingProfile",
    "axioms",
    "criteria",
    "experiments",
    "l1_norm",
    "linalg",
    "make_criterion",
    "profile_training",
    "registered_names",
    "spectral_summary",
    "toynet",
    "trace",
    "trace_load",
    "trace_save",
]
