"""Reduced-order model identification from frequency scans and
eigenvalue-based small-signal stability analysis.

The workflow runs scan data through adaptive rational fitting
(:func:`fit_adaptive`), realizes the result as a state-space model
(:func:`realize_siso`, :func:`assemble_mimo`), reduces it by balanced
truncation (:func:`balance`, :func:`truncate`), composes it with
white-box models (:func:`compose`), and analyzes the closed system's
modes (:func:`eigendecompose`, :func:`participation_matrix`,
:func:`sensitivity_sweep`).
"""

from ._kernels import BACKEND
from .adaptive import FitConfig, FitTrace, RoundRecord, fit_adaptive
from .composition import (
    CompositionPlan,
    Connection,
    PortRef,
    Subsystem,
    SweepPoint,
    SweepResult,
    compose,
    load_plan,
    save_plan,
    scale_subsystem,
    sensitivity_sweep,
)
from .errors import (
    AlgebraicLoopError,
    IllConditionedError,
    ModelFormatError,
    PlanError,
    ScanFormatError,
    ScanfitError,
    SingularFrequencyError,
    UnstableSystemError,
    VectorFitError,
)
from .modal import (
    Eigendecomposition,
    ModeRecord,
    ParticipationMatrix,
    classify_state,
    dominance,
    eigendecompose,
    modal_residue,
    modal_step_response,
    modal_transform,
    mode_records,
    modes_csv,
    participation_csv,
    participation_matrix,
)
from .realization import (
    StateSpaceModel,
    assemble_mimo,
    eval_tf,
    frequency_response,
    load_model,
    realize_complex_pair,
    realize_real_pole,
    realize_siso,
    save_model,
)
from .reduction import BalancedModel, balance, gramians, hsv_csv, truncate
from .scans import (
    ChannelLabels,
    FrequencyScan,
    NyquistReport,
    SisoResponse,
    extract_siso,
    load_scan,
    validate_nyquist,
    write_scan,
)
from .synthetic import (
    SyntheticPlant,
    random_rational_model,
    random_stable_system,
    reference_converter_plant,
    sample_response,
    step_response_rk4,
)
from .vfit import (
    PoleSet,
    RationalModel,
    enforce_stability,
    initial_poles,
    relative_weights,
    rms_error,
    vf_iteration,
)

__version__ = "0.1.0"

__all__ = [
    "AlgebraicLoopError",
    "BACKEND",
    "BalancedModel",
    "ChannelLabels",
    "CompositionPlan",
    "Connection",
    "Eigendecomposition",
    "FitConfig",
    "FitTrace",
    "FrequencyScan",
    "IllConditionedError",
    "ModeRecord",
    "ModelFormatError",
    "NyquistReport",
    "ParticipationMatrix",
    "PlanError",
    "PoleSet",
    "PortRef",
    "RationalModel",
    "RoundRecord",
    "ScanFormatError",
    "ScanfitError",
    "SingularFrequencyError",
    "SisoResponse",
    "StateSpaceModel",
    "Subsystem",
    "SweepPoint",
    "SweepResult",
    "SyntheticPlant",
    "UnstableSystemError",
    "VectorFitError",
    "assemble_mimo",
    "balance",
    "classify_state",
    "compose",
    "dominance",
    "eigendecompose",
    "enforce_stability",
    "eval_tf",
    "extract_siso",
    "fit_adaptive",
    "frequency_response",
    "gramians",
    "hsv_csv",
    "initial_poles",
    "load_model",
    "load_plan",
    "load_scan",
    "modal_residue",
    "modal_step_response",
    "modal_transform",
    "mode_records",
    "modes_csv",
    "participation_csv",
    "participation_matrix",
    "random_rational_model",
    "random_stable_system",
    "realize_complex_pair",
    "realize_real_pole",
    "realize_siso",
    "reference_converter_plant",
    "relative_weights",
    "rms_error",
    "sample_response",
    "save_model",
    "save_plan",
    "scale_subsystem",
    "sensitivity_sweep",
    "step_response_rk4",
    "truncate",
    "validate_nyquist",
    "vf_iteration",
    "write_scan",
    "__version__",
]
