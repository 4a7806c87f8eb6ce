"""Few interacting lossy modes for structured photonic environments.

The package fits tabulated spectral densities J(w) with the response of a
small network of coupled lossy modes, solves the resulting single-excitation
emitter dynamics (with an exact continuum solver as the reference), and
reconstructs emitted field intensities from Green's-function tables.

Quick start::

    import numpy as np
    from fewmode import (
        FitConfig, fit_auto, EmitterSpec,
        solve_fewmode_single_excitation, solve_ww_exact,
    )
    from fewmode.io import read_spectrum

    table = read_spectrum("spectrum.csv")
    report = fit_auto(table, FitConfig())
    emitter = EmitterSpec(omega_eg=1.4)
    traj = solve_fewmode_single_excitation(report.params, emitter, 500.0, 0.5)
"""

from .constants import (
    C_NM_FS,
    HBAR_EV_FS,
    INTENSITY_W_PER_M2,
    KERNEL_V_PER_M,
    free_space_spectral_density,
    fs_to_internal,
    internal_to_fs,
)
from .dynamics import (
    AmplitudeTrajectory,
    EmitterSpec,
    ExpectationTraces,
    TildeBasis,
    solve_fewmode_single_excitation,
    solve_lindblad_dense,
    solve_ww_exact,
    tilde_populations,
    tilde_transform,
)
from .errors import (
    CoverageWarning,
    DataWarning,
    FewmodeError,
    NumericalError,
    ParseError,
    StageError,
    UnsupportedScenarioError,
    ValidationError,
)
from .field import (
    CorrelationTable,
    FieldKernelTable,
    GreensFunctionTable,
    IntensityMap,
    IntensityTraces,
    compute_kernel,
    emitter_correlation,
    field_intensity,
    intensity_map,
)
from .fitting import (
    FitConfig,
    FitReport,
    Peak,
    detect_peaks,
    fit_auto,
    fit_interacting,
    fit_noninteracting,
    init_noninteracting,
    report_errors,
)
from .pipeline import PipelineResult, run_pipeline
from .spectral import (
    EffectiveHamiltonian,
    ModelParameters,
    PoleSet,
    SpectralDensityTable,
    build_effective_hamiltonian,
    compute_poles,
    evaluate_jmod,
    evaluate_lorentzian_sum,
    purcell_factor,
)
from .tolerances import DEFAULT_TOLERANCES, Tolerances, resolve_profile

__version__ = "0.1.0"

__all__ = [
    "AmplitudeTrajectory",
    "C_NM_FS",
    "CorrelationTable",
    "CoverageWarning",
    "DEFAULT_TOLERANCES",
    "DataWarning",
    "EffectiveHamiltonian",
    "EmitterSpec",
    "ExpectationTraces",
    "FewmodeError",
    "FieldKernelTable",
    "FitConfig",
    "FitReport",
    "GreensFunctionTable",
    "HBAR_EV_FS",
    "INTENSITY_W_PER_M2",
    "IntensityMap",
    "IntensityTraces",
    "KERNEL_V_PER_M",
    "ModelParameters",
    "NumericalError",
    "ParseError",
    "Peak",
    "PipelineResult",
    "PoleSet",
    "SpectralDensityTable",
    "StageError",
    "TildeBasis",
    "Tolerances",
    "UnsupportedScenarioError",
    "ValidationError",
    "build_effective_hamiltonian",
    "compute_kernel",
    "compute_poles",
    "detect_peaks",
    "emitter_correlation",
    "evaluate_jmod",
    "evaluate_lorentzian_sum",
    "field_intensity",
    "fit_auto",
    "fit_interacting",
    "fit_noninteracting",
    "free_space_spectral_density",
    "fs_to_internal",
    "init_noninteracting",
    "intensity_map",
    "internal_to_fs",
    "purcell_factor",
    "report_errors",
    "run_pipeline",
    "solve_fewmode_single_excitation",
    "solve_lindblad_dense",
    "solve_ww_exact",
    "tilde_populations",
    "tilde_transform",
    "__version__",
]
