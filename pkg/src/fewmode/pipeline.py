"""End-to-end workflow: fit a spectrum, then verify the fitted model.

The pipeline fits the tabulated spectral density, evaluates the fitted
model on the input grid, runs the exact continuum solver on the input
table and the few-mode solver on the fitted parameters for the same
emitter, and reduces the comparison to a machine-readable summary whose
headline number is the maximum emitter-population deviation between the
two routes.  Any failure is re-raised tagged with the stage that caused
it.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io
from .dynamics import (
    AmplitudeTrajectory,
    EmitterSpec,
    solve_fewmode_single_excitation,
    solve_ww_exact,
)
from .errors import StageError, ValidationError
from .fitting import (
    FitConfig,
    FitReport,
    fit_auto,
    fit_interacting,
    fit_noninteracting,
)
from .spectral import SpectralDensityTable, evaluate_jmod
from .tolerances import DEFAULT_TOLERANCES, Tolerances

STAGES = ("fit", "evaluate", "exact-dynamics", "model-dynamics", "summarize")


@dataclass(frozen=True)
class PipelineResult:
    """Everything the fit-and-verify pipeline produced.

    Attributes
    ----------
    report : FitReport
        Outcome of the fitting stage, including the fitted parameters.
    j_fit : SpectralDensityTable
        Fitted model spectral density evaluated on the input grid.
    traj_exact : AmplitudeTrajectory
        Continuum-solver dynamics driven by the input table.
    traj_model : AmplitudeTrajectory
        Few-mode dynamics driven by the fitted parameters.
    summary : dict
        Plain-type comparison record; ``max_population_deviation`` is the
        maximum absolute difference of the two emitter populations.
    """

    report: FitReport
    j_fit: SpectralDensityTable
    traj_exact: AmplitudeTrajectory
    traj_model: AmplitudeTrajectory
    summary: dict


def _run_stage(name, func):
    try:
        return func()
    except Exception as exc:
        raise StageError(name, exc) from exc


def report_payload(report: FitReport) -> dict:
    """Fit report as JSON-ready plain types (parameters excluded)."""
    poles = None
    if report.poles is not None:
        poles = {
            "re_eV": [float(x) for x in report.poles.values.real],
            "im_eV": [float(x) for x in report.poles.values.imag],
            "residue_re": [float(x) for x in report.poles.residues.real],
            "residue_im": [float(x) for x in report.poles.residues.imag],
        }
    return {
        "stage": report.stage,
        "n_modes": int(report.params.n_modes),
        "converged": bool(report.converged),
        "iterations_used": int(report.iterations_used),
        "relative_l2_error": float(report.relative_l2_error),
        "max_pointwise_error": float(report.max_pointwise_error),
        "cost_history": [float(c) for c in report.cost_history],
        "flags": list(report.flags),
        "weight_mode": report.weight_mode,
        "seed": int(report.seed),
        "poles": poles,
    }


def run_pipeline(
    table: SpectralDensityTable,
    *,
    omega_eg: float,
    t_max: float,
    dt: float,
    config: FitConfig | None = None,
    stage: str = "full",
    tol: Tolerances | None = None,
) -> PipelineResult:
    """Fit the table, then compare exact and few-mode emitter dynamics.

    Parameters
    ----------
    table : SpectralDensityTable
        Input spectral density.
    omega_eg : float
        Emitter transition energy in eV for the verification dynamics.
    t_max, dt : float
        Verification time window and step, fs.
    config : FitConfig, optional
        Fit settings; defaults fit interacting modes with auto mode count.
    stage : {'full', 'non-interacting'}
        'non-interacting' stops after the diagonal fit, which documents how
        much the mode-mode couplings matter for the dynamics.
    tol : Tolerances, optional
        Data-hygiene tolerance profile.

    Returns
    -------
    PipelineResult

    Raises
    ------
    StageError
        Wraps the first failing stage; the original exception is attached.
    """
    tol = tol or DEFAULT_TOLERANCES
    config = config or FitConfig()
    if stage not in ("full", "non-interacting"):
        raise ValidationError(f"stage must be 'full' or 'non-interacting', got {stage!r}")

    def _fit():
        if stage == "non-interacting":
            return fit_noninteracting(table, config)
        if config.n_modes == "auto":
            return fit_auto(table, config)
        return fit_interacting(table, config)

    report = _run_stage("fit", _fit)
    j_fit = _run_stage(
        "evaluate", lambda: evaluate_jmod(report.params, table.omega_grid, tol=tol)
    )
    emitter = EmitterSpec(omega_eg=omega_eg)
    traj_exact = _run_stage(
        "exact-dynamics",
        lambda: solve_ww_exact(table, emitter, t_max, dt, fft_history=True, tol=tol),
    )
    traj_model = _run_stage(
        "model-dynamics",
        lambda: solve_fewmode_single_excitation(report.params, emitter, t_max, dt),
    )

    def _summarize():
        deviation = float(
            np.abs(traj_exact.emitter_population - traj_model.emitter_population).max()
        )
        return {
            "max_population_deviation": deviation,
            "n_modes": int(report.params.n_modes),
            "fit_stage": report.stage,
            "converged": bool(report.converged),
            "iterations_used": int(report.iterations_used),
            "relative_l2_error": float(report.relative_l2_error),
            "max_pointwise_error": float(report.max_pointwise_error),
            "flags": list(report.flags),
            "omega_eg_eV": float(omega_eg),
            "t_max_fs": float(t_max),
            "dt_fs": float(dt),
            "n_grid_points": int(table.omega_grid.size),
        }

    summary = _run_stage("summarize", _summarize)
    return PipelineResult(
        report=report,
        j_fit=j_fit,
        traj_exact=traj_exact,
        traj_model=traj_model,
        summary=summary,
    )


def write_artifacts(result: PipelineResult, out_dir) -> dict:
    """Write the pipeline artifacts; returns {name: path written}.

    Nothing is written until every artifact is ready, so a failed run
    leaves no partial output directory behind.
    """
    out = Path(out_dir)
    files = {
        "params": out / "params.json",
        "report": out / "report.json",
        "j_fit": out / "j_fit.csv",
        "traj_exact": out / "traj_exact.csv",
        "traj_model": out / "traj_model.csv",
        "summary": out / "summary.json",
    }
    out.mkdir(parents=True, exist_ok=True)
    io.write_params(files["params"], result.report.params)
    io.write_json(files["report"], report_payload(result.report))
    io.write_spectrum(files["j_fit"], result.j_fit)
    io.write_trajectory(files["traj_exact"], result.traj_exact)
    io.write_trajectory(files["traj_model"], result.traj_model)
    io.write_json(files["summary"], result.summary)
    return {name: str(path) for name, path in files.items()}
