"""Command-line interface.

Subcommands: fit, eval, poles, dynamics, field, pipeline.  All artifacts
are plain CSV/JSON and re-ingest losslessly through :mod:`fewmode.io`.

Exit codes are a stable contract: 0 success, 1 usage or IO error, 2
flagged numerical non-convergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from contextlib import nullcontext
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, io
from .dynamics import (
    EmitterSpec,
    solve_fewmode_single_excitation,
    solve_ww_exact,
    tilde_populations,
    tilde_transform,
)
from .errors import (
    FewmodeError,
    NumericalError,
    StageError,
    ValidationError,
)
from .field import compute_kernel, emitter_correlation, field_intensity, intensity_map
from .fitting import FitConfig, fit_auto, fit_interacting, fit_noninteracting
from .pipeline import report_payload, run_pipeline, write_artifacts
from .spectral import compute_poles, evaluate_jmod
from .synthetic import demo_model, demo_spectrum, sampling_grid
from .tolerances import Tolerances, resolve_profile

_LOG = logging.getLogger("fewmode")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2

_LOG_LEVELS = ("debug", "info", "warning", "error")


@dataclass(frozen=True)
class RunConfig:
    """Global options shared by every subcommand."""

    tol_profile: str = "default"
    threads: int | str = "auto"
    log_level: str = "warning"
    json_errors: bool = False

    def __post_init__(self):
        resolve_profile(self.tol_profile)
        if self.threads != "auto":
            if not isinstance(self.threads, int) or self.threads < 1:
                raise ValidationError(
                    f"threads must be a positive integer or 'auto', got {self.threads!r}"
                )
        if self.log_level not in _LOG_LEVELS:
            raise ValidationError(f"unknown log level: {self.log_level!r}")

    @property
    def tolerances(self) -> Tolerances:
        return resolve_profile(self.tol_profile)


def _n_modes_arg(text: str):
    if text == "auto":
        return "auto"
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected an integer or 'auto', got {text!r}"
        ) from None


def _threads_arg(text: str):
    if text == "auto":
        return "auto"
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected an integer or 'auto', got {text!r}"
        ) from None


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not np.isfinite(value) or value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _float_list(text: str) -> list[float]:
    try:
        return [float(cell) for cell in text.split(",") if cell.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated numbers, got {text!r}"
        ) from None


def _add_fit_options(sub):
    sub.add_argument("--n-modes", type=_n_modes_arg, default="auto",
                     help="mode count, or 'auto' to scan upward from the peak count")
    sub.add_argument("--stage", choices=("non-interacting", "full"), default="full",
                     help="stop after the diagonal fit, or release the couplings")
    sub.add_argument("--weight", choices=("uniform", "relative", "log"),
                     default="relative", help="residual weighting")
    sub.add_argument("--seed", type=int, default=0, help="restart-perturbation seed")
    sub.add_argument("--restarts", type=int, default=0,
                     help="extra perturbed starts; the best final cost wins")
    sub.add_argument("--max-iterations", type=int, default=2000,
                     help="accepted-step budget per optimizer stage")


def _add_demo_source(sub, what: str):
    sub.add_argument("spectrum", nargs="?", default=None,
                     help=f"input spectrum CSV ({what})")
    sub.add_argument("--demo", action="store_true",
                     help="use the built-in synthetic six-mode demo spectrum")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fewmode",
        description="Fit spectral densities with few interacting lossy modes, "
                    "solve emitter dynamics, and reconstruct field intensities.",
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    parser.add_argument("--tol-profile", choices=("default", "strict"),
                        default="default", help="data-hygiene tolerance profile")
    parser.add_argument("--threads", type=_threads_arg, default="auto",
                        help="cap BLAS/LAPACK threads, or 'auto' to leave them alone")
    parser.add_argument("--log-level", choices=_LOG_LEVELS, default="warning")
    parser.add_argument("--json-errors", action="store_true",
                        help="report errors as one JSON object on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit a spectrum CSV to model parameters")
    _add_demo_source(p_fit, "header omega_eV,J_eV")
    _add_fit_options(p_fit)
    p_fit.add_argument("--out", required=True, help="output parameters JSON")
    p_fit.add_argument("--report", default=None, help="optional fit-report JSON")

    p_eval = sub.add_parser("eval", help="evaluate fitted parameters to a J(w) table")
    p_eval.add_argument("--params", required=True, help="parameters JSON")
    p_eval.add_argument("--out", required=True, help="output spectrum CSV")
    p_eval.add_argument("--omega-min", type=float, default=None,
                        help="grid start in eV (default: span the resonances)")
    p_eval.add_argument("--omega-max", type=float, default=None,
                        help="grid end in eV")
    p_eval.add_argument("--points", type=int, default=4001, help="grid size")

    p_poles = sub.add_parser("poles", help="compute model poles and residues")
    p_poles.add_argument("--params", required=True, help="parameters JSON")
    p_poles.add_argument("--out", required=True,
                         help="output CSV re_eV,im_eV,residue_re,residue_im")

    p_dyn = sub.add_parser("dynamics", help="single-excitation emitter dynamics")
    p_dyn.add_argument("--params", default=None,
                       help="parameters JSON for the few-mode solver")
    p_dyn.add_argument("--spectrum", default=None,
                       help="spectrum CSV for the exact continuum solver")
    p_dyn.add_argument("--exact", action="store_true",
                       help="solve the tabulated continuum instead of the model")
    p_dyn.add_argument("--demo", action="store_true",
                       help="use the built-in demo model (or demo spectrum with --exact)")
    p_dyn.add_argument("--omega-eg", type=_positive_float, required=True,
                       help="emitter transition energy in eV")
    p_dyn.add_argument("--tmax", type=_positive_float, required=True,
                       help="time window in fs")
    p_dyn.add_argument("--dt", type=_positive_float, required=True,
                       help="time step in fs")
    p_dyn.add_argument("--out", required=True, help="output trajectory CSV")
    p_dyn.add_argument("--tilde", action="store_true",
                       help="append normal-mode (tilde) populations; model solver only")

    p_field = sub.add_parser("field", help="reconstruct emitted field intensity")
    p_field.add_argument("--params", default=None, help="parameters JSON")
    p_field.add_argument("--demo", action="store_true",
                         help="use the built-in demo model parameters")
    p_field.add_argument("--green", required=True,
                         help="Green's-function table CSV")
    p_field.add_argument("--mu", type=_positive_float, required=True,
                         help="transition dipole moment in e nm")
    p_field.add_argument("--omega-eg", type=_positive_float, required=True,
                         help="emitter transition energy in eV")
    p_field.add_argument("--tmax", type=_positive_float, required=True,
                         help="time window in fs")
    p_field.add_argument("--dt", type=_positive_float, required=True,
                         help="time step in fs")
    p_field.add_argument("--points", default="all",
                         help="'all' or comma-separated point ids")
    p_field.add_argument("--out", required=True,
                         help="output CSV (trace table, or raster stem with --map)")
    p_field.add_argument("--map", action="store_true",
                         help="emit one spatial raster CSV per requested time")
    p_field.add_argument("--times", type=_float_list, default=None,
                         help="comma-separated snapshot times in fs (with --map)")
    p_field.add_argument("--normalize", action="store_true",
                         help="normalize each map point by its own temporal maximum")

    p_pipe = sub.add_parser("pipeline",
                            help="fit, then verify the model against the exact solver")
    _add_demo_source(p_pipe, "fit input")
    _add_fit_options(p_pipe)
    p_pipe.add_argument("--out-dir", required=True, help="artifact directory")
    p_pipe.add_argument("--omega-eg", type=_positive_float, required=True,
                        help="emitter transition energy in eV")
    p_pipe.add_argument("--tmax", type=_positive_float, default=500.0,
                        help="verification window in fs")
    p_pipe.add_argument("--dt", type=_positive_float, default=0.5,
                        help="verification step in fs")

    return parser


def _fit_config(args) -> FitConfig:
    return FitConfig(
        n_modes=args.n_modes,
        max_iterations=args.max_iterations,
        weight_mode=args.weight,
        seed=args.seed,
        restarts=args.restarts,
    )


def _load_spectrum_source(args, run: RunConfig):
    """Spectrum table from the positional path or --demo, never both."""
    if args.demo and args.spectrum:
        raise ValidationError("give a spectrum file or --demo, not both")
    if args.demo:
        table, _ = demo_spectrum()
        return table
    if not args.spectrum:
        raise ValidationError("a spectrum file (or --demo) is required")
    return io.read_spectrum(args.spectrum, tol=run.tolerances)


def _run_fit_stage(table, config: FitConfig, stage: str):
    if stage == "non-interacting":
        return fit_noninteracting(table, config)
    if config.n_modes == "auto":
        return fit_auto(table, config)
    return fit_interacting(table, config)


def _cmd_fit(args, run: RunConfig) -> int:
    table = _load_spectrum_source(args, run)
    config = _fit_config(args)
    report = _run_fit_stage(table, config, args.stage)
    io.write_params(args.out, report.params)
    if args.report:
        io.write_json(args.report, report_payload(report))
    print(
        f"fit: stage={report.stage} n_modes={report.params.n_modes} "
        f"rel_l2={report.relative_l2_error:.3e} converged={report.converged}"
    )
    return EXIT_OK if report.converged else EXIT_NUMERICAL


def _cmd_eval(args, run: RunConfig) -> int:
    params = io.read_params(args.params)
    if (args.omega_min is None) != (args.omega_max is None):
        raise ValidationError("--omega-min and --omega-max must be given together")
    if args.points < 2:
        raise ValidationError("--points must be at least 2")
    if args.omega_min is None:
        grid = sampling_grid(params, n_points=args.points)
    else:
        if not args.omega_min < args.omega_max:
            raise ValidationError("--omega-min must be below --omega-max")
        grid = np.linspace(args.omega_min, args.omega_max, args.points)
    table = evaluate_jmod(params, grid, tol=run.tolerances)
    io.write_spectrum(args.out, table)
    return EXIT_OK


def _cmd_poles(args, run: RunConfig) -> int:
    params = io.read_params(args.params)
    poles = compute_poles(params, tol=run.tolerances)
    io.write_poles(args.out, poles)
    return EXIT_OK


def _cmd_dynamics(args, run: RunConfig) -> int:
    emitter = EmitterSpec(omega_eg=args.omega_eg)
    if args.exact:
        if args.params:
            raise ValidationError(
                "--exact solves a tabulated spectrum; --params selects the "
                "few-mode solver, choose one route"
            )
        if args.tilde:
            raise ValidationError(
                "tilde populations need mode amplitudes; the continuum solver has none"
            )
        if args.demo and args.spectrum:
            raise ValidationError("give --spectrum or --demo, not both")
        if args.demo:
            table, _ = demo_spectrum()
        elif args.spectrum:
            table = io.read_spectrum(args.spectrum, tol=run.tolerances)
        else:
            raise ValidationError("--exact needs --spectrum or --demo")
        traj = solve_ww_exact(table, emitter, args.tmax, args.dt,
                              fft_history=True, tol=run.tolerances)
        io.write_trajectory(args.out, traj)
        return EXIT_OK
    if args.spectrum:
        raise ValidationError("--spectrum is the exact continuum route; add --exact")
    if args.demo and args.params:
        raise ValidationError("give --params or --demo, not both")
    if args.demo:
        params = demo_model()
    elif args.params:
        params = io.read_params(args.params)
    else:
        raise ValidationError("the few-mode solver needs --params or --demo")
    traj = solve_fewmode_single_excitation(params, emitter, args.tmax, args.dt)
    tilde = None
    if args.tilde:
        tilde = tilde_populations(traj, tilde_transform(params))
    io.write_trajectory(args.out, traj, tilde_pops=tilde)
    return EXIT_OK


def _raster_path(out: str, t_fs: float) -> Path:
    base = Path(out)
    suffix = base.suffix or ".csv"
    return base.with_name(f"{base.stem}_t{t_fs:g}fs{suffix}")


def _cmd_field(args, run: RunConfig) -> int:
    if args.demo and args.params:
        raise ValidationError("give --params or --demo, not both")
    if args.demo:
        params = demo_model()
    elif args.params:
        params = io.read_params(args.params)
    else:
        raise ValidationError("field reconstruction needs --params or --demo")
    gtable = io.read_green_table(args.green)
    if args.points != "all":
        ids = [cell.strip() for cell in args.points.split(",") if cell.strip()]
        if not ids:
            raise ValidationError("--points must be 'all' or a comma-separated id list")
        gtable = gtable.select(ids)
    emitter = EmitterSpec(omega_eg=args.omega_eg)
    corr = emitter_correlation(params, emitter, args.tmax, args.dt, mu=args.mu)
    kernels = compute_kernel(gtable, args.tmax, args.dt)
    if args.map:
        if not args.times:
            raise ValidationError("--map needs --times t1,t2,...")
        snapshots = intensity_map(kernels, corr, args.times,
                                  normalize=args.normalize)
        for k, t_fs in enumerate(snapshots.times):
            io.write_intensity_raster(_raster_path(args.out, t_fs), snapshots, k)
        return EXIT_OK
    if args.times or args.normalize:
        raise ValidationError("--times and --normalize apply to --map only")
    traces = field_intensity(kernels, corr)
    io.write_intensity_traces(args.out, traces)
    return EXIT_OK


def _cmd_pipeline(args, run: RunConfig) -> int:
    table = _load_spectrum_source(args, run)
    result = run_pipeline(
        table,
        omega_eg=args.omega_eg,
        t_max=args.tmax,
        dt=args.dt,
        config=_fit_config(args),
        stage=args.stage,
        tol=run.tolerances,
    )
    write_artifacts(result, args.out_dir)
    print(json.dumps(result.summary, indent=2))
    return EXIT_OK if result.report.converged else EXIT_NUMERICAL


_COMMANDS = {
    "fit": _cmd_fit,
    "eval": _cmd_eval,
    "poles": _cmd_poles,
    "dynamics": _cmd_dynamics,
    "field": _cmd_field,
    "pipeline": _cmd_pipeline,
}


def _thread_limits(threads):
    if threads == "auto":
        return nullcontext()
    import threadpoolctl

    return threadpoolctl.threadpool_limits(limits=threads)


def _emit_error(json_mode: bool, kind: str, message: str) -> None:
    if json_mode:
        payload = {"error": {"type": kind, "message": message}}
        print(json.dumps(payload), file=sys.stderr)
    else:
        print(f"fewmode: error: {message}", file=sys.stderr)


def _classify(exc: BaseException) -> tuple[int, str]:
    original = exc.original if isinstance(exc, StageError) else exc
    if isinstance(original, NumericalError):
        return EXIT_NUMERICAL, "numerical"
    if isinstance(original, ValidationError):
        return EXIT_USAGE, "validation"
    if isinstance(original, OSError):
        return EXIT_USAGE, "io"
    return EXIT_USAGE, "error"


def main(argv=None) -> int:
    raw = list(sys.argv[1:] if argv is None else argv)
    json_errors = "--json-errors" in raw
    parser = build_parser()
    try:
        args = parser.parse_args(raw)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 0
        if code == 0:
            return EXIT_OK
        # argparse already printed its diagnostic to stderr
        _emit_error(json_errors, "usage", "invalid command line; see --help")
        return EXIT_USAGE
    run = RunConfig(
        tol_profile=args.tol_profile,
        threads=args.threads,
        log_level=args.log_level,
        json_errors=args.json_errors,
    )
    logging.basicConfig(level=getattr(logging, run.log_level.upper()))
    try:
        with _thread_limits(run.threads):
            return _COMMANDS[args.command](args, run)
    except (FewmodeError, OSError) as exc:
        code, kind = _classify(exc)
        _emit_error(run.json_errors, kind, str(exc))
        return code


if __name__ == "__main__":
    raise SystemExit(main())
