"""Two-stage least-squares fits of tabulated spectral densities.

Stage one fits a non-interacting sum of Lorentzians (diagonal mode matrix);
stage two releases the off-diagonal mode couplings and refits everything.
The optimizer is a damped Gauss-Newton (Levenberg-Marquardt) loop written
here so that the accepted-step cost history, strict-decrease acceptance,
and bit-reproducibility are part of the contract.  Loss rates and couplings
are optimized in log space, which keeps them positive structurally; the
analytic Jacobian falls out of the resolvent identity
d(H - w)^(-1) = -(H - w)^(-1) dH (H - w)^(-1), so one linear solve per
frequency yields both the model value and every derivative.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import signal

from .errors import NumericalError, ValidationError
from .spectral import (
    ModelParameters,
    PoleSet,
    SpectralDensityTable,
    build_effective_hamiltonian,
    compute_poles,
    evaluate_jmod,
    resolvent_vectors,
)

__all__ = [
    "FitConfig",
    "Peak",
    "FitReport",
    "detect_peaks",
    "init_noninteracting",
    "fit_noninteracting",
    "fit_interacting",
    "fit_auto",
    "report_errors",
]

_LOG_BOUND = 60.0          # |log kappa|, |log g| ceiling
_MODE_CEILING = 64


@dataclass(frozen=True)
class FitConfig:
    """Configuration for the spectral-density fits.

    Attributes
    ----------
    n_modes : int or 'auto'
        Number of environment modes.  'auto' lets :func:`fit_auto` scan
        upward from the detected peak count.
    max_iterations : int
        Accepted-step budget for each optimizer stage.
    relative_tolerance : float
        Convergence threshold on the relative cost decrease of an accepted
        step.
    weight_mode : {'uniform', 'relative', 'log'}
        Residual weighting.  'relative' divides by (J_data + 0.01 max J);
        'log' fits log(J + delta) with delta = 1e-4 max J.
    peak_prominence : float
        Peak-detection prominence threshold as a fraction of max J.
    seed : int
        Seed for the (deterministic) restart perturbations.
    auto_target : float
        Relative L2 error at which :func:`fit_auto` stops adding modes.
    max_auto_modes : int
        Mode-count ceiling for :func:`fit_auto`.
    restarts : int
        Extra perturbed starts for the interacting stage; best result wins.
    use_fd_jacobian : bool
        Replace the analytic Jacobian with central finite differences
        (cross-checking aid; much slower).
    """

    n_modes: int | str = "auto"
    max_iterations: int = 2000
    relative_tolerance: float = 1e-10
    weight_mode: str = "relative"
    peak_prominence: float = 0.01
    seed: int = 0
    auto_target: float = 1e-6
    max_auto_modes: int = _MODE_CEILING
    restarts: int = 0
    use_fd_jacobian: bool = False

    def __post_init__(self):
        if self.n_modes != "auto":
            if not isinstance(self.n_modes, (int, np.integer)) or isinstance(self.n_modes, bool):
                raise ValidationError(f"n_modes must be an int or 'auto', got {self.n_modes!r}")
            if not 1 <= self.n_modes <= _MODE_CEILING:
                raise ValidationError(f"n_modes must be in [1, {_MODE_CEILING}], got {self.n_modes}")
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be >= 1")
        if not 0 < self.relative_tolerance < 1:
            raise ValidationError("relative_tolerance must be in (0, 1)")
        if self.weight_mode not in ("uniform", "relative", "log"):
            raise ValidationError(f"unknown weight_mode: {self.weight_mode!r}")
        if not 0 < self.peak_prominence < 1:
            raise ValidationError("peak_prominence must be in (0, 1)")
        if not 1 <= self.max_auto_modes <= _MODE_CEILING:
            raise ValidationError(f"max_auto_modes must be in [1, {_MODE_CEILING}]")
        if self.restarts < 0:
            raise ValidationError("restarts must be >= 0")


@dataclass(frozen=True)
class Peak:
    """A detected spectral peak with parabolic sub-grid refinement."""

    position: float     # eV
    height: float       # eV
    curvature: float    # eV^-1, second derivative at the vertex (<= 0)
    prominence: float   # eV


@dataclass(frozen=True)
class FitReport:
    """Outcome of one fit stage.

    ``cost_history`` holds the weighted cost of the start point followed by
    every accepted optimizer step, so it is non-increasing by construction.
    ``relative_l2_error`` and ``max_pointwise_error`` are unweighted:
    ||J_fit - J_data||_2 / ||J_data||_2 and max|J_fit - J_data| / max(J_data).
    """

    params: ModelParameters
    stage: str
    converged: bool
    iterations_used: int
    relative_l2_error: float
    max_pointwise_error: float
    cost_history: np.ndarray
    poles: PoleSet | None
    flags: tuple[str, ...]
    weight_mode: str
    seed: int

    def __post_init__(self):
        h = np.array(self.cost_history, dtype=float, copy=True)
        if h.ndim != 1 or h.size < 1:
            raise ValidationError("cost_history must be a non-empty 1-d array")
        if not np.all(np.isfinite(h)):
            raise ValidationError("cost_history contains non-finite entries")
        if np.any(np.diff(h) > 0):
            raise ValidationError("cost_history must be non-increasing")
        if self.stage not in ("non-interacting", "interacting"):
            raise ValidationError(f"unknown stage: {self.stage!r}")
        h.flags.writeable = False
        object.__setattr__(self, "cost_history", h)
        object.__setattr__(self, "flags", tuple(self.flags))


def report_errors(params: ModelParameters, table: SpectralDensityTable) -> tuple[float, float]:
    """Unweighted (relative L2, peak-relative max pointwise) fit errors."""
    jf = evaluate_jmod(params, table.omega_grid).j_values
    diff = jf - table.j_values
    norm = float(np.linalg.norm(table.j_values))
    rel = float(np.linalg.norm(diff)) / norm if norm > 0 else float(np.linalg.norm(diff))
    peak = float(table.j_values.max())
    maxp = float(np.abs(diff).max()) / peak if peak > 0 else float(np.abs(diff).max())
    return rel, maxp


def detect_peaks(table: SpectralDensityTable, config: FitConfig | None = None) -> list[Peak]:
    """Locate local maxima above the prominence threshold.

    Positions, heights, and curvatures are refined by the parabola through
    the three samples around each discrete maximum.  Returns peaks sorted by
    position; a constant table has none.
    """
    cfg = config or FitConfig()
    if len(table) < 5:
        raise ValidationError("peak detection needs at least five samples")
    w, j = table.omega_grid, table.j_values
    jmax = float(j.max())
    if jmax <= 0.0:
        return []
    idx, props = signal.find_peaks(j, prominence=cfg.peak_prominence * jmax)
    peaks = []
    for k, i in enumerate(idx):
        x = w[i - 1 : i + 2] - w[i]
        y = j[i - 1 : i + 2]
        c2, c1, c0 = np.polyfit(x, y, 2)
        if c2 < 0.0:
            pos = w[i] - c1 / (2.0 * c2)
            height = c0 - c1**2 / (4.0 * c2)
            curv = 2.0 * c2
        else:
            # flat-top artifact: no usable curvature
            pos, height, curv = float(w[i]), float(j[i]), 0.0
        peaks.append(Peak(float(pos), float(height), float(curv), float(props["prominences"][k])))
    peaks.sort(key=lambda p: p.position)
    return peaks


def _init_noninteracting(peaks, table, config):
    """Seed diagonal parameters from detected peaks; returns (params, flags)."""
    flags: list[str] = []
    if config.n_modes == "auto":
        n = max(len(peaks), 1)
    else:
        n = int(config.n_modes)
    w = table.omega_grid
    step = float(np.median(np.diff(w)))
    jmax = float(table.j_values.max())
    chosen = sorted(peaks, key=lambda p: -p.prominence)[:n]
    chosen.sort(key=lambda p: p.position)
    if len(peaks) > n:
        flags.append(f"init:dropped-{len(peaks) - n}-minor-peaks")
    centers, kappas, gs = [], [], []
    for p in chosen:
        if p.curvature < 0.0:
            kap = float(np.sqrt(8.0 * max(p.height, 0.0) / abs(p.curvature)))
        else:
            kap = 10.0 * step
            flags.append(f"init:flat-top-peak-at-{p.position:.6g}")
        kap = max(kap, 1e-2 * step)
        gval = float(np.sqrt(max(p.height, 0.0) * np.pi * kap / 2.0))
        centers.append(p.position)
        kappas.append(kap)
        gs.append(max(gval, 1e-8))
    n_fill = n - len(chosen)
    if n_fill > 0:
        fill_pos = np.linspace(w[0], w[-1], n_fill + 2)[1:-1]
        kap_fill = float(np.median(kappas)) if kappas else 10.0 * step
        # filler couplings 5% of the amplitude a peak-height mode would get
        g_fill = 0.05 * float(np.sqrt(max(jmax, 0.0) * np.pi * kap_fill / 2.0))
        for pos in fill_pos:
            centers.append(float(pos))
            kappas.append(kap_fill)
            gs.append(max(g_fill, 1e-8))
        flags.append(f"init:{n_fill}-filler-modes")
    order = np.argsort(centers)
    centers = np.asarray(centers)[order]
    kappas = np.asarray(kappas)[order]
    gs = np.asarray(gs)[order]
    params = ModelParameters(omega=np.diag(centers), kappa=kappas, g=gs)
    return params, flags


def init_noninteracting(peaks, table: SpectralDensityTable, config: FitConfig) -> ModelParameters:
    """Diagonal starting parameters from detected peaks.

    Each peak seeds one mode: kappa from the peak curvature via
    kappa = sqrt(8 height / |curvature|), g from the Lorentzian peak height
    via g^2 = height * pi * kappa / 2.  Missing peaks are filled by modes
    placed uniformly over the grid span with the median width and a small
    coupling; flat-top peaks (zero curvature) get kappa of ten grid steps.
    """
    params, _ = _init_noninteracting(peaks, table, config)
    return params


# ---------------------------------------------------------------------------
# objective and optimizer


class _SpectralObjective:
    """Weighted residuals and Jacobian for one fit stage."""

    def __init__(self, table, n_modes, stage, weight_mode):
        self.w = table.omega_grid
        self.jd = table.j_values
        self.n = int(n_modes)
        self.stage = stage  # "diag" | "full"
        self.m = self.w.size
        jmax = float(self.jd.max())
        self.degenerate = jmax <= 0.0
        mode = "uniform" if self.degenerate else weight_mode
        self.mode = mode
        if mode == "uniform":
            self.weights = np.ones(self.m)
            self.r_scale = max(jmax, np.finfo(float).tiny)
        elif mode == "relative":
            self.weights = 1.0 / (self.jd + 0.01 * jmax)
            self.r_scale = 1.0
        else:  # log
            self.delta = 1e-4 * jmax
            self.weights = None
            self.r_scale = 1.0
        self.iu = np.triu_indices(self.n)
        self.n_tri = self.iu[0].size
        # clip box: keeps the optimizer on matrices of data-grid scale, so
        # the eigenproblems behind the pole expansion stay well conditioned
        span = float(self.w[-1] - self.w[0])
        k = self.n if stage == "diag" else self.n_tri
        lo = np.empty(k + 2 * self.n)
        hi = np.empty(k + 2 * self.n)
        if stage == "diag":
            lo[:k] = self.w[0] - 10.0 * span
            hi[:k] = self.w[-1] + 10.0 * span
        else:
            diag_mask = self.iu[0] == self.iu[1]
            lo[:k] = np.where(diag_mask, self.w[0] - 10.0 * span, -10.0 * span)
            hi[:k] = np.where(diag_mask, self.w[-1] + 10.0 * span, 10.0 * span)
        lo[k:] = -_LOG_BOUND
        hi[k:] = _LOG_BOUND
        self._lo, self._hi = lo, hi

    # -- parameter packing ---------------------------------------------------

    def pack(self, params: ModelParameters) -> np.ndarray:
        if self.stage == "diag":
            head = np.diag(params.omega)
        else:
            head = params.omega[self.iu]
        return np.concatenate([head, np.log(params.kappa), np.log(params.g)])

    def split(self, theta):
        k = self.n if self.stage == "diag" else self.n_tri
        return theta[:k], theta[k : k + self.n], theta[k + self.n :]

    def params(self, theta) -> ModelParameters:
        head, lk, lg = self.split(theta)
        if self.stage == "diag":
            omega = np.diag(head)
        else:
            omega = np.zeros((self.n, self.n))
            omega[self.iu] = head
            omega.T[self.iu] = head
        return ModelParameters(omega=omega, kappa=np.exp(lk), g=np.exp(lg))

    def clip(self, theta) -> np.ndarray:
        return np.clip(theta, self._lo, self._hi)

    # -- model, residual, Jacobian -------------------------------------------

    def _solves(self, theta):
        p = self.params(theta)
        h = build_effective_hamiltonian(p).matrix
        x = resolvent_vectors(h, p.g, self.w)
        jf = (x @ p.g).imag / np.pi
        return p, x, jf

    def model(self, theta) -> np.ndarray:
        return self._solves(theta)[2]

    def residual(self, theta) -> np.ndarray:
        jf = self.model(theta)
        if self.mode == "log":
            return np.log(jf + self.delta) - np.log(self.jd + self.delta)
        return (jf - self.jd) * self.weights

    def jacobian(self, theta) -> np.ndarray:
        p, x, jf = self._solves(theta)
        cols = []
        if self.stage == "diag":
            cols.append(-(x**2))
        else:
            cross = x[:, self.iu[0]] * x[:, self.iu[1]]
            factor = np.where(self.iu[0] == self.iu[1], -1.0, -2.0)
            cols.append(cross * factor[None, :])
        cols.append(0.5j * p.kappa[None, :] * x**2)
        cols.append(2.0 * p.g[None, :] * x)
        dj = np.concatenate(cols, axis=1).imag / np.pi
        if self.mode == "log":
            return dj / (jf + self.delta)[:, None]
        return dj * self.weights[:, None]

    def fd_jacobian(self, theta) -> np.ndarray:
        r0 = self.residual(theta)
        jac = np.empty((r0.size, theta.size))
        for k in range(theta.size):
            h = 1e-6 * (1.0 + abs(theta[k]))
            tp = theta.copy(); tp[k] += h
            tm = theta.copy(); tm[k] -= h
            jac[:, k] = (self.residual(tp) - self.residual(tm)) / (2.0 * h)
        return jac


@dataclass
class _LMResult:
    theta: np.ndarray
    cost_history: np.ndarray
    iterations: int
    converged: bool
    reason: str


def _lm_minimize(residual, jacobian, theta0, *, max_iterations, relative_tolerance,
                 clip=None, cost_floor=0.0, lam0=1e-3, lam_up=4.0, lam_down=3.0,
                 lam_max=1e14):
    """Damped Gauss-Newton loop; accepts only strictly decreasing steps."""
    theta = np.asarray(theta0, dtype=float).copy()
    if clip is not None:
        theta = clip(theta)
    r = residual(theta)
    cost = float(r @ r)
    if not np.isfinite(cost):
        raise NumericalError("initial cost is not finite; bad starting parameters")
    history = [cost]
    lam = lam0
    accepted = 0
    converged, reason = False, "max-iterations"
    for _ in range(max_iterations):
        if cost <= cost_floor:
            converged, reason = True, "cost-floor"
            break
        jac = jacobian(theta)
        grad = jac.T @ r
        a = jac.T @ jac
        d = np.diag(a).copy()
        dmax = float(d.max()) if d.size else 0.0
        if dmax <= 0.0:
            converged, reason = True, "zero-gradient"
            break
        np.maximum(d, 1e-12 * dmax, out=d)
        stop = None
        while True:
            try:
                step = np.linalg.solve(a + lam * np.diag(d), -grad)
            except np.linalg.LinAlgError:
                step = None
            if step is not None and np.all(np.isfinite(step)):
                trial = theta + step
                if clip is not None:
                    trial = clip(trial)
                rt = residual(trial)
                ct = float(rt @ rt)
                if np.isfinite(ct) and ct < cost:
                    base = cost
                    theta, r, cost = trial, rt, ct
                    history.append(cost)
                    accepted += 1
                    lam = max(lam / lam_down, 1e-12)
                    # ride the accepted direction while it keeps strictly
                    # paying off; doubling makes long curved-valley crawls
                    # geometric instead of one Jacobian per short step
                    ext = step
                    while True:
                        cand = theta + ext
                        if clip is not None:
                            cand = clip(cand)
                        rc = residual(cand)
                        cc = float(rc @ rc)
                        if np.isfinite(cc) and cc < cost:
                            theta, r, cost = cand, rc, cc
                            history.append(cost)
                            ext = 2.0 * ext
                        else:
                            break
                    rel_dec = (base - cost) / base
                    if rel_dec < relative_tolerance:
                        stop = ("relative-tolerance", True)
                    break
            lam *= lam_up
            if lam > lam_max:
                stop = ("stationary", True)
                break
        if stop is not None:
            reason, converged = stop
            break
    return _LMResult(theta, np.asarray(history), accepted, converged, reason)


def _cost_floor(obj: _SpectralObjective) -> float:
    eps = np.finfo(float).eps
    return obj.m * (500.0 * eps * obj.r_scale) ** 2


def _build_report(theta, obj, table, stage, lmres, flags, config) -> FitReport:
    params = obj.params(theta).sorted_by_energy()
    rel, maxp = report_errors(params, table)
    flags = list(flags)
    if obj.degenerate:
        flags.append("degenerate-data")
        if obj.mode != config.weight_mode:
            flags.append("weights-fell-back-to-uniform")
    if not lmres.converged:
        flags.append("not-converged")
    if lmres.reason == "stationary":
        flags.append("stationary-point")
    try:
        poles = compute_poles(params)
    except NumericalError:
        poles = None
        flags.append("poles-unavailable")
    return FitReport(
        params=params,
        stage=stage,
        converged=lmres.converged,
        iterations_used=lmres.iterations,
        relative_l2_error=rel,
        max_pointwise_error=maxp,
        cost_history=lmres.cost_history,
        poles=poles,
        flags=tuple(flags),
        weight_mode=obj.mode,
        seed=config.seed,
    )


def fit_noninteracting(table: SpectralDensityTable, config: FitConfig) -> FitReport:
    """Stage one: fit a non-interacting (diagonal) mode model.

    Peaks seed the start point; the optimizer varies mode energies and the
    logs of the widths and couplings.  Non-convergence within the iteration
    budget produces a flagged report, never an exception.
    """
    peaks = detect_peaks(table, config)
    params0, flags = _init_noninteracting(peaks, table, config)
    obj = _SpectralObjective(table, params0.n_modes, "diag", config.weight_mode)
    jac = obj.fd_jacobian if config.use_fd_jacobian else obj.jacobian
    lmres = _lm_minimize(
        obj.residual, jac, obj.pack(params0),
        max_iterations=config.max_iterations,
        relative_tolerance=config.relative_tolerance,
        clip=obj.clip, cost_floor=_cost_floor(obj),
    )
    return _build_report(lmres.theta, obj, table, "non-interacting", lmres, flags, config)


def fit_interacting(
    table: SpectralDensityTable,
    config: FitConfig,
    seed_params: ModelParameters | None = None,
) -> FitReport:
    """Stage two: full fit with off-diagonal mode couplings released.

    ``seed_params`` normally come from :func:`fit_noninteracting`; when
    omitted, stage one runs first.  ``config.restarts`` extra starts perturb
    the seed deterministically (from ``config.seed``) and the lowest final
    cost wins.  Modes are sorted by diagonal energy in the report.
    """
    flags: list[str] = []
    if seed_params is None:
        stage1 = fit_noninteracting(table, config)
        seed_params = stage1.params
        flags.append("seeded-from-non-interacting")
    if config.n_modes != "auto" and seed_params.n_modes != config.n_modes:
        raise ValidationError(
            f"seed has {seed_params.n_modes} modes but config requests {config.n_modes}"
        )
    obj = _SpectralObjective(table, seed_params.n_modes, "full", config.weight_mode)
    jac = obj.fd_jacobian if config.use_fd_jacobian else obj.jacobian
    theta0 = obj.pack(seed_params)
    floor = _cost_floor(obj)
    best = None
    for attempt in range(config.restarts + 1):
        if best is not None and best.cost_history[-1] <= floor:
            break  # at the noise floor; no restart can improve on that
        if attempt == 0:
            start = theta0
        else:
            # kick sizes cycle small/medium/large so a run of restarts
            # explores both near and far basins around the stage-1 seed
            rng = np.random.default_rng([config.seed, attempt])
            start = theta0.copy()
            k = obj.n_tri
            factor = (1.0, 3.0, 6.0)[(attempt - 1) % 3]
            scale = 0.02 * factor * (table.omega_grid[-1] - table.omega_grid[0])
            start[:k] += scale * rng.standard_normal(k)
            start[k:] += 0.1 * factor * rng.standard_normal(start.size - k)
        lmres = _lm_minimize(
            obj.residual, jac, start,
            max_iterations=config.max_iterations,
            relative_tolerance=config.relative_tolerance,
            clip=obj.clip, cost_floor=floor,
        )
        if best is None or lmres.cost_history[-1] < best.cost_history[-1]:
            best = lmres
    if config.restarts > 0:
        flags.append(f"restarts:{config.restarts}")
    return _build_report(best.theta, obj, table, "interacting", best, flags, config)


def fit_auto(table: SpectralDensityTable, config: FitConfig) -> FitReport:
    """Scan the mode count upward until the fit is good enough.

    Starts from the detected peak count, runs both stages for each N, and
    stops at the first N whose relative L2 error beats
    ``config.auto_target``.  When adding a mode stops helping (error no
    longer halves), the best report so far is returned with an
    'auto:error-floor' flag; the scan also respects ``max_auto_modes``.
    Smallest N meeting the target wins by construction.
    """
    peaks = detect_peaks(table, config)
    n_start = max(len(peaks), 1)
    best: FitReport | None = None
    prev_err = None
    for n in range(n_start, config.max_auto_modes + 1):
        cfg_n = replace(config, n_modes=n)
        rep = fit_interacting(table, cfg_n)
        if best is None or rep.relative_l2_error < best.relative_l2_error:
            best = rep
        if rep.relative_l2_error < config.auto_target:
            return replace(rep, flags=rep.flags + ("auto:target-met",))
        if prev_err is not None and rep.relative_l2_error >= 0.5 * prev_err:
            return replace(best, flags=best.flags + ("auto:error-floor",))
        prev_err = rep.relative_l2_error
    return replace(best, flags=best.flags + ("auto:mode-ceiling",))
