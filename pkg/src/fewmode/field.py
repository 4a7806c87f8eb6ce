"""Field-intensity reconstruction from Green's-function data and emitter dynamics.

The chain is: tabulated Im{G}(r, r_e, w) projected on the dipole axis ->
temporal response kernel K(r, tau) -> two-time emitter correlation ->
intensity I(r, t).  All frequency input is in eV, positions in nm, times in
fs; the kernel carries the SI prefactors so that intensities come out in
W/m^2 once the dipole moment (e nm) is folded into the correlation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import HBAR_EV_FS, INTENSITY_W_PER_M2, KERNEL_V_PER_M
from .dynamics import EmitterSpec, _uniform_times, solve_fewmode_single_excitation
from .errors import UnsupportedScenarioError, ValidationError
from .spectral import ModelParameters

# cap on the phase-matrix temporary used in the kernel transform
_PHASE_BLOCK = 8_388_608
# correlation tables are dense (n_times^2 complex); refuse huge ones
_MAX_CORRELATION_TIMES = 4096
# memory guard for intensity rasters
_MAX_MAP_CELLS = 4_000_000

_EDGE_FRACTION = 1e-3
_DECAY_FRACTION = 1e-6


@dataclass(frozen=True)
class GreensFunctionTable:
    """Projected Im{G} spectra at a set of observation points.

    Parameters
    ----------
    point_ids : sequence of str
        Unique labels, one per observation point.
    coordinates : ndarray, shape (n_points, 3)
        Observation positions in nm.
    omega_grid : ndarray, shape (n_omega,)
        Strictly increasing positive energies, eV; shared by all points.
    im_g_projected : ndarray, shape (n_points, n_omega, 3)
        Cartesian components of Im{G(r, r_e, w)} . n in 1/m.
    """

    point_ids: tuple
    coordinates: np.ndarray
    omega_grid: np.ndarray
    im_g_projected: np.ndarray

    def __post_init__(self):
        ids = tuple(str(p) for p in self.point_ids)
        if len(ids) == 0:
            raise ValidationError("a Green's-function table needs at least one point")
        if len(set(ids)) != len(ids):
            raise ValidationError("point_ids must be unique")
        coords = np.array(self.coordinates, dtype=float, copy=True)
        w = np.array(self.omega_grid, dtype=float, copy=True)
        img = np.array(self.im_g_projected, dtype=float, copy=True)
        if coords.shape != (len(ids), 3) or not np.all(np.isfinite(coords)):
            raise ValidationError("coordinates must be finite with shape (n_points, 3)")
        if w.ndim != 1 or w.size < 2:
            raise ValidationError("omega_grid must hold at least two samples")
        if not np.all(np.isfinite(w)) or w[0] <= 0 or np.any(np.diff(w) <= 0):
            raise ValidationError("omega_grid must be positive and strictly increasing")
        if img.shape != (len(ids), w.size, 3):
            raise ValidationError(
                f"im_g_projected must have shape (n_points, n_omega, 3), got {img.shape}"
            )
        if not np.all(np.isfinite(img)):
            raise ValidationError("im_g_projected contains non-finite values")
        for arr in (coords, w, img):
            arr.flags.writeable = False
        object.__setattr__(self, "point_ids", ids)
        object.__setattr__(self, "coordinates", coords)
        object.__setattr__(self, "omega_grid", w)
        object.__setattr__(self, "im_g_projected", img)

    @property
    def n_points(self) -> int:
        return len(self.point_ids)

    def select(self, ids) -> "GreensFunctionTable":
        """Restrict the table to the listed point ids, keeping their order."""
        wanted = [str(p) for p in ids]
        index = {p: k for k, p in enumerate(self.point_ids)}
        missing = [p for p in wanted if p not in index]
        if missing:
            raise ValidationError(f"unknown point ids: {', '.join(missing)}")
        rows = [index[p] for p in wanted]
        return GreensFunctionTable(
            point_ids=tuple(wanted),
            coordinates=self.coordinates[rows],
            omega_grid=self.omega_grid,
            im_g_projected=self.im_g_projected[rows],
        )


@dataclass(frozen=True)
class FieldKernelTable:
    """Temporal field-response kernels K(r, tau) at the table's points.

    kernel[p, t, v] is component v of K at point p and lag tau_grid[t];
    multiplying by a dipole amplitude in e nm and integrating over fs gives
    a field in V/m (the SI bookkeeping lives in the stored values).
    ``edge_ok`` and ``decay_ok`` are per-point coverage diagnostics: the
    transform integrand should be negligible at the frequency-table edges,
    and |K| should decay below 1e-6 of its maximum by the end of the lag
    window.
    """

    point_ids: tuple
    coordinates: np.ndarray
    tau_grid: np.ndarray
    kernel: np.ndarray
    edge_ok: np.ndarray
    decay_ok: np.ndarray

    def __post_init__(self):
        tau = np.array(self.tau_grid, dtype=float, copy=True)
        ker = np.array(self.kernel, dtype=complex, copy=True)
        if tau.ndim != 1 or tau.size < 2 or tau[0] != 0.0:
            raise ValidationError("tau_grid must start at zero with at least two samples")
        steps = np.diff(tau)
        if np.any(steps <= 0) or np.abs(steps - steps[0]).max() > 1e-9 * steps[0]:
            raise ValidationError("tau_grid must be uniform and increasing")
        if ker.shape != (len(self.point_ids), tau.size, 3):
            raise ValidationError(
                f"kernel must have shape (n_points, n_tau, 3), got {ker.shape}"
            )
        if not np.all(np.isfinite(ker.real)) or not np.all(np.isfinite(ker.imag)):
            raise ValidationError("kernel contains non-finite values")
        edge = np.array(self.edge_ok, dtype=bool, copy=True)
        decay = np.array(self.decay_ok, dtype=bool, copy=True)
        if edge.shape != (len(self.point_ids),) or decay.shape != edge.shape:
            raise ValidationError("coverage flags must be per-point booleans")
        for arr in (tau, ker, edge, decay):
            arr.flags.writeable = False
        object.__setattr__(self, "tau_grid", tau)
        object.__setattr__(self, "kernel", ker)
        object.__setattr__(self, "edge_ok", edge)
        object.__setattr__(self, "decay_ok", decay)

    @property
    def n_points(self) -> int:
        return len(self.point_ids)

    @property
    def dtau(self) -> float:
        return float(self.tau_grid[1] - self.tau_grid[0])


@dataclass(frozen=True)
class CorrelationTable:
    """Two-time emitter correlation C(t', t'') on a uniform time grid.

    values[j, k] = <mu+(t_j) mu-(t_k)> in (e nm)^2.  Hermitian symmetry and
    a real non-negative diagonal are enforced.  ``rank1_amplitude`` is set
    when the table was produced as an outer product conj(a) x a, which the
    intensity evaluation exploits; externally supplied tables leave it None.
    """

    times: np.ndarray
    values: np.ndarray
    rank1_amplitude: np.ndarray | None = None

    def __post_init__(self):
        t = np.array(self.times, dtype=float, copy=True)
        c = np.array(self.values, dtype=complex, copy=True)
        if t.ndim != 1 or t.size < 2 or np.any(np.diff(t) <= 0):
            raise ValidationError("times must be 1-d strictly increasing")
        steps = np.diff(t)
        if np.abs(steps - steps[0]).max() > 1e-9 * steps[0]:
            raise ValidationError("correlation times must be uniformly spaced")
        if c.shape != (t.size, t.size):
            raise ValidationError("values must be square over the time grid")
        if not np.all(np.isfinite(c.real)) or not np.all(np.isfinite(c.imag)):
            raise ValidationError("correlation contains non-finite values")
        scale = max(float(np.abs(c).max()), 1e-300)
        if np.abs(c - c.conj().T).max() > 1e-12 * scale:
            raise ValidationError("correlation is not Hermitian: C(t',t'') != C*(t'',t')")
        diag = np.diagonal(c)
        if np.abs(diag.imag).max() > 1e-12 * scale or diag.real.min() < -1e-12 * scale:
            raise ValidationError("correlation diagonal must be real and non-negative")
        amp = self.rank1_amplitude
        if amp is not None:
            amp = np.array(amp, dtype=complex, copy=True)
            if amp.shape != t.shape:
                raise ValidationError("rank1_amplitude must match the time grid")
            if np.abs(c - np.outer(amp.conj(), amp)).max() > 1e-10 * scale:
                raise ValidationError(
                    "rank1_amplitude does not reproduce the correlation values"
                )
            amp.flags.writeable = False
        for arr in (t, c):
            arr.flags.writeable = False
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", c)
        object.__setattr__(self, "rank1_amplitude", amp)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])


@dataclass(frozen=True)
class IntensityTraces:
    """Per-point intensity time traces, W/m^2."""

    point_ids: tuple
    coordinates: np.ndarray
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.array(self.times, dtype=float, copy=True)
        v = np.array(self.values, dtype=float, copy=True)
        if v.shape != (len(self.point_ids), t.size):
            raise ValidationError("values must have shape (n_points, n_times)")
        if not np.all(np.isfinite(v)):
            raise ValidationError("intensity contains non-finite values")
        floor = -1e-12 * max(float(v.max(initial=0.0)), 0.0)
        if v.min(initial=0.0) < floor:
            raise ValidationError("intensity is negative beyond roundoff")
        for arr in (t, v):
            arr.flags.writeable = False
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class IntensityMap:
    """Spatial intensity snapshots at selected times.

    values[k, p] is the intensity at snapshot k and point p; when
    ``normalized`` each point is divided by its own temporal maximum over
    the full trace (points that never light up stay zero).
    """

    point_ids: tuple
    coordinates: np.ndarray
    times: np.ndarray
    values: np.ndarray
    normalized: bool

    def __post_init__(self):
        t = np.array(self.times, dtype=float, copy=True)
        v = np.array(self.values, dtype=float, copy=True)
        if v.shape != (t.size, len(self.point_ids)):
            raise ValidationError("values must have shape (n_times, n_points)")
        for arr in (t, v):
            arr.flags.writeable = False
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)


def compute_kernel(
    gtable: GreensFunctionTable, tau_max: float, dtau: float
) -> FieldKernelTable:
    """Transform projected Im{G} spectra into temporal response kernels.

    K(r, tau) = prefactor * int w^2 Im{G(r, r_e, w)}.n e^{i w tau} dw by
    trapezoidal quadrature over the supplied table; no extrapolation beyond
    it.  The prefactor makes the kernel a field response per unit dipole
    moment and unit time (see `fewmode.constants.KERNEL_V_PER_M`).

    Coverage is diagnosed, not repaired: ``edge_ok[p]`` is False when the
    transform integrand at the frequency edges exceeds 1e-3 of its maximum,
    ``decay_ok[p]`` is False when |K| has not fallen below 1e-6 of its
    maximum by tau_max.
    """
    tau = _uniform_times(tau_max, dtau)
    w = gtable.omega_grid
    h_int = dtau / HBAR_EV_FS
    if w[-1] * h_int >= 0.5:
        suggestion = 0.45 * HBAR_EV_FS / w[-1]
        raise ValidationError(
            f"dtau = {dtau:g} fs does not resolve the highest tabulated frequency "
            f"({w[-1] * h_int:.2f} rad per step); use dtau <= {suggestion:.3g} fs"
        )
    dw = np.diff(w)
    weights = np.zeros_like(w)
    weights[:-1] += 0.5 * dw
    weights[1:] += 0.5 * dw

    integrand = w[None, :, None] ** 2 * gtable.im_g_projected
    peak = np.abs(integrand).max(axis=(1, 2))
    edge = np.maximum(
        np.abs(integrand[:, 0, :]).max(axis=1), np.abs(integrand[:, -1, :]).max(axis=1)
    )
    edge_ok = edge <= _EDGE_FRACTION * np.maximum(peak, 1e-300)

    amp = weights[None, :, None] * integrand
    tau_int = tau / HBAR_EV_FS
    kernel = np.empty((gtable.n_points, tau.size, 3), dtype=complex)
    rows = max(1, min(tau.size, _PHASE_BLOCK // max(w.size, 1)))
    for lo in range(0, tau.size, rows):
        hi = min(lo + rows, tau.size)
        phase = np.exp(1j * np.outer(tau_int[lo:hi], w))
        kernel[:, lo:hi, :] = np.einsum("tm,pmv->ptv", phase, amp)
    kernel *= KERNEL_V_PER_M

    magnitude = np.linalg.norm(kernel, axis=2)
    peak_k = magnitude.max(axis=1)
    decay_ok = magnitude[:, -1] <= _DECAY_FRACTION * np.maximum(peak_k, 1e-300)

    return FieldKernelTable(
        point_ids=gtable.point_ids,
        coordinates=gtable.coordinates,
        tau_grid=tau,
        kernel=kernel,
        edge_ok=edge_ok,
        decay_ok=decay_ok,
    )


def emitter_correlation(
    params: ModelParameters,
    emitter: EmitterSpec,
    t_max: float,
    dt: float,
    *,
    mu: float = 1.0,
    field_state: str = "vacuum",
) -> CorrelationTable:
    """Two-time dipole correlation of a spontaneously decaying emitter.

    In the single-excitation sector the normally ordered correlation is the
    outer product of the emitter amplitude with itself,
    C(t', t'') = mu^2 conj(c_e(t')) c_e(t''), so one trajectory determines
    the full table and the rank-1 structure is recorded for the intensity
    fast path.

    Parameters
    ----------
    mu : float
        Transition dipole moment in e nm; scales the correlation by mu^2.
    field_state : str
        Only "vacuum" is supported; anything else raises
        UnsupportedScenarioError.
    """
    if field_state != "vacuum":
        raise UnsupportedScenarioError(
            "only the vacuum initial field state is supported; the correlation "
            f"for field_state={field_state!r} is not implemented"
        )
    if not np.isfinite(mu) or mu < 0:
        raise ValidationError(f"mu must be a non-negative dipole moment, got {mu}")
    times = _uniform_times(t_max, dt)
    if times.size > _MAX_CORRELATION_TIMES:
        raise ValidationError(
            f"correlation table would span {times.size} samples per axis; "
            f"use a coarser dt (limit {_MAX_CORRELATION_TIMES})"
        )
    traj = solve_fewmode_single_excitation(params, emitter, t_max, dt)
    amplitude = mu * traj.c_e
    return CorrelationTable(
        times=traj.times,
        values=np.outer(amplitude.conj(), amplitude),
        rank1_amplitude=amplitude,
    )


def _trapezoid_weights(n: int, h: float) -> np.ndarray:
    """Weights for int_0^{t_n} over samples 0..n; the n=0 integral is empty."""
    if n == 0:
        return np.zeros(1)
    w = np.full(n + 1, h)
    w[0] = w[-1] = 0.5 * h
    return w


def field_intensity(kernels: FieldKernelTable, corr: CorrelationTable) -> IntensityTraces:
    """Intensity traces I(r, t) from response kernels and a correlation table.

    Evaluates I = sum_v int_0^t dt' int_0^t dt'' C(t', t'') K_v(t-t')
    conj(K_v(t-t'')) with trapezoidal weights on both axes.  A rank-1
    correlation collapses the double integral to the squared modulus of one
    convolution per component, which is what this function uses whenever
    the structure flag is present; the generic quadratic form is evaluated
    otherwise.  Both paths compute the identical discretization.
    """
    h = corr.dt
    if abs(kernels.dtau - h) > 1e-9 * h:
        raise ValidationError(
            f"kernel lag step {kernels.dtau:g} fs does not match the "
            f"correlation step {h:g} fs"
        )
    n_t = corr.times.size
    if kernels.tau_grid.size < n_t:
        raise ValidationError(
            "kernel lag window is shorter than the correlation window; "
            "recompute the kernel with a larger tau_max"
        )
    out = np.zeros((kernels.n_points, n_t))
    amp = corr.rank1_amplitude
    for p in range(kernels.n_points):
        for v in range(3):
            k_rev = kernels.kernel[p, :n_t, v].conj()
            if amp is not None:
                conv = np.convolve(amp, k_rev)[:n_t]
                s = h * conv - 0.5 * h * (amp[0] * k_rev + amp * k_rev[0])
                out[p] += np.abs(s) ** 2
            else:
                for n in range(1, n_t):
                    w = _trapezoid_weights(n, h)
                    b = w * kernels.kernel[p, n::-1, v]
                    out[p, n] += float(
                        np.real(b @ corr.values[: n + 1, : n + 1] @ b.conj())
                    )
    out *= INTENSITY_W_PER_M2
    return IntensityTraces(
        point_ids=kernels.point_ids,
        coordinates=kernels.coordinates,
        times=corr.times,
        values=out,
    )


def intensity_map(
    kernels: FieldKernelTable,
    corr: CorrelationTable,
    snapshot_times,
    *,
    normalize: bool = False,
) -> IntensityMap:
    """Spatial intensity snapshots at the requested times.

    Each requested time is snapped to the nearest sample of the correlation
    grid.  With ``normalize`` every point is scaled by its own maximum over
    the full trace, so snapshots show where and when each point peaks.
    """
    wanted = np.atleast_1d(np.asarray(snapshot_times, dtype=float))
    if wanted.size == 0:
        raise ValidationError("at least one snapshot time is required")
    cells = kernels.n_points * corr.times.size
    if cells > _MAX_MAP_CELLS:
        raise ValidationError(
            f"raster of {kernels.n_points} points x {corr.times.size} times "
            f"exceeds the {_MAX_MAP_CELLS} cell guard"
        )
    h = corr.dt
    idx = np.round(wanted / h).astype(int)
    if idx.min() < 0 or idx.max() >= corr.times.size:
        raise ValidationError("snapshot times fall outside the correlation window")

    traces = field_intensity(kernels, corr)
    values = traces.values[:, idx].T.copy()
    if normalize:
        peaks = traces.values.max(axis=1)
        scale = np.where(peaks > 0, peaks, 1.0)
        values = values / scale[None, :]
    return IntensityMap(
        point_ids=kernels.point_ids,
        coordinates=kernels.coordinates,
        times=corr.times[idx],
        values=values,
        normalized=normalize,
    )
