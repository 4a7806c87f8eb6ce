"""Field-kernel and intensity reconstruction against analytic oracles."""

import numpy as np
import pytest

import fewmode.field as field_mod
from fewmode.constants import HBAR_EV_FS, KERNEL_V_PER_M
from fewmode.dynamics import EmitterSpec, solve_fewmode_single_excitation
from fewmode.errors import UnsupportedScenarioError, ValidationError
from fewmode.field import (
    CorrelationTable,
    FieldKernelTable,
    GreensFunctionTable,
    compute_kernel,
    emitter_correlation,
    field_intensity,
    intensity_map,
)
from fewmode.spectral import ModelParameters


def lorentzian_green_table(
    omega0=2.0, kappa=0.02, half_width=1.2, n_points=4001, amplitude=1e-7,
    component=0, point_id="origin",
):
    grid = np.linspace(omega0 - half_width, omega0 + half_width, n_points)
    lor = amplitude * (kappa / 2) ** 2 / ((grid - omega0) ** 2 + (kappa / 2) ** 2)
    img = np.zeros((1, grid.size, 3))
    img[0, :, component] = lor
    return GreensFunctionTable((point_id,), np.zeros((1, 3)), grid, img)


class TestGreensFunctionTable:
    def test_rejects_duplicate_ids(self):
        grid = np.linspace(1.0, 2.0, 11)
        img = np.zeros((2, 11, 3))
        with pytest.raises(ValidationError, match="unique"):
            GreensFunctionTable(("a", "a"), np.zeros((2, 3)), grid, img)

    def test_rejects_bad_shapes(self):
        grid = np.linspace(1.0, 2.0, 11)
        with pytest.raises(ValidationError, match="shape"):
            GreensFunctionTable(("a",), np.zeros((1, 3)), grid, np.zeros((1, 11)))

    def test_rejects_nonpositive_grid(self):
        grid = np.linspace(-0.5, 2.0, 11)
        with pytest.raises(ValidationError, match="positive"):
            GreensFunctionTable(("a",), np.zeros((1, 3)), grid, np.zeros((1, 11, 3)))

    def test_rejects_unsorted_grid(self):
        grid = np.array([1.0, 1.2, 1.1])
        with pytest.raises(ValidationError, match="increasing"):
            GreensFunctionTable(("a",), np.zeros((1, 3)), grid, np.zeros((1, 3, 3)))

    def test_select_preserves_order_and_rejects_unknown(self):
        grid = np.linspace(1.0, 2.0, 5)
        img = np.arange(3 * 5 * 3, dtype=float).reshape(3, 5, 3)
        coords = np.arange(9, dtype=float).reshape(3, 3)
        table = GreensFunctionTable(("a", "b", "c"), coords, grid, img)
        sub = table.select(["c", "a"])
        assert sub.point_ids == ("c", "a")
        assert np.array_equal(sub.coordinates[0], coords[2])
        assert np.array_equal(sub.im_g_projected[1], img[0])
        with pytest.raises(ValidationError, match="unknown point ids"):
            table.select(["d"])


class TestComputeKernel:
    def test_lorentzian_transform_matches_analytic(self):
        # one quasinormal mode: K is a damped oscillation at the mode
        # frequency with envelope decay kappa/2
        omega0, kappa, amp = 2.0, 0.02, 1e-7
        table = lorentzian_green_table(omega0, kappa, amplitude=amp)
        tau_max = 5.0 / kappa * HBAR_EV_FS
        kt = compute_kernel(table, tau_max=tau_max, dtau=0.08)
        assert bool(kt.edge_ok[0])
        # e^{-2.5} of the peak remains at 5/kappa, so the decay diagnostic
        # must flag this window as too short
        assert not bool(kt.decay_ok[0])
        tau_int = kt.tau_grid / HBAR_EV_FS
        reference = (
            KERNEL_V_PER_M * omega0**2 * amp * np.pi * (kappa / 2)
            * np.exp((1j * omega0 - kappa / 2) * tau_int)
        )
        numeric = kt.kernel[0, :, 0]
        rel = np.abs(np.abs(numeric) - np.abs(reference)) / np.abs(reference)
        assert rel.max() < 0.01
        rotated = numeric * np.exp(-1j * omega0 * tau_int)
        assert np.abs(np.angle(rotated[1:] / rotated[0])).max() < 0.05

    def test_decay_flag_clears_on_long_window(self):
        # a hard-truncated Lorentzian rings at the window edges and never
        # decays below the threshold; a line that vanishes inside the window
        # does, once tau_max passes the transform's Gaussian falloff
        omega0, sigma = 2.0, 0.05
        grid = np.linspace(omega0 - 0.5, omega0 + 0.5, 2001)
        img = np.zeros((1, grid.size, 3))
        img[0, :, 0] = 1e-7 * np.exp(-0.5 * ((grid - omega0) / sigma) ** 2)
        table = GreensFunctionTable(("a",), np.zeros((1, 3)), grid, img)
        kt = compute_kernel(table, tau_max=80.0, dtau=0.1)
        assert bool(kt.decay_ok[0])
        assert bool(kt.edge_ok[0])

    def test_edge_flag_on_truncated_window(self):
        table = lorentzian_green_table(half_width=0.04)
        kt = compute_kernel(table, tau_max=10.0, dtau=0.08)
        assert not bool(kt.edge_ok[0])

    def test_dtau_refusal_suggests_value(self):
        table = lorentzian_green_table()
        with pytest.raises(ValidationError, match="use dtau <=") as err:
            compute_kernel(table, tau_max=10.0, dtau=0.5)
        suggested = float(str(err.value).rsplit("dtau <=", 1)[1].split("fs")[0])
        kt = compute_kernel(table, tau_max=2.0, dtau=suggested)
        assert kt.tau_grid.size > 2

    def test_zero_input_gives_zero_kernel(self):
        grid = np.linspace(1.0, 2.0, 101)
        table = GreensFunctionTable(
            ("a",), np.zeros((1, 3)), grid, np.zeros((1, 101, 3))
        )
        kt = compute_kernel(table, tau_max=5.0, dtau=0.1)
        assert np.abs(kt.kernel).max() == 0.0

    def test_linearity_of_transform(self):
        t_a = lorentzian_green_table(component=0)
        t_b = lorentzian_green_table(omega0=2.1, component=1)
        merged = GreensFunctionTable(
            t_a.point_ids, t_a.coordinates, t_a.omega_grid,
            t_a.im_g_projected + np.array(
                np.interp(t_a.omega_grid, t_b.omega_grid, t_b.im_g_projected[0, :, 1])
            )[None, :, None] * np.eye(3)[1][None, None, :],
        )
        k_merged = compute_kernel(merged, tau_max=20.0, dtau=0.08)
        k_a = compute_kernel(t_a, tau_max=20.0, dtau=0.08)
        resampled = GreensFunctionTable(
            t_a.point_ids, t_a.coordinates, t_a.omega_grid,
            merged.im_g_projected - t_a.im_g_projected,
        )
        k_b = compute_kernel(resampled, tau_max=20.0, dtau=0.08)
        total = k_a.kernel + k_b.kernel
        scale = np.abs(k_merged.kernel).max()
        assert np.abs(k_merged.kernel - total).max() <= 1e-14 * scale


class TestEmitterCorrelation:
    def test_zero_coupling_is_pure_phase(self):
        params = ModelParameters(
            omega=np.diag([2.0]), kappa=np.array([0.05]), g=np.array([0.0])
        )
        corr = emitter_correlation(
            params, EmitterSpec(omega_eg=2.0), t_max=20.0, dt=0.1
        )
        tau = corr.times / HBAR_EV_FS
        expected = np.exp(1j * 2.0 * (tau[:, None] - tau[None, :]))
        assert np.abs(corr.values - expected).max() < 1e-12
        assert np.abs(np.abs(corr.values) - 1.0).max() < 1e-12

    def test_diagonal_matches_population(self):
        params = ModelParameters(
            omega=np.diag([2.0]), kappa=np.array([0.02]), g=np.array([0.01])
        )
        emitter = EmitterSpec(omega_eg=2.0)
        mu = 0.5
        corr = emitter_correlation(params, emitter, t_max=50.0, dt=0.25, mu=mu)
        traj = solve_fewmode_single_excitation(params, emitter, t_max=50.0, dt=0.25)
        diag = np.real(np.diagonal(corr.values))
        assert np.abs(diag - mu**2 * traj.emitter_population).max() < 1e-12

    def test_rank1_factorization_identity(self):
        params = ModelParameters(
            omega=np.diag([2.0]), kappa=np.array([0.02]), g=np.array([0.01])
        )
        corr = emitter_correlation(
            params, EmitterSpec(omega_eg=2.0), t_max=20.0, dt=0.2
        )
        c = corr.values
        assert np.abs(c * c.T - np.abs(c) ** 2).max() < 1e-14
        assert corr.rank1_amplitude is not None

    def test_non_vacuum_field_state_unsupported(self):
        params = ModelParameters(
            omega=np.diag([2.0]), kappa=np.array([0.02]), g=np.array([0.01])
        )
        with pytest.raises(UnsupportedScenarioError, match="vacuum"):
            emitter_correlation(
                params, EmitterSpec(omega_eg=2.0), t_max=10.0, dt=0.1,
                field_state="single-photon",
            )

    def test_negative_mu_rejected(self):
        params = ModelParameters(
            omega=np.diag([2.0]), kappa=np.array([0.02]), g=np.array([0.01])
        )
        with pytest.raises(ValidationError, match="mu"):
            emitter_correlation(
                params, EmitterSpec(omega_eg=2.0), t_max=10.0, dt=0.1, mu=-1.0
            )

    def test_size_guard(self):
        params = ModelParameters(
            omega=np.diag([2.0]), kappa=np.array([0.02]), g=np.array([0.01])
        )
        with pytest.raises(ValidationError, match="coarser dt"):
            emitter_correlation(
                params, EmitterSpec(omega_eg=2.0), t_max=1000.0, dt=0.01
            )


class TestCorrelationTable:
    def test_rejects_non_hermitian(self):
        t = np.array([0.0, 1.0])
        values = np.array([[1.0, 0.5], [0.1, 1.0]], dtype=complex)
        with pytest.raises(ValidationError, match="Hermitian"):
            CorrelationTable(times=t, values=values)

    def test_rejects_negative_diagonal(self):
        t = np.array([0.0, 1.0])
        values = np.array([[1.0, 0.0], [0.0, -0.5]], dtype=complex)
        with pytest.raises(ValidationError, match="non-negative"):
            CorrelationTable(times=t, values=values)

    def test_rejects_inconsistent_rank1_flag(self):
        t = np.array([0.0, 1.0])
        values = np.eye(2, dtype=complex)
        with pytest.raises(ValidationError, match="rank1"):
            CorrelationTable(
                times=t, values=values, rank1_amplitude=np.array([1.0, 1.0 + 0j])
            )


def single_mode_setup(t_max=20.0, dt=0.1):
    params = ModelParameters(
        omega=np.diag([2.0]), kappa=np.array([0.02]), g=np.array([0.01])
    )
    emitter = EmitterSpec(omega_eg=2.0)
    corr = emitter_correlation(params, emitter, t_max=t_max, dt=dt)
    table = lorentzian_green_table()
    kernels = compute_kernel(table, tau_max=t_max + 1.0, dtau=dt)
    return params, emitter, corr, kernels


class TestFieldIntensity:
    def test_zero_correlation_gives_zero_intensity(self):
        _, _, corr, kernels = single_mode_setup()
        silent = CorrelationTable(
            times=corr.times, values=np.zeros_like(corr.values)
        )
        traces = field_intensity(kernels, silent)
        assert np.abs(traces.values).max() == 0.0

    def test_zero_kernel_point_is_dark(self):
        _, _, corr, kernels = single_mode_setup()
        stacked = FieldKernelTable(
            point_ids=("lit", "dark"),
            coordinates=np.zeros((2, 3)),
            tau_grid=kernels.tau_grid,
            kernel=np.stack([kernels.kernel[0], np.zeros_like(kernels.kernel[0])]),
            edge_ok=np.array([True, True]),
            decay_ok=np.array([False, True]),
        )
        traces = field_intensity(stacked, corr)
        assert traces.values[0].max() > 0
        assert np.abs(traces.values[1]).max() == 0.0

    def test_rank1_path_matches_generic(self):
        _, _, corr, kernels = single_mode_setup()
        fast = field_intensity(kernels, corr)
        generic = field_intensity(
            kernels, CorrelationTable(times=corr.times, values=corr.values)
        )
        scale = fast.values.max()
        assert scale > 0
        assert np.abs(fast.values - generic.values).max() < 1e-10 * scale

    def test_intensity_linear_in_correlation(self):
        _, _, corr, kernels = single_mode_setup()
        base = field_intensity(
            kernels, CorrelationTable(times=corr.times, values=corr.values)
        )
        doubled = field_intensity(
            kernels, CorrelationTable(times=corr.times, values=2.0 * corr.values)
        )
        scale = base.values.max()
        assert np.abs(doubled.values - 2.0 * base.values).max() <= 1e-14 * scale

    def test_intensity_nonnegative_and_starts_dark(self):
        _, _, corr, kernels = single_mode_setup(t_max=300.0, dt=0.1)
        traces = field_intensity(kernels, corr)
        assert traces.values.min() >= 0.0
        assert traces.values[0, 0] == 0.0

    def test_peak_trails_mode_population_within_a_cycle(self):
        params, emitter, corr, kernels = single_mode_setup(t_max=300.0, dt=0.1)
        traces = field_intensity(kernels, corr)
        traj = solve_fewmode_single_excitation(params, emitter, t_max=300.0, dt=0.1)
        t_mode = traj.times[np.argmax(traj.mode_populations[:, 0])]
        t_intensity = traces.times[np.argmax(traces.values[0])]
        cycle_fs = 2.0 * np.pi / 2.0 * HBAR_EV_FS
        assert abs(t_intensity - t_mode) < cycle_fs

    def test_step_mismatch_rejected(self):
        _, _, corr, _ = single_mode_setup()
        table = lorentzian_green_table()
        kernels = compute_kernel(table, tau_max=25.0, dtau=0.05)
        with pytest.raises(ValidationError, match="does not match"):
            field_intensity(kernels, corr)

    def test_short_kernel_window_rejected(self):
        _, _, corr, _ = single_mode_setup(t_max=20.0, dt=0.1)
        table = lorentzian_green_table()
        kernels = compute_kernel(table, tau_max=5.0, dtau=0.1)
        with pytest.raises(ValidationError, match="tau_max"):
            field_intensity(kernels, corr)


class TestIntensityMap:
    def test_single_point_reduces_to_traces(self):
        _, _, corr, kernels = single_mode_setup(t_max=100.0, dt=0.1)
        traces = field_intensity(kernels, corr)
        snap = intensity_map(kernels, corr, [20.0, 60.0])
        for k, t in enumerate(snap.times):
            j = int(round(t / 0.1))
            assert snap.values[k, 0] == traces.values[0, j]

    def test_normalization_peaks_at_one(self):
        _, _, corr, kernels = single_mode_setup(t_max=100.0, dt=0.1)
        traces = field_intensity(kernels, corr)
        t_peak = traces.times[np.argmax(traces.values[0])]
        snap = intensity_map(kernels, corr, [t_peak, 1.0], normalize=True)
        assert snap.normalized
        assert snap.values.max() == pytest.approx(1.0, abs=1e-12)
        assert np.all(snap.values <= 1.0 + 1e-12)

    def test_out_of_window_time_rejected(self):
        _, _, corr, kernels = single_mode_setup()
        with pytest.raises(ValidationError, match="outside"):
            intensity_map(kernels, corr, [500.0])

    def test_memory_guard(self, monkeypatch):
        _, _, corr, kernels = single_mode_setup()
        monkeypatch.setattr(field_mod, "_MAX_MAP_CELLS", 10)
        with pytest.raises(ValidationError, match="guard"):
            intensity_map(kernels, corr, [5.0])
